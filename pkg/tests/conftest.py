"""Shared fixtures: bundled clouds, seeded generators, asymmetric test blobs."""

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ellipsoid_icp import PointCloud, Rng, load_cloud

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

DATA_DIR = Path(__file__).resolve().parents[1] / "data" / "clouds"


def gaussian_blob(seed: int, n: int = 80, d: int = 3, scales=None) -> PointCloud:
    """Centered anisotropic Gaussian cloud with well-separated eigenvalues."""
    gen = np.random.default_rng(seed)
    if scales is None:
        scales = np.linspace(3.0, 1.0, d)
    data = gen.standard_normal((d, n)) * np.asarray(scales)[:, None]
    return PointCloud(data - data.mean(axis=1, keepdims=True))


@pytest.fixture(scope="session")
def pot() -> PointCloud:
    return load_cloud(DATA_DIR / "pot.xyz")


@pytest.fixture(scope="session")
def pebble() -> PointCloud:
    return load_cloud(DATA_DIR / "pebble.xyz")


@pytest.fixture(scope="session")
def wedge() -> PointCloud:
    return load_cloud(DATA_DIR / "wedge.xyz")


@pytest.fixture
def rng() -> Rng:
    return Rng(20260814)
