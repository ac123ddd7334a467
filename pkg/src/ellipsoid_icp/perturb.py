"""Scene generation and corruption models for registration experiments.

A scene is a source cloud P, a ground-truth orthogonal transform O and column
permutation S with clean target Q = O P S (columns arranged by S), and a
corrupted target Q'. Corruption stacks in a fixed order: multiplicative
noise, then additive noise, then occlusion clutter.

Randomness comes from a splittable counter-based generator: every consumer
derives a named child stream by hashing (seed, path), so adding a stage or
reordering trials never perturbs the draws of another stage.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .core import PermutationMap, PointCloud
from .errors import InvalidInputError


@dataclass(frozen=True)
class Rng:
    """Deterministic splittable random source.

    A child stream is addressed by a path of strings/ints under a 64-bit
    seed; the (seed, path) pair is hashed to a 128-bit counter-based
    generator key, so streams are independent and platform-stable.
    """

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must fit in 64 bits")
        for part in self.path:
            if not isinstance(part, (str, int)):
                raise InvalidInputError(f"rng path parts must be str or int, got {part!r}")

    def child(self, *parts) -> "Rng":
        return Rng(self.seed, self.path + parts)

    def generator(self) -> np.random.Generator:
        digest = hashlib.sha256(
            json.dumps([int(self.seed), *self.path], separators=(",", ":")).encode()
        ).digest()
        key = int.from_bytes(digest[:16], "little")
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class CorruptionSpec:
    """Parameters of the stacked corruption pipeline; zeros mean 'skip stage'."""

    multiplicative_sigma: float = 0.0
    additive_sigma: float = 0.0
    occlusion_alpha: float = 0.0

    def __post_init__(self):
        for name in ("multiplicative_sigma", "additive_sigma", "occlusion_alpha"):
            if getattr(self, name) < 0.0:
                raise InvalidInputError(f"{name} must be non-negative")

    @property
    def is_clean(self) -> bool:
        return (
            self.multiplicative_sigma == 0.0
            and self.additive_sigma == 0.0
            and self.occlusion_alpha == 0.0
        )


@dataclass(frozen=True, eq=False)
class SceneTruth:
    """Ground truth of one synthetic registration problem.

    `permutation` maps source column s to target column a[s], so
    target_clean[:, a[s]] = rotation @ source[:, s] exactly. `target` is the
    corrupted cloud actually handed to the solver (equal to `target_clean`
    when the corruption spec is clean).
    """

    rotation: np.ndarray
    permutation: PermutationMap
    source: PointCloud
    target_clean: PointCloud
    target: PointCloud
    corruption: CorruptionSpec


def random_cloud(n: int, d: int, half_width: float, rng: Rng) -> PointCloud:
    """n points with i.i.d. coordinates uniform in [-half_width, half_width]."""
    if n < 1 or d < 1:
        raise InvalidInputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if half_width <= 0.0:
        raise InvalidInputError("half_width must be positive")
    gen = rng.generator()
    return PointCloud(gen.uniform(-half_width, half_width, size=(d, n)))


def random_orthogonal(d: int, rng: Rng) -> np.ndarray:
    """Haar-uniform matrix on O(d): QR of a Gaussian matrix, sign-corrected,
    determinant sign drawn by a fair coin."""
    if d < 1:
        raise InvalidInputError("dimension must be at least 1")
    gen = rng.generator()
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    q = q * signs
    desired = -1.0 if gen.integers(0, 2) else 1.0
    if np.linalg.det(q) * desired < 0.0:
        q[:, -1] = -q[:, -1]
    return q


def random_permutation(n: int, rng: Rng) -> PermutationMap:
    """Uniform permutation of 0..n-1."""
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    return PermutationMap(rng.generator().permutation(n), bijective=True)


def random_scene(source: PointCloud, rng: Rng) -> SceneTruth:
    """Draw O and S and assemble the exact clean target Q = O P S."""
    rotation = random_orthogonal(source.d, rng.child("rotation"))
    permutation = random_permutation(source.n, rng.child("permutation"))
    arranged = np.empty_like(source.data)
    arranged[:, permutation.assignment] = rotation @ source.data
    target = PointCloud(arranged)
    return SceneTruth(
        rotation=rotation,
        permutation=permutation,
        source=source,
        target_clean=target,
        target=target,
        corruption=CorruptionSpec(),
    )


def multiplicative_noise(cloud: PointCloud, sigma: float, rng: Rng) -> PointCloud:
    """Elementwise product with an i.i.d. Gaussian(1, sigma^2) mask."""
    if sigma < 0.0:
        raise InvalidInputError("sigma must be non-negative")
    if sigma == 0.0:
        return cloud
    mask = rng.generator().normal(1.0, sigma, size=cloud.data.shape)
    return PointCloud(cloud.data * mask)


def additive_noise(cloud: PointCloud, sigma: float, rng: Rng) -> PointCloud:
    """Add i.i.d. Gaussian(0, sigma^2) to every coordinate."""
    if sigma < 0.0:
        raise InvalidInputError("sigma must be non-negative")
    if sigma == 0.0:
        return cloud
    noise = rng.generator().normal(0.0, sigma, size=cloud.data.shape)
    return PointCloud(cloud.data + noise)


def occlude(
    cloud: PointCloud, alpha: float, rng: Rng, remove_fraction: float = 0.0
) -> PointCloud:
    """Append floor(alpha * n) clutter points uniform in the bounding box.

    Original columns are preserved in place, clutter is appended after them.
    `remove_fraction` optionally drops that fraction of original columns
    first (uniformly without replacement, survivors keep their order); it is
    off by default and not part of the standard corruption pipeline.
    """
    if alpha < 0.0:
        raise InvalidInputError("alpha must be non-negative")
    if not 0.0 <= remove_fraction <= 1.0:
        raise InvalidInputError("remove_fraction must lie in [0, 1]")
    gen = rng.generator()
    data = cloud.data
    n = cloud.n
    extra = int(alpha * n)
    lo = data.min(axis=1)
    hi = data.max(axis=1)
    if remove_fraction > 0.0:
        drop = int(remove_fraction * n)
        if drop >= n:
            raise InvalidInputError("remove_fraction would drop every point")
        doomed = gen.choice(n, size=drop, replace=False)
        keep = np.setdiff1d(np.arange(n), doomed)
        data = data[:, keep]
    if extra == 0:
        return PointCloud(data) if data is not cloud.data else cloud
    clutter = gen.uniform(lo, hi, size=(extra, cloud.d)).T
    return PointCloud(np.hstack([data, clutter]))


def superpose(cloud: PointCloud, spec: CorruptionSpec, rng: Rng) -> PointCloud:
    """Apply the corruption stages of `spec` in the fixed pipeline order.

    Stages draw from named child streams ("multiplicative", "additive",
    "occlusion"), so a single-stage spec reproduces the direct generator
    call on the same child seed, and enabling one stage never changes
    another's draws.
    """
    out = cloud
    if spec.multiplicative_sigma > 0.0:
        out = multiplicative_noise(out, spec.multiplicative_sigma, rng.child("multiplicative"))
    if spec.additive_sigma > 0.0:
        out = additive_noise(out, spec.additive_sigma, rng.child("additive"))
    if spec.occlusion_alpha > 0.0:
        out = occlude(out, spec.occlusion_alpha, rng.child("occlusion"))
    return out


def corrupt_scene(scene: SceneTruth, spec: CorruptionSpec, rng: Rng) -> SceneTruth:
    """Scene with the clean target replaced by its corrupted version."""
    return dataclasses.replace(
        scene,
        target=superpose(scene.target_clean, spec, rng),
        corruption=spec,
    )
