"""Point clouds, rigid motions, and the small dense linear algebra everything else uses.

Clouds are d x n matrices whose columns are points. Covariances are the raw
second-moment matrices X @ X.T of the cloud as given (no 1/n factor); callers
that need the moment about the centroid center the cloud first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

# Relative thresholds, overridable wherever they are consumed.
# A cloud is degenerate when lambda_d / lambda_1 falls below the ratio; a
# spectrum is near-degenerate when the smallest adjacent gap (relative to
# lambda_1) falls below the gap threshold.
DEGENERATE_EIGENVALUE_RATIO = 1e-9
NEAR_DEGENERATE_GAP = 1e-6

ORTHOGONALITY_TOL = 1e-10
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A d x n matrix of column points (n >= 1, every entry finite)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float, order="C", copy=True)
        if arr.ndim != 2:
            raise InvalidInputError(f"cloud data must be 2-D, got shape {arr.shape}")
        d, n = arr.shape
        if d < 1 or n < 1:
            raise InvalidInputError(f"cloud must be at least 1x1, got {d}x{n}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("cloud contains non-finite coordinates")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def scale(self) -> float:
        """Largest absolute coordinate; the reference for absolute tolerances."""
        return float(np.abs(self.data).max())

    @classmethod
    def from_rows(cls, rows) -> "PointCloud":
        """Build from an n x d array of row points."""
        return cls(np.asarray(rows, dtype=float).T)


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """x -> rotation @ x + translation, with rotation in O(d) (reflections allowed)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float, copy=True)
        tr = np.array(self.translation, dtype=float, copy=True).reshape(-1)
        if rot.ndim != 2 or rot.shape[0] != rot.shape[1]:
            raise InvalidInputError(f"rotation must be square, got shape {rot.shape}")
        if tr.shape[0] != rot.shape[0]:
            raise InvalidInputError("translation length must match rotation dimension")
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(tr))):
            raise InvalidInputError("motion contains non-finite entries")
        residual = np.abs(rot.T @ rot - np.eye(rot.shape[0])).max()
        if residual > ORTHOGONALITY_TOL:
            raise InvalidInputError(
                f"rotation is not orthogonal: max |R^T R - I| = {residual:.3e}"
            )
        rot.flags.writeable = False
        tr.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @property
    def d(self) -> int:
        return self.rotation.shape[0]

    @classmethod
    def identity(cls, d: int) -> "RigidMotion":
        return cls(np.eye(d), np.zeros(d))

    def inverse(self) -> "RigidMotion":
        return RigidMotion(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """Motion equal to applying `other` first, then `self`."""
        return RigidMotion(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


@dataclass(frozen=True, eq=False)
class CovarianceEllipsoid:
    """Symmetric PSD matrix with its eigendecomposition, eigenvalues descending."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    spectral_gap: float

    def is_degenerate(self, ratio: float = DEGENERATE_EIGENVALUE_RATIO) -> bool:
        lead = self.eigenvalues[0]
        if lead <= 0.0:
            return True
        return bool(self.eigenvalues[-1] < ratio * lead)

    def is_near_degenerate(self, gap: float = NEAR_DEGENERATE_GAP) -> bool:
        return self.spectral_gap < gap


@dataclass(frozen=True, eq=False)
class PermutationMap:
    """Source column index -> target column index.

    `bijective` is False for assignments produced by nearest-neighbor matching,
    which may repeat targets or map between clouds of unequal cardinality.
    """

    assignment: np.ndarray
    bijective: bool = True

    def __post_init__(self):
        arr = np.array(self.assignment, dtype=np.intp, copy=True).reshape(-1)
        if arr.size < 1:
            raise InvalidInputError("assignment must be nonempty")
        if self.bijective:
            n = arr.size
            if not np.array_equal(np.sort(arr), np.arange(n)):
                raise InvalidInputError("bijective assignment must be a permutation of 0..n-1")
        elif arr.min() < 0:
            raise InvalidInputError("assignment indices must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "assignment", arr)

    def __len__(self) -> int:
        return int(self.assignment.size)


def barycenter(cloud: PointCloud) -> np.ndarray:
    """Mean of the columns."""
    return cloud.data.mean(axis=1)


def center(cloud: PointCloud) -> tuple[PointCloud, np.ndarray]:
    """Translate the cloud so its barycenter is at the origin.

    Returns the centered cloud and the removed barycenter.
    """
    b = barycenter(cloud)
    return PointCloud(cloud.data - b[:, None]), b


def spectral_gap_of(eigenvalues: np.ndarray) -> float:
    """Smallest adjacent eigenvalue gap relative to the leading eigenvalue.

    Returns inf for 1-D spectra (no adjacent pair) and 0 for a zero spectrum.
    """
    values = np.asarray(eigenvalues, dtype=float)
    if values.size < 2:
        return math.inf
    lead = values[0]
    if lead <= 0.0:
        return 0.0
    return float(np.min(values[:-1] - values[1:]) / lead)


def eigh_sorted(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Eigenvector signs are fixed deterministically: the largest-magnitude entry
    of each column is made positive, ties broken by lowest row index.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    scale = np.abs(m).max()
    asym = np.abs(m - m.T).max()
    if asym > SYMMETRY_TOL * max(scale, 1.0):
        raise InvalidInputError(f"matrix is not symmetric: max |A - A^T| = {asym:.3e}")
    sym = 0.5 * (m + m.T)
    try:
        values, vectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    order = np.arange(values.size - 1, -1, -1)
    values = values[order]
    vectors = vectors[:, order]
    # argmax returns the first maximum, which is the lowest-index tie-break
    anchors = np.argmax(np.abs(vectors), axis=0)
    flips = vectors[anchors, np.arange(vectors.shape[1])] < 0.0
    vectors = vectors * np.where(flips, -1.0, 1.0)
    return values, vectors


def covariance(cloud: PointCloud) -> CovarianceEllipsoid:
    """Second-moment matrix X @ X.T of the cloud as given, with its spectrum.

    The cloud is not centered here; center it first to get the moment about
    the centroid.
    """
    x = cloud.data
    matrix = x @ x.T
    values, vectors = eigh_sorted(matrix)
    # X X^T is PSD; clip the tiny negative eigenvalues round-off can produce
    floor = -1e-12 * max(values[0], 0.0)
    values = np.where((values < 0.0) & (values >= floor), 0.0, values)
    return CovarianceEllipsoid(
        matrix=matrix,
        eigenvalues=values,
        eigenvectors=vectors,
        spectral_gap=spectral_gap_of(values),
    )


def spectral_norm(matrix: np.ndarray) -> float:
    """Largest singular value."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    if not m.any():
        return 0.0
    try:
        return float(np.linalg.norm(m, 2))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD failed: {exc}") from exc


def frobenius_norm(matrix: np.ndarray) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(matrix, dtype=float)))


def apply_motion(motion: RigidMotion, cloud: PointCloud) -> PointCloud:
    """Map every column x to rotation @ x + translation."""
    if motion.d != cloud.d:
        raise InvalidInputError(
            f"motion dimension {motion.d} does not match cloud dimension {cloud.d}"
        )
    return PointCloud(motion.rotation @ cloud.data + motion.translation[:, None])
