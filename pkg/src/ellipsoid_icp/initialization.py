"""Covariance-ellipsoid initialization for rigid registration.

Aligning the eigenframes of the two clouds' covariance ellipsoids pins the
rotation down to a finite ambiguity: with a simple spectrum the residual is a
coordinate-axis reflection (the 2^d diagonal sign matrices), and when noise
may swap close eigenvalues it grows to the full hyperoctahedral group of
2^d * d! signed permutations. Every candidate is scored with the
nearest-neighbor match score and the best one wins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    NEAR_DEGENERATE_GAP,
    CovarianceEllipsoid,
    PointCloud,
    RigidMotion,
    center,
    covariance,
)
from .errors import DegenerateCloudError, InvalidInputError
from .spatial import build_index, match_score

REF_MAX_DIMENSION = 16
BD_MAX_DIMENSION = 8

# Relative eigenvalue discrepancy beyond which the clouds are probably
# unrelated or heavily corrupted; only gross mismatch is flagged.
EIGENVALUE_MISMATCH_TOL = 0.20

# Two candidate scores within this relative slack count as tied.
SCORE_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class CandidateGroup:
    """Finite set of orthogonal sign/permutation matrices to search over.

    kind "ref": the 2^d diagonal +/-1 matrices (coordinate reflections).
    kind "bd": the 2^d * d! signed permutation matrices (hyperoctahedral
    group), which additionally permute the coordinate axes.
    """

    kind: str
    d: int
    elements: tuple

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True, eq=False)
class EllipsoidInitResult:
    """Initial motion from eigenframe alignment, with search diagnostics.

    The motion maps the source frame onto the target frame (forward
    convention): rotation = U0 @ U_P @ D* @ U_P.T with U0 = U_Q @ U_P.T, and
    translation = b(Q) - rotation @ b(P).
    """

    motion: RigidMotion
    chosen_element: np.ndarray
    chosen_index: int
    candidate_scores: tuple
    spectral_gaps: tuple[float, float]
    warnings: tuple[str, ...] = field(default=())


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalue diagnostics surfacing how identifiable the eigenframes are.

    Small spectral gaps mean reflection candidates alone may not contain the
    true alignment; large eigenvalue mismatch means the clouds are unlikely
    to be rigid transforms of each other.
    """

    source_eigenvalues: np.ndarray
    target_eigenvalues: np.ndarray
    source_gap: float
    target_gap: float
    max_relative_mismatch: float


def enumerate_group(d: int, kind: str) -> CandidateGroup:
    """All elements of the requested candidate group, identity first.

    Elements are exact {-1, 0, 1} matrices, enumerated deterministically:
    sign patterns in lexicographic order with +1 before -1, and for "bd"
    axis permutations in lexicographic order, signs varying fastest.
    """
    if kind not in ("ref", "bd"):
        raise InvalidInputError(f"unknown candidate group kind {kind!r}")
    limit = REF_MAX_DIMENSION if kind == "ref" else BD_MAX_DIMENSION
    if not 1 <= d <= limit:
        raise InvalidInputError(f"group {kind!r} supports 1 <= d <= {limit}, got {d}")
    elements = []
    if kind == "ref":
        for signs in itertools.product((1.0, -1.0), repeat=d):
            elements.append(np.diag(signs))
    else:
        for perm in itertools.permutations(range(d)):
            for signs in itertools.product((1.0, -1.0), repeat=d):
                w = np.zeros((d, d))
                w[perm, range(d)] = signs
                elements.append(w)
    for w in elements:
        w.flags.writeable = False
    return CandidateGroup(kind=kind, d=d, elements=tuple(elements))


def _registration_ready(cloud: PointCloud, name: str) -> CovarianceEllipsoid:
    """Validate the n >= d+1 / full-rank entry requirements; return the
    centered covariance."""
    if cloud.n < cloud.d + 1:
        raise InvalidInputError(
            f"{name} cloud needs at least d+1 = {cloud.d + 1} points, got {cloud.n}"
        )
    centered, _ = center(cloud)
    ellipsoid = covariance(centered)
    if ellipsoid.is_degenerate():
        raise DegenerateCloudError(
            f"{name} cloud is rank-deficient (eigenvalue ratio below threshold); "
            "it fits inside a lower-dimensional subspace"
        )
    return ellipsoid


def _score_subsample(cloud: PointCloud, size: int | None) -> PointCloud:
    """Deterministic evenly-spaced column subsample used only for scoring."""
    if size is None or cloud.n <= size:
        return cloud
    keep = np.unique(np.linspace(0, cloud.n - 1, size).round().astype(np.intp))
    return PointCloud(cloud.data[:, keep])


def ellipsoid_init(
    source: PointCloud,
    target: PointCloud,
    group: str | CandidateGroup = "ref",
    score_sample: int | None = None,
) -> EllipsoidInitResult:
    """Estimate a rigid motion source -> target from covariance eigenframes.

    Both clouds are centered; their covariance ellipsoids are diagonalized;
    the frame alignment U0 = U_Q @ U_P.T is refined by searching the finite
    candidate set U0 @ U_P @ D @ U_P.T over all group elements D, scoring
    each by the nearest-neighbor match of the candidate-transformed source
    against the target. Ties go to the earliest enumerated candidate.

    `score_sample` caps the number of source columns used per candidate
    score (evenly spaced, deterministic); the target index always uses the
    full cloud.
    """
    if source.d != target.d:
        raise InvalidInputError(
            f"source dimension {source.d} does not match target dimension {target.d}"
        )
    if isinstance(group, str):
        group = enumerate_group(source.d, group)
    elif group.d != source.d:
        raise InvalidInputError(
            f"candidate group dimension {group.d} does not match clouds ({source.d})"
        )

    ellipsoid_p = _registration_ready(source, "source")
    ellipsoid_q = _registration_ready(target, "target")
    centered_p, b_p = center(source)
    centered_q, b_q = center(target)

    u_p = ellipsoid_p.eigenvectors
    u_q = ellipsoid_q.eigenvectors
    u0 = u_q @ u_p.T

    warnings = []
    gaps = (ellipsoid_p.spectral_gap, ellipsoid_q.spectral_gap)
    if group.kind == "ref" and (
        ellipsoid_p.is_near_degenerate() or ellipsoid_q.is_near_degenerate()
    ):
        warnings.append(
            "near-degenerate covariance spectrum (relative gap "
            f"{min(gaps):.3e} < {NEAR_DEGENERATE_GAP:.0e}); close eigenvalues may "
            "swap under noise, consider the signed-permutation group 'bd'"
        )
    lead = ellipsoid_p.eigenvalues[0]
    mismatch = float(
        np.abs(ellipsoid_p.eigenvalues - ellipsoid_q.eigenvalues).max() / lead
    )
    if mismatch > EIGENVALUE_MISMATCH_TOL:
        warnings.append(
            f"covariance eigenvalues disagree by {mismatch:.1%} relative; the clouds "
            "are unlikely to be rigid transforms of each other or are heavily corrupted"
        )

    # One target index serves every candidate: scoring the candidate-rotated
    # source against the fixed centered target is equivalent to rotating the
    # target the other way.
    target_index = build_index(centered_q)
    scoring_p = _score_subsample(centered_p, score_sample)

    scores = np.empty(len(group))
    for i, element in enumerate(group.elements):
        rotation = u0 @ u_p @ element @ u_p.T
        moved = PointCloud(rotation @ scoring_p.data)
        scores[i] = match_score(moved, centered_q, index=target_index).score

    best = int(np.argmin(scores))
    tie_slack = SCORE_TIE_RTOL * max(scores[best], centered_q.scale * 1e-3)
    tied = int(np.count_nonzero(scores <= scores[best] + tie_slack))
    if tied > 1:
        warnings.append(
            f"{tied} candidates tie within numerical noise (symmetric cloud?); "
            "keeping the earliest enumerated one"
        )

    chosen = group.elements[best]
    rotation = u0 @ u_p @ chosen @ u_p.T
    motion = RigidMotion(rotation, b_q - rotation @ b_p)
    return EllipsoidInitResult(
        motion=motion,
        chosen_element=chosen,
        chosen_index=best,
        candidate_scores=tuple(
            (element, float(s)) for element, s in zip(group.elements, scores)
        ),
        spectral_gaps=gaps,
        warnings=tuple(warnings),
    )


def spectrum_report(source: PointCloud, target: PointCloud) -> SpectrumReport:
    """Eigenvalue agreement and spectral gaps of the two centered covariances."""
    if source.d != target.d:
        raise InvalidInputError(
            f"source dimension {source.d} does not match target dimension {target.d}"
        )
    ellipsoid_p = covariance(center(source)[0])
    ellipsoid_q = covariance(center(target)[0])
    lead = max(ellipsoid_p.eigenvalues[0], 0.0)
    if lead > 0.0:
        mismatch = float(
            np.abs(ellipsoid_p.eigenvalues - ellipsoid_q.eigenvalues).max() / lead
        )
    else:
        mismatch = 0.0 if ellipsoid_q.eigenvalues[0] <= 0.0 else math.inf
    return SpectrumReport(
        source_eigenvalues=ellipsoid_p.eigenvalues,
        target_eigenvalues=ellipsoid_q.eigenvalues,
        source_gap=ellipsoid_p.spectral_gap,
        target_gap=ellipsoid_q.spectral_gap,
        max_relative_mismatch=mismatch,
    )
