"""Registration quality statistics and the batch success criterion.

All cloud-distance metrics are spectral norms of difference matrices,
normalized by the spectral norm of the source cloud so they are invariant
under simultaneous rescaling of the scene.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloud, apply_motion, center, covariance, frobenius_norm, spectral_norm
from .errors import DegenerateCloudError, InvalidInputError
from .icp import RegistrationResult
from .perturb import SceneTruth

SUCCESS_THRESHOLD = 0.05


@dataclass(frozen=True)
class TrialRecord:
    """Metrics of one registration trial.

    nu            normalized corruption magnitude of the target.
    delta         normalized distance from the registered source to the
                  corrupted target over the final correspondences.
    delta_spec    normalized distance from the registered source, arranged
                  by the true permutation, to the clean target.
    delta_o       spectral distance from the recovered to the true transform.
    delta_h       fraction of final correspondences disagreeing with the
                  true permutation (None when no ground-truth bijection).
    delta_icp     improvement in `delta` contributed by ICP refinement over
                  the initialization, on the final correspondences.
    delta_icp_o   spectral distance between initial and final transforms.
    success       whether delta_spec passed the threshold.
    seconds_init / seconds_icp: wall-clock stage timings (filled by the
                  experiment harness; 0.0 when not measured).
    """

    nu: float
    delta: float
    delta_spec: float
    delta_o: float
    delta_h: float | None
    delta_icp: float
    delta_icp_o: float
    success: bool
    seconds_init: float = 0.0
    seconds_icp: float = 0.0


@dataclass(frozen=True)
class EllipsoidDeviation:
    """Normalized covariance deviation of a corrupted cloud from a clean one."""

    spectral: float
    frobenius: float


def evaluate(
    truth: SceneTruth, result: RegistrationResult, threshold: float = SUCCESS_THRESHOLD
) -> TrialRecord:
    """Score a registration result against the scene's ground truth.

    When the corrupted target has extra (clutter) columns, `delta`, the ICP
    improvement, and the correspondence mismatch are computed over the
    matched subset: the target columns selected by the final correspondences.
    """
    source = truth.source
    clean = truth.target_clean
    corrupted = truth.target
    n = source.n
    if corrupted.d != source.d:
        raise InvalidInputError(
            f"target dimension {corrupted.d} does not match source dimension {source.d}"
        )
    if corrupted.n < n:
        raise InvalidInputError(
            "corrupted target has fewer columns than the clean target; "
            "metrics assume clutter is appended, not removed"
        )
    assignment = result.correspondences.assignment
    if assignment.size != n:
        raise InvalidInputError(
            f"result carries {assignment.size} correspondences for {n} source points; "
            "truth and result refer to different scenes"
        )
    norm_p = spectral_norm(source.data)
    if norm_p == 0.0:
        raise InvalidInputError("source cloud is identically zero; metrics are undefined")

    corruption_diff = corrupted.data.copy()
    corruption_diff[:, :n] -= clean.data
    nu = spectral_norm(corruption_diff) / norm_p

    moved_final = apply_motion(result.final_motion, source).data
    moved_init = apply_motion(result.initial_motion, source).data
    matched = corrupted.data[:, assignment]
    final_distance = spectral_norm(matched - moved_final)
    init_distance = spectral_norm(matched - moved_init)
    delta = final_distance / norm_p
    delta_icp = (init_distance - final_distance) / norm_p

    arranged = np.empty_like(moved_final)
    arranged[:, truth.permutation.assignment] = moved_final
    delta_spec = spectral_norm(clean.data - arranged) / norm_p

    delta_o = spectral_norm(result.final_motion.rotation - truth.rotation)
    delta_icp_o = spectral_norm(
        result.initial_motion.rotation - result.final_motion.rotation
    )
    if truth.permutation.bijective:
        delta_h = float(np.mean(assignment != truth.permutation.assignment))
    else:
        delta_h = None

    return TrialRecord(
        nu=float(nu),
        delta=float(delta),
        delta_spec=float(delta_spec),
        delta_o=float(delta_o),
        delta_h=delta_h,
        delta_icp=float(delta_icp),
        delta_icp_o=float(delta_icp_o),
        success=bool(delta_spec <= threshold),
    )


def success_rate(records) -> float:
    """Fraction of records marked successful."""
    records = list(records)
    if not records:
        raise InvalidInputError("success rate of an empty batch is undefined")
    return sum(1 for r in records if r.success) / len(records)


def ellipsoid_deviation(clean: PointCloud, corrupted: PointCloud) -> EllipsoidDeviation:
    """Normalized deviation between the centered covariances of two clouds.

    Returns both the spectral and the Frobenius version of
    |E(corrupted) - E(clean)| / |E(clean)|.
    """
    if clean.d != corrupted.d:
        raise InvalidInputError(
            f"cloud dimensions disagree: {clean.d} vs {corrupted.d}"
        )
    e_clean = covariance(center(clean)[0]).matrix
    e_corrupted = covariance(center(corrupted)[0]).matrix
    denom_spectral = spectral_norm(e_clean)
    denom_frobenius = frobenius_norm(e_clean)
    if denom_spectral == 0.0:
        raise DegenerateCloudError("clean cloud has zero covariance; deviation undefined")
    diff = e_corrupted - e_clean
    return EllipsoidDeviation(
        spectral=spectral_norm(diff) / denom_spectral,
        frobenius=frobenius_norm(diff) / denom_frobenius,
    )
