"""Iterative closest point with closed-form orthogonal-Procrustes re-estimation.

Each iteration matches the transformed source to its nearest target points,
then re-estimates the best rigid motion for those pairs from the SVD of the
cross-covariance. The motion estimate is optimal for its correspondences and
re-matching can only tighten them, so the cost trace never increases.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .core import PermutationMap, PointCloud, RigidMotion, apply_motion
from .errors import (
    AmbiguousEstimateWarning,
    DegenerateCorrespondenceError,
    InvalidInputError,
    NumericalFailureError,
)
from .initialization import CandidateGroup, EllipsoidInitResult, ellipsoid_init
from .spatial import build_index, nearest_all

RANK_DEFICIENT_SV_RATIO = 1e-12


@dataclass(frozen=True)
class IcpParams:
    """Termination and estimation knobs for the ICP loop.

    The loop stops when the relative cost improvement drops below
    `relative_tolerance`, when the cost falls under `cost_floor_scale` times
    the cloud scale, or after `max_iterations`. With `allow_reflections` the
    motion estimate ranges over all orthogonal matrices; without it, over
    proper rotations only.
    """

    max_iterations: int = 100
    relative_tolerance: float = 1e-8
    cost_floor_scale: float = 1e-12
    allow_reflections: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be at least 1")
        if self.relative_tolerance <= 0.0 or self.cost_floor_scale <= 0.0:
            raise InvalidInputError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class IcpResult:
    """Best motion seen, final correspondences, and the per-iteration cost trace."""

    motion: RigidMotion
    correspondences: PermutationMap
    cost_trace: tuple
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    """Initialization followed by ICP, keeping both stages' motions.

    The initial and final motions together measure how much work the ICP
    refinement did on top of the starting guess. `initialization` is None
    when ICP was started from a caller-supplied motion (e.g. identity)
    rather than from eigenframe alignment; `initial_motion` is that starting
    motion either way.
    """

    initialization: EllipsoidInitResult | None
    icp: IcpResult
    initial_motion: RigidMotion

    @property
    def final_motion(self) -> RigidMotion:
        return self.icp.motion

    @property
    def correspondences(self) -> PermutationMap:
        return self.icp.correspondences


def _procrustes_arrays(x: np.ndarray, y: np.ndarray, allow_reflections: bool) -> np.ndarray:
    """Optimal orthogonal R for centered paired columns: argmin sum |R x_i - y_i|^2."""
    cross = y @ x.T
    try:
        u, singulars, vt = np.linalg.svd(cross)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD of cross-covariance failed: {exc}") from exc
    if allow_reflections:
        return u @ vt
    if singulars[-1] <= RANK_DEFICIENT_SV_RATIO * max(singulars[0], 0.0) or singulars[0] == 0.0:
        _warnings.warn(
            "cross-covariance is rank-deficient; the determinant-corrected "
            "rotation is not unique",
            AmbiguousEstimateWarning,
            stacklevel=3,
        )
    sign = np.sign(np.linalg.det(u @ vt))
    if sign == 0.0:
        sign = 1.0
    correction = np.ones(x.shape[0])
    correction[-1] = sign
    return (u * correction) @ vt


def procrustes(
    source_pts: PointCloud, target_pts: PointCloud, allow_reflections: bool = True
) -> np.ndarray:
    """Orthogonal matrix minimizing the summed squared pair distances.

    Both clouds must be centered by the caller and paired column-by-column.
    The estimate ranges over all of O(d), or over proper rotations when
    `allow_reflections` is false (determinant correction on the smallest
    singular direction).
    """
    if source_pts.d != target_pts.d:
        raise InvalidInputError(
            f"paired clouds disagree in dimension: {source_pts.d} vs {target_pts.d}"
        )
    if source_pts.n != target_pts.n:
        raise InvalidInputError(
            f"paired clouds disagree in cardinality: {source_pts.n} vs {target_pts.n}"
        )
    return _procrustes_arrays(source_pts.data, target_pts.data, allow_reflections)


def _estimate_from_pairs(
    source: PointCloud, target: PointCloud, assignment: np.ndarray, allow_reflections: bool
) -> RigidMotion:
    """Absolute motion fitting source columns onto their assigned target columns."""
    x = source.data
    y = target.data[:, assignment]
    xb = x.mean(axis=1)
    yb = y.mean(axis=1)
    rotation = _procrustes_arrays(x - xb[:, None], y - yb[:, None], allow_reflections)
    return RigidMotion(rotation, yb - rotation @ xb)


def icp(
    source: PointCloud,
    target: PointCloud,
    init: RigidMotion | None = None,
    params: IcpParams = IcpParams(),
) -> IcpResult:
    """Refine a rigid motion source -> target by alternating match/estimate.

    Starts from `init` (identity when omitted). Returns the best motion seen
    rather than the last one, guarding against terminal oscillation at
    tolerance scale.
    """
    if source.d != target.d:
        raise InvalidInputError(
            f"source dimension {source.d} does not match target dimension {target.d}"
        )
    if init is None:
        init = RigidMotion.identity(source.d)
    if init.d != source.d:
        raise InvalidInputError(
            f"init motion dimension {init.d} does not match clouds ({source.d})"
        )

    index = build_index(target)
    cost_floor = params.cost_floor_scale * max(source.scale, target.scale)

    current = init
    trace = []
    best_cost = np.inf
    best_motion = init
    best_assignment = None
    previous = None
    converged = False
    iterations = 0

    for _ in range(params.max_iterations):
        iterations += 1
        moved = apply_motion(current, source)
        assignment, distances = nearest_all(index, moved)
        cost = float(np.sqrt((distances**2).mean()))
        trace.append(cost)
        if cost < best_cost:
            best_cost = cost
            best_motion = current
            best_assignment = assignment
        if source.n > 1 and np.all(assignment == assignment[0]):
            raise DegenerateCorrespondenceError(
                "every source point matched the same target point; "
                "no rigid motion can be estimated from these correspondences"
            )
        if cost <= cost_floor:
            converged = True
            break
        if previous is not None and previous - cost <= params.relative_tolerance * previous:
            converged = True
            break
        previous = cost
        current = _estimate_from_pairs(source, target, assignment, params.allow_reflections)

    return IcpResult(
        motion=best_motion,
        correspondences=PermutationMap(best_assignment, bijective=False),
        cost_trace=tuple(trace),
        iterations=iterations,
        converged=converged,
    )


def register(
    source: PointCloud,
    target: PointCloud,
    group: str | CandidateGroup = "ref",
    params: IcpParams = IcpParams(),
    score_sample: int | None = None,
) -> RegistrationResult:
    """Full pipeline: ellipsoid initialization, then ICP refinement."""
    initialization = ellipsoid_init(source, target, group=group, score_sample=score_sample)
    refined = icp(source, target, init=initialization.motion, params=params)
    return RegistrationResult(
        initialization=initialization,
        icp=refined,
        initial_motion=initialization.motion,
    )
