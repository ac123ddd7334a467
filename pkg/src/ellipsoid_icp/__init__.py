"""Rigid point-cloud registration with covariance-ellipsoid initialization.

The initializer aligns the principal axes of the two clouds' covariance
ellipsoids and resolves the remaining finite ambiguity (axis reflections,
optionally signed axis permutations) by nearest-neighbor scoring; classic
point-to-point ICP refines the result. A seeded Monte-Carlo harness measures
robustness against multiplicative noise, additive noise, occlusion clutter,
and their superposition.
"""

from ._version import __version__
from .cloud_io import detect_format, load_cloud, save_cloud
from .core import (
    CovarianceEllipsoid,
    PermutationMap,
    PointCloud,
    RigidMotion,
    apply_motion,
    barycenter,
    center,
    covariance,
    eigh_sorted,
    frobenius_norm,
    spectral_norm,
)
from .errors import (
    AmbiguousEstimateWarning,
    DegenerateCloudError,
    DegenerateCorrespondenceError,
    InvalidInputError,
    NumericalFailureError,
    ParseError,
    RegistrationError,
)
from .harness import (
    BatchReport,
    ExperimentConfig,
    SyntheticCloudSpec,
    compare_no_init,
    config_from_dict,
    config_from_file,
    config_to_dict,
    run_batch,
    run_experiment,
    save_plotdata,
    save_report_csv,
    save_report_json,
)
from .icp import IcpParams, IcpResult, RegistrationResult, icp, procrustes, register
from .initialization import (
    CandidateGroup,
    EllipsoidInitResult,
    SpectrumReport,
    ellipsoid_init,
    enumerate_group,
    spectrum_report,
)
from .metrics import (
    SUCCESS_THRESHOLD,
    EllipsoidDeviation,
    TrialRecord,
    ellipsoid_deviation,
    evaluate,
    success_rate,
)
from .perturb import (
    CorruptionSpec,
    Rng,
    SceneTruth,
    additive_noise,
    corrupt_scene,
    multiplicative_noise,
    occlude,
    random_cloud,
    random_orthogonal,
    random_permutation,
    random_scene,
    superpose,
)
from .spatial import MatchResult, NeighborIndex, build_index, match_score, nearest, nearest_all

__all__ = [
    "__version__",
    "AmbiguousEstimateWarning",
    "BatchReport",
    "CandidateGroup",
    "CorruptionSpec",
    "CovarianceEllipsoid",
    "DegenerateCloudError",
    "DegenerateCorrespondenceError",
    "EllipsoidDeviation",
    "EllipsoidInitResult",
    "ExperimentConfig",
    "IcpParams",
    "IcpResult",
    "InvalidInputError",
    "MatchResult",
    "NeighborIndex",
    "NumericalFailureError",
    "ParseError",
    "PermutationMap",
    "PointCloud",
    "RegistrationError",
    "RegistrationResult",
    "RigidMotion",
    "Rng",
    "SceneTruth",
    "SpectrumReport",
    "SUCCESS_THRESHOLD",
    "SyntheticCloudSpec",
    "TrialRecord",
    "additive_noise",
    "apply_motion",
    "barycenter",
    "build_index",
    "center",
    "compare_no_init",
    "config_from_dict",
    "config_from_file",
    "config_to_dict",
    "corrupt_scene",
    "covariance",
    "detect_format",
    "eigh_sorted",
    "ellipsoid_deviation",
    "ellipsoid_init",
    "enumerate_group",
    "evaluate",
    "frobenius_norm",
    "icp",
    "load_cloud",
    "match_score",
    "multiplicative_noise",
    "nearest",
    "nearest_all",
    "occlude",
    "procrustes",
    "random_cloud",
    "random_orthogonal",
    "random_permutation",
    "random_scene",
    "register",
    "run_batch",
    "run_experiment",
    "save_cloud",
    "save_plotdata",
    "save_report_csv",
    "save_report_json",
    "spectral_norm",
    "spectrum_report",
    "success_rate",
    "superpose",
]
