"""Exception and warning types shared across the toolkit."""


class RegistrationError(Exception):
    """Base class for all toolkit-specific errors."""


class InvalidInputError(RegistrationError, ValueError):
    """An argument violates the operation's contract."""


class NumericalFailureError(RegistrationError):
    """A numerical routine (eigensolver, SVD) failed to converge."""


class DegenerateCloudError(RegistrationError):
    """Cloud fits inside a lower-dimensional subspace (rank-deficient covariance)."""


class DegenerateCorrespondenceError(RegistrationError):
    """All source points matched a single target point; no motion can be estimated."""


class ParseError(RegistrationError):
    """A cloud or config file could not be parsed."""

    def __init__(self, message: str, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class AmbiguousEstimateWarning(RuntimeWarning):
    """The rotation estimate is not unique (rank-deficient cross-covariance)."""
