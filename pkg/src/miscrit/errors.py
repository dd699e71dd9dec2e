"""Exception and warning types shared across the package."""


class MiscritError(Exception):
    """Base class for numerical and model failures."""


class NonFiniteLinkError(MiscritError):
    """A link evaluation received or produced a non-finite value."""


class DesignRankError(MiscritError):
    """The design matrix does not have full column rank."""


class DispersionError(MiscritError):
    """The linear-model dispersion is undefined (n <= d) or degenerate (RSS == 0)."""


class ModelDegenerateError(MiscritError):
    """The model-based information matrix is not positive definite."""


class DecompositionUndefinedError(MiscritError):
    """The SIC decomposition needs a positive definite outer-product matrix."""


class TooManyPredictorsError(MiscritError):
    """Exhaustive subset enumeration was requested for too many predictors."""


class SelectionImpossibleError(MiscritError):
    """Every candidate model failed to fit."""


class DataValidationError(MiscritError, ValueError):
    """Response or covariate values are incompatible with the requested family."""


class SeparationWarning(RuntimeWarning):
    """Logistic responses appear (quasi-)completely separated."""
