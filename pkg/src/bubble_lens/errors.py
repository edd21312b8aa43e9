"""Exception hierarchy for bubble-lens.

Every raisable condition gets its own class so callers can react per
failure mode; all inherit from BubbleLensError for blanket handling
(the CLI maps BubbleLensError to exit code 1).
"""


class BubbleLensError(Exception):
    """Base class for all bubble-lens errors."""


# -- time series ingestion ---------------------------------------------------

class MalformedRow(BubbleLensError):
    """A CSV row (or header) could not be parsed."""


class NonPositivePrice(BubbleLensError):
    """A price was zero, negative, or non-finite; log-price is undefined."""


class EmptySeries(BubbleLensError):
    """Fewer valid observations than the 30-row minimum."""


class DuplicateDate(BubbleLensError):
    """The same calendar date appeared more than once."""


class WindowOutOfRange(BubbleLensError):
    """Window indices are inverted or fall outside the series."""


# -- model calibration -------------------------------------------------------

class TimeAtOrPastCritical(BubbleLensError):
    """Model evaluation requested at t >= tc where (tc - t)^beta is undefined."""


class InvalidNonlinearParams(BubbleLensError):
    """(tc, beta, omega) outside the admissible region for a design matrix."""


class RankDeficient(BubbleLensError):
    """Design matrix has rank < 4; the linear subproblem is degenerate."""


class AllGridPointsDegenerate(BubbleLensError):
    """Every grid point produced a rank-deficient linear system."""


class WindowTooShort(BubbleLensError):
    """Calibration window has fewer than the 30-observation minimum."""


# -- inception scan ----------------------------------------------------------

class DegenerateDof(BubbleLensError):
    """Residual normalization with N <= k free parameters."""


class TooFewCandidates(BubbleLensError):
    """Regularization slope needs at least 3 scanned candidates."""


class ZeroVariance(BubbleLensError):
    """All candidate window sizes are equal; regression slope undefined."""


class ScanEmpty(BubbleLensError):
    """Every candidate window failed to fit."""


# -- diagnostics -------------------------------------------------------------

class InvalidTc(BubbleLensError):
    """Critical time does not lie beyond the observed range."""


class DegenerateTrend(BubbleLensError):
    """Power-law detrending failed for every trend exponent."""


class ZeroVarianceResiduals(BubbleLensError):
    """Residuals are constant; spectral normalization is undefined."""


class InvalidQ(BubbleLensError):
    """Time-contraction factor q outside (0, 1)."""


class InsufficientRange(BubbleLensError):
    """No time point admits the contracted-time difference operator."""


# -- surrogates and synthesis ------------------------------------------------

class InvalidModelParams(BubbleLensError):
    """Null-model parameters outside their admissible ranges."""


class InvalidPlantedParams(BubbleLensError):
    """Synthetic-series parameters violate the model constraints."""
