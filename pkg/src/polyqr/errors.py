"""Exception taxonomy shared across the package.

The split matters to the CLI, which maps these onto distinct exit codes:
bad values in a request (ParameterError) are the caller's fault, infeasible
but well-formed requests (InfeasibleError and friends) mean the math cannot
be done with what was asked for, and ConditioningError marks a numerical
failure discovered mid-computation.
"""


class PolyqrError(Exception):
    """Base class for every error raised deliberately by this package."""


class ParameterError(PolyqrError, ValueError):
    """A parameter value is invalid on its face (wrong range, wrong parity,
    unknown configuration key, malformed input file)."""


class DegenerateGridError(ParameterError):
    """Interpolation points coincide, so no fitting problem exists."""


class InfeasibleError(PolyqrError):
    """Parameters are individually valid but jointly impossible, e.g. more
    base tones than available tones, or an empty target set."""


class UnsupportedRegimeError(InfeasibleError):
    """A specialized engine cannot serve this request (non-equidistant grid,
    degree bounds outside the pruned-FFT regime). Callers may fall back to
    the direct engine."""


class MissingDataError(PolyqrError):
    """An operation needs data the caller did not supply, e.g. the inverse
    mapping of a rank-deficient system without the residual columns."""


class ConditioningError(PolyqrError, ArithmeticError):
    """A linear system is too ill-conditioned to trust (estimate above the
    configured threshold), or a numeric invariant failed at run time."""
