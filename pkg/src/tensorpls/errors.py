"""Exception classes shared across the package.

The CLI maps these onto distinct exit codes, so keep the split between
"file/parse" problems and "shape/numerical" problems intact.
"""


class TensorplsError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatchError(TensorplsError, ValueError):
    """Operands have incompatible shapes or modes out of range."""


class RankError(TensorplsError, ValueError):
    """A requested rank/loading count is outside the valid range."""


class DegenerateDataError(TensorplsError, ValueError):
    """Input data carries no usable signal (all-zero response, zero matrix)."""


class SvdConvergenceError(TensorplsError, RuntimeError):
    """The SVD iteration failed to converge."""


class FileFormatError(TensorplsError, ValueError):
    """An on-disk tensor or model file failed to parse or verify."""
