"""Exception hierarchy.

The CLI maps these onto its exit codes: configuration-type errors exit 2,
``NumericError`` exits 4.
"""


class FourfoldError(Exception):
    pass


class InvalidInputError(FourfoldError, ValueError):
    pass


class GeometryError(FourfoldError, ValueError):
    """A size, aperture or binning ratio that does not fit the grid."""


class ShapeError(FourfoldError, ValueError):
    """Two arrays or grids that must agree do not."""


class GamutError(FourfoldError, ValueError):
    """Complex transmittance outside the closed unit disk."""


class DegenerateKernelError(FourfoldError, ValueError):
    pass


class ConfigError(FourfoldError, ValueError):
    pass


class NumericError(FourfoldError, ArithmeticError):
    """Non-finite values appeared in a computation."""
