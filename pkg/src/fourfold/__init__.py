"""Wave-optics simulation of a 4f-correlator optical frontend for CNNs."""

from fourfold.errors import (
    ConfigError,
    DegenerateKernelError,
    FourfoldError,
    GamutError,
    GeometryError,
    InvalidInputError,
    NumericError,
    ShapeError,
)
from fourfold.field import (
    ComplexField,
    GridSpec,
    field_from_image,
    intensity,
    total_power,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "ConfigError",
    "DegenerateKernelError",
    "FourfoldError",
    "GamutError",
    "GeometryError",
    "GridSpec",
    "InvalidInputError",
    "NumericError",
    "ShapeError",
    "field_from_image",
    "intensity",
    "total_power",
]
