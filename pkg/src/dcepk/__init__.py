"""Pharmacokinetic modeling and direct parameter reconstruction for DCE-MRI."""

from .errors import (
    ContainerError,
    ContainerFormatError,
    ContainerHeaderError,
    ContainerLengthError,
    ContainerSchemaError,
    DcepkError,
    DegenerateFitError,
    InfinitePsnrError,
    InvalidInputError,
    NumericDomainError,
    OutOfRangeError,
)
from .types import (
    AcquisitionContext,
    DynamicSeries,
    KSpaceSeries,
    PKMaps,
    SamplingMask,
    VascularInputFunction,
)

__version__ = "0.1.0"

__all__ = [
    "ContainerError",
    "ContainerFormatError",
    "ContainerHeaderError",
    "ContainerLengthError",
    "ContainerSchemaError",
    "DcepkError",
    "DegenerateFitError",
    "InfinitePsnrError",
    "InvalidInputError",
    "NumericDomainError",
    "OutOfRangeError",
    "AcquisitionContext",
    "DynamicSeries",
    "KSpaceSeries",
    "PKMaps",
    "SamplingMask",
    "VascularInputFunction",
    "__version__",
]
