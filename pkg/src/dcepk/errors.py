"""Exception types shared across the package."""


class DcepkError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DcepkError):
    """Malformed or inconsistent inputs (shape mismatch, bad values, bad config)."""


class OutOfRangeError(DcepkError):
    """Requested time points lie outside the sampled input-function range."""


class NumericDomainError(DcepkError):
    """A computation left its valid numeric domain (non-finite or non-physical values)."""


class DegenerateFitError(DcepkError):
    """The least-squares normal matrix is singular or nearly so."""


class InfinitePsnrError(NumericDomainError):
    """Zero mean-squared error makes PSNR unbounded; raised instead of returning inf."""


class ContainerError(DcepkError):
    """Base class for array-container file problems."""


class ContainerHeaderError(ContainerError):
    """The container header is corrupt: bad magic, truncated, or malformed JSON/fields."""


class ContainerSchemaError(ContainerError):
    """The container declares a schema version this code does not know."""


class ContainerFormatError(ContainerError):
    """The container declares an unsupported storage format (byte order, element type)."""


class ContainerLengthError(ContainerError):
    """Payload byte length disagrees with the header dims and element size."""
