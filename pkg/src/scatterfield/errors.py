"""Exception types shared across the package.

Every error the CLI can surface carries a distinct exit code so shell
pipelines can branch on failure category.
"""


class ScatterFieldError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidArgumentError(ScatterFieldError, ValueError):
    """A caller-supplied value violates a documented precondition."""

    exit_code = 2


class DegenerateMediumError(ScatterFieldError, ValueError):
    """Medium has no interaction at all (mu_a = 0 and mu_s(1-g) = 0)."""

    exit_code = 3


class NeedsRegularizationError(ScatterFieldError, ValueError):
    """Green profile requested with mu_a <= 0; caller must apply a floor."""

    exit_code = 4


class KernelTooLargeError(ScatterFieldError, ValueError):
    """Rasterized diffuse kernel would exceed the configured width cap."""

    exit_code = 5


class BudgetExceededError(ScatterFieldError, ValueError):
    """Dense 4-D convolution size product exceeds the test-scale budget."""

    exit_code = 6


class ManifestError(ScatterFieldError, ValueError):
    """Light-field manifest failed validation."""

    exit_code = 7


class SchemaVersionError(ManifestError):
    """Manifest or scene declares an unknown schema version."""

    exit_code = 8


class MissingFileError(ManifestError):
    """A file referenced by a manifest does not exist."""

    exit_code = 9


class DimensionMismatchError(ManifestError):
    """A referenced image does not match the declared dimensions."""

    exit_code = 10


class ImageIOError(ScatterFieldError, OSError):
    """Reading or writing an image file failed."""

    exit_code = 11
