"""Exception types shared across the package."""


class MvclustError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(MvclustError, ValueError):
    """Operands have incompatible shapes; message names both shapes."""


class NumericalError(MvclustError, ArithmeticError):
    """A computation produced or received non-finite values."""


class DataFormatError(MvclustError, ValueError):
    """A dataset directory or file violates the documented format."""


class ConfigError(MvclustError, ValueError):
    """A run configuration is malformed or fails validation."""
