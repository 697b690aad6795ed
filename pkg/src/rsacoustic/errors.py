"""Exception types raised across the package."""


class RSAcousticError(Exception):
    """Base class for all package errors."""


class RangeError(RSAcousticError, ValueError):
    """A scalar argument lies outside its admissible range."""


class InputError(RSAcousticError, ValueError):
    """Malformed or empty input data."""


class ConfigurationError(RSAcousticError, ValueError):
    """Inconsistent camera or experiment configuration."""


class TimingError(ConfigurationError):
    """Shutter timing that cannot exist on a real sensor (e.g. eta_cap > 1)."""


class SingularityError(RSAcousticError, ZeroDivisionError):
    """A formula would divide by zero."""


class CoverageError(RSAcousticError, ValueError):
    """A motion trace does not span the exposure windows it is asked for."""


class MarginError(RSAcousticError, ValueError):
    """Pixel displacement exceeds the scene margin."""


class DegenerateSceneError(RSAcousticError, ValueError):
    """Reference image has no texture to register against."""


class UnderdeterminedError(RSAcousticError, ValueError):
    """Linear system has no unique solution."""


class MaskError(RSAcousticError, ValueError):
    """Activity mask is all-active or all-inactive."""


class InfeasibleDesignError(RSAcousticError, ValueError):
    """No physical design satisfies the requested constraint."""
