"""Exception hierarchy shared by the library and the CLI."""


class OptophononError(Exception):
    """Base class for all library errors."""


class ShapeError(OptophononError, ValueError):
    """Operator or state dimensions do not match the requested space."""


class ConfigError(OptophononError, ValueError):
    """Malformed configuration, target specification or schedule file."""


class SynthesisError(OptophononError):
    """A pulse schedule could not be solved for the requested target."""


class InfeasibleTargetError(SynthesisError):
    pass


class VanishingRabiError(SynthesisError):
    pass


class ConvergenceError(SynthesisError):
    pass


class IntegrationError(OptophononError):
    """Time integration failed or violated a conservation check."""


class ValidationError(OptophononError, ValueError):
    """Input density matrix is not a valid state within tolerance."""
