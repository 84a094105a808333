"""Exception types raised across the package."""


class MixedGreenError(Exception):
    """Base class; ``reason`` is a one-line machine-parsable message."""

    @property
    def reason(self):
        return str(self).splitlines()[0] if str(self) else type(self).__name__


class DomainError(MixedGreenError, ValueError):
    pass


class NotApplicable(MixedGreenError):
    """A check was requested on inputs where it has no meaning."""


class MeshError(MixedGreenError, ValueError):
    pass


class CoefficientError(MixedGreenError, ValueError):
    pass


class SolverError(MixedGreenError, RuntimeError):
    pass


class CoercivityError(SolverError):
    """The constrained system is singular, i.e. the form is not coercive."""


class CompatibilityError(MixedGreenError, ValueError):
    pass


class KernelError(MixedGreenError, RuntimeError):
    pass


class ResolutionError(MixedGreenError, ValueError):
    pass


class ConfigError(MixedGreenError, ValueError):
    pass
