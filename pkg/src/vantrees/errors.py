"""Exception hierarchy shared by all modules."""


class VanTreesError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(VanTreesError, ValueError):
    """Array shapes or parameter dimensions do not match."""


class NumericError(VanTreesError, ArithmeticError):
    """Non-finite input or a numerically meaningless request."""


class DomainError(VanTreesError, ValueError):
    """A parameter lies outside the open parameter set (or grid coverage)."""


class StepError(DomainError):
    """A finite-difference step leaves the parameter set; shrink ``h``."""


class ModelDefinitionError(VanTreesError, ValueError):
    """A model or prior evaluator returned invalid values (negative, unnormalized)."""


class InsufficientDataError(VanTreesError, ValueError):
    """Not enough usable points for a fit or an estimate."""


class IntegrabilityError(VanTreesError, ArithmeticError):
    """An integral required to be finite appears to diverge."""


class SingularInformationError(VanTreesError, ArithmeticError):
    """Fisher information (or information block) is singular where it may not be."""


class ContractViolation(VanTreesError, AssertionError):
    """An operation's precondition or post-condition check failed."""


class CapabilityError(VanTreesError, RuntimeError):
    """The request is well-posed but too large for direct quadrature."""


class ConfigError(VanTreesError, ValueError):
    """Invalid run configuration."""


class DegenerateJointError(NumericError):
    """The joint density of (theta, x) vanishes at a sample node with positive weight."""


class MisuseError(VanTreesError, ValueError):
    """Arguments contradict the operation's premise (e.g. a probe direction outside the kernel)."""
