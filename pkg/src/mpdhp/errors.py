"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: parameter problems exit 1, data problems
exit 2 and numerical degeneracies exit 3.
"""


class ParameterError(ValueError):
    """Invalid hyper-parameter or configuration value."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """Inputs violate an ordering or consistency requirement."""


class StreamOrderError(PreconditionError):
    """A document arrived with a timestamp earlier than its predecessor."""


class StabilityError(ValueError):
    """Hawkes weights whose branching matrix is supercritical."""


class FeasibilityError(RuntimeError):
    """A synthetic-data target cannot be met."""


class DegenerateError(ArithmeticError):
    """Numerical degeneracy: zero likelihood, zero evidence, and the like."""


class DegenerateLikelihoodError(DegenerateError):
    pass


class DegenerateStreamError(DegenerateError):
    pass
