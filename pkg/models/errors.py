class AerisError(Exception):
    """Base class for failures that map onto a command-line exit status."""

    exit_code = 1


class ScenarioError(AerisError, ValueError):
    """Scenario file or command line violates the schema."""

    exit_code = 2


class InfeasibleError(AerisError):
    """The requested configuration has no feasible solution."""

    exit_code = 3


class ToleranceError(AerisError):
    """A closed form disagrees with the Monte-Carlo oracle beyond tolerance."""

    exit_code = 4


class NumericalError(AerisError, ArithmeticError):
    """Series, quadrature or moment evaluation failed to converge or went out of range."""

    exit_code = 5
