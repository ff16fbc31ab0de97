"""Exception hierarchy shared by all graphnls modules."""


class GraphNLSError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""

    exit_code = 1


class InputError(GraphNLSError):
    """Malformed user input (graph files, parameters, options)."""


class DisconnectedGraph(InputError):
    pass


class EmptyCore(InputError):
    pass


class UnknownName(InputError):
    pass


class BadParams(InputError):
    pass


class POutOfRange(InputError):
    pass


class InvalidProblem(InputError):
    pass


class FieldInconsistent(InputError):
    """Edge samples disagree at a shared vertex."""


class ZeroMass(GraphNLSError):
    pass


class NonConvergence(GraphNLSError):
    exit_code = 3

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularJacobian(NonConvergence):
    def __init__(self, message, condition=float("inf"), result=None):
        super().__init__(f"{message} (condition estimate {condition:.3g})", result)
        self.condition = condition


class NegativeLambdaRequested(InputError):
    pass


class NoReturn(GraphNLSError):
    """The shooting trajectory did not cross zero again within the horizon."""

    exit_code = 3


class BisectionFailure(GraphNLSError):
    exit_code = 3


class NoCommensurableCycle(InputError):
    pass


class GeometryMismatch(InputError):
    pass


class HalfGraphNonConvergence(NonConvergence):
    pass


class LambdaNegative(GraphNLSError):
    pass


class ConsistencyViolation(GraphNLSError):
    exit_code = 2

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []
