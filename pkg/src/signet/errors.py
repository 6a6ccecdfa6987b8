"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class SignetError(Exception):
    exit_code = 1


class UsageError(SignetError):
    exit_code = 1


class GraphError(SignetError, ValueError):
    exit_code = 2


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class NodeOutOfRange(GraphError):
    pass


class NonpositiveWeight(GraphError):
    pass


class ParseError(GraphError):
    def __init__(self, line, token, reason=""):
        self.line = line
        self.token = token
        self.reason = reason
        msg = f"line {line}: bad token {token!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class PreconditionError(SignetError, ValueError):
    exit_code = 3


class DisconnectedGraph(PreconditionError):
    pass


class DirectedGraphUnsupported(PreconditionError):
    pass


class ProbabilityNotNormalized(PreconditionError):
    pass


class GaugeRequestedOnUnbalancedGraph(PreconditionError):
    pass


class NotSymmetric(PreconditionError):
    pass


class PositiveSubgraphDisconnected(PreconditionError):
    pass


class AlphaOutOfRange(PreconditionError):
    pass


class NotInConvergenceRegime(PreconditionError):
    pass


class EigenvalueOneNotSimple(PreconditionError):
    pass


class StepConditionViolated(PreconditionError):
    def __init__(self, t, node, delta, load):
        self.t = t
        self.node = node
        self.delta = delta
        self.load = load
        super().__init__(
            f"step {t}, node {node}: alpha*|N+| + beta*|N-| = {load:.6g} > 1 - delta = {1 - delta:.6g}"
        )


class MonitorsMissing(PreconditionError):
    pass


class ParameterRangeViolation(PreconditionError):
    pass


class NoConvergence(SignetError, ArithmeticError):
    exit_code = 4


class VerificationFailed(SignetError):
    exit_code = 5
