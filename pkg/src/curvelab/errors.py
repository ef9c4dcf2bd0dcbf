"""Exception hierarchy shared by all curvelab modules."""


class CurvelabError(Exception):
    """Base class for every error raised by curvelab."""


class GraphError(CurvelabError):
    pass


class DisconnectedGraph(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class NonPositiveMeasure(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class InvalidConstruction(GraphError):
    pass


class TruncationExceeded(GraphError):
    """A birth-death quantity needs a rate beyond the truncation radius."""


class ParseError(CurvelabError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatVersionMismatch(ParseError):
    pass


class NotProbability(CurvelabError):
    pass


class SolverFailure(CurvelabError):
    pass


class LpInfeasible(SolverFailure):
    pass


class LpUnbounded(SolverFailure):
    pass


class NotCombinatorial(CurvelabError):
    pass


class NotAdjacent(CurvelabError):
    pass


class TooLarge(CurvelabError):
    pass


class EpsTooLarge(CurvelabError):
    pass


class ShortCyclePresent(CurvelabError):
    pass


class NonPositiveCurvature(CurvelabError):
    pass


class CurvaturePreconditionFailed(CurvelabError):
    pass


class NegativeTime(CurvelabError):
    pass


class EmptySubset(CurvelabError):
    pass


class NegativePhi(CurvelabError):
    pass


class EigenFailure(SolverFailure):
    pass
