"""Error types shared by every module."""


class HopsetError(Exception):
    """Base class; the CLI maps these to exit code 2."""


class MalformedHeader(HopsetError):
    pass


class VertexOutOfRange(HopsetError):
    pass


class NegativeWeight(HopsetError):
    pass


class SelfLoop(HopsetError):
    pass


class InvalidParams(HopsetError):
    pass


class EmptySourceSet(HopsetError):
    pass


class NotUnweighted(HopsetError):
    pass


class Unreachable(HopsetError):
    pass


class BudgetExceeded(HopsetError):
    """Raised when a simulated schedule overruns its own budget."""


class MalformedTree(HopsetError):
    pass


class TargetNotInTree(HopsetError):
    pass
