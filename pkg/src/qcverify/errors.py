"""Exception types shared across the package."""


class QcvError(Exception):
    """Base class for all package errors."""


class UndeclaredVariable(QcvError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} used but not declared")
        self.name = name


class IndexOutOfRange(QcvError):
    pass


class DuplicateTarget(QcvError):
    pass


class UnboundParameter(QcvError):
    pass


class UnsupportedGate(QcvError):
    pass


class EntangledOperand(QcvError):
    """Raised when a direct mapping is applied to a vector-group qubit."""


class NonContiguousTargets(QcvError):
    pass


class UnresolvedSymRef(QcvError):
    pass


class MissingSymbol(QcvError):
    pass


class ZeroProbabilityBranch(QcvError):
    pass


class UnsupportedSize(QcvError):
    pass


class SolverError(QcvError):
    pass
