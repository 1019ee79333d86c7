"""Exception hierarchy shared by every sysgraph module."""


class SysgraphError(Exception):
    """Base class for all errors raised by sysgraph."""


class EvaluationError(SysgraphError):
    pass


class UnknownVariable(EvaluationError):
    pass


class KindMismatch(EvaluationError):
    pass


class OverlapError(EvaluationError):
    """Two evaluations (or components) bind the same variable."""


class ModelError(SysgraphError):
    """A model is syntactically or semantically invalid.

    ``diagnostics`` holds the :class:`~sysgraph.dsl.diagnostics.Diagnostic`
    records that explain the failure, when they are available.
    """

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class InitialGuardViolated(SysgraphError):
    pass


class ExplorationLimit(SysgraphError):
    pass


class PropertyError(SysgraphError):
    pass


class UnsupportedFeature(SysgraphError):
    pass


class RuntimeFault(SysgraphError):
    """Base class for execution-runtime failures."""


class UnresolvedDivergence(RuntimeFault):
    pass


class StepLimitExceeded(RuntimeFault):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DeadlockError(RuntimeFault):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class EffectError(RuntimeFault):
    pass


class EmbeddingError(SysgraphError):
    pass


class StageGateError(SysgraphError):
    """Skeleton generation was requested for an unverified model."""


class StorageError(SysgraphError):
    pass
