"""Exception hierarchy.  Every failure raised by the toolkit derives from
:class:`PwaPidError` so callers (and the CLI) can map it to an exit code."""


class PwaPidError(Exception):
    pass


class DimensionMismatch(PwaPidError, ValueError):
    pass


class NonConvergent(PwaPidError):
    pass


class UnstableMatrix(PwaPidError):
    pass


class SingularSystem(PwaPidError):
    pass


class TooManyTrackedOutputs(PwaPidError, ValueError):
    pass


class PlacementFailed(PwaPidError):
    pass


class SynthesisFailed(PwaPidError):
    pass


class LmiInfeasible(SynthesisFailed):
    pass


class NotInvertible(SynthesisFailed):
    pass


class TargetInfeasible(PwaPidError):
    pass


class SingularTarget(PwaPidError):
    pass


class NumericalFailure(PwaPidError):
    pass


class NotFinitelyDetermined(PwaPidError):
    pass


class EmptyTarget(PwaPidError):
    pass


class ProjectionBlowup(PwaPidError):
    pass


class Infeasible(PwaPidError):
    """The online QP has no feasible point: the parameter lies outside X0."""


class CycleDetected(PwaPidError):
    pass


class OutOfFeasibleSet(PwaPidError):
    pass
