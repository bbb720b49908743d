class SqgError(Exception):
    """Base class for every error raised by the solver and the diagnostics."""


class ValidationFailure(SqgError, ValueError):
    """A precondition on inputs or configuration does not hold."""


class FieldMismatchError(ValidationFailure):
    """Fields, grids, cylinders or snapshot sets do not fit together."""


class EmptyRegionError(ValidationFailure):
    """A diagnostic region contains no grid nodes."""


class NumericalFailure(SqgError, RuntimeError):
    """A numerical procedure could not deliver a trustworthy result."""


class CflViolationError(NumericalFailure):
    def __init__(self, dt: float, bound: float, t: float | None = None) -> None:
        self.dt = dt
        self.bound = bound
        self.t = t
        where = f" at t={t!r}" if t is not None else ""
        super().__init__(f"Time step dt={dt!r} exceeds the advective CFL bound {bound!r}{where}")


class BlowUpError(NumericalFailure):
    """Non-finite values appeared; carries the last valid snapshot when known."""

    def __init__(self, t: float | None = None, last_snapshot: object | None = None) -> None:
        self.t = t
        self.last_snapshot = last_snapshot
        where = f" at t={t!r}" if t is not None else ""
        super().__init__(f"Non-finite values encountered{where}")


class QuadratureError(NumericalFailure):
    def __init__(self, message: str, error_bound: float) -> None:
        self.error_bound = error_bound
        super().__init__(f"{message} (achieved error bound {error_bound:.3e})")


class ExtrapolationError(NumericalFailure):
    """Richardson extrapolation estimates disagree."""


class UnresolvedTailError(NumericalFailure):
    """The z-ladder stops before the lowest mode has decayed."""


class CheckpointError(SqgError):
    """Base class for checkpoint decoding failures."""


class CorruptCheckpointError(CheckpointError):
    """Wrong magic, unsupported version or inconsistent header."""


class TruncatedCheckpointError(CheckpointError):
    """Payload shorter than the header announces."""
