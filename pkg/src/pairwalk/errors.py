"""Exception hierarchy shared by the simulator and the CLI."""

from __future__ import annotations


class InputError(ValueError):
    """Invalid parameter or mismatched dimensions."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class DegenerateStateError(InputError):
    """The requested initial state is the null vector."""


class NumericalFailure(RuntimeError):
    """Non-finite amplitudes appeared during propagation."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class NormDriftError(NumericalFailure):
    """Norm drift exceeded the abort threshold; dt or order is inadequate."""

    def __init__(self, step: int, drift: float, threshold: float):
        super().__init__(
            f"norm drift {drift:.3e} exceeds threshold {threshold:.1e} at step {step}",
            step=step,
        )
        self.drift = drift
        self.threshold = threshold
