"""Dynamic threshold escalation.

Both the confidence threshold and the region-size cap ramp from their
minima toward their maxima as training progresses, following
psi(t) = 1 - exp(-t / beta).
"""

import math
from dataclasses import dataclass
from typing import Callable

from .errors import ConfigError, IterationError

# Best-performing defaults for the mechanism.
DEFAULT_C_MIN = 0.01
DEFAULT_C_MAX = 0.75
DEFAULT_R_MIN = 1
DEFAULT_R_MAX = 16


@dataclass(frozen=True)
class ThresholdSchedule:
    """Ramp endpoints plus the time constant beta (in iterations)."""

    c_min: float = DEFAULT_C_MIN
    c_max: float = DEFAULT_C_MAX
    r_min: int = DEFAULT_R_MIN
    r_max: int = DEFAULT_R_MAX
    beta: float = 1000.0

    def __post_init__(self):
        if not (0.0 <= self.c_min <= self.c_max <= 1.0):
            raise ConfigError(
                f"need 0 <= c_min <= c_max <= 1, got ({self.c_min}, {self.c_max})"
            )
        if not (1 <= self.r_min <= self.r_max):
            raise ConfigError(
                f"need 1 <= r_min <= r_max, got ({self.r_min}, {self.r_max})"
            )
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must be a positive finite number, got {self.beta}")


def ramp(sched: ThresholdSchedule, t: int) -> float:
    """Monotone ramp 1 - exp(-t / beta), in [0, 1)."""
    if t < 0:
        raise IterationError(f"iteration must be non-negative, got {t}")
    return 1.0 - math.exp(-t / sched.beta)


def thresholds_at(
    sched: ThresholdSchedule,
    t: int,
    ramp_fn: Callable[[ThresholdSchedule, int], float] = ramp,
) -> tuple[float, int]:
    """Confidence threshold and region-size cap at iteration t.

    The size cap is rounded half-up (region cardinality is integral) and
    clamped to [r_min, r_max]. ramp_fn is the extension hook for other
    ramp shapes.
    """
    psi = ramp_fn(sched, t)
    c_thr = sched.c_min + (sched.c_max - sched.c_min) * psi
    r_real = sched.r_min + (sched.r_max - sched.r_min) * psi
    r_thr = int(math.floor(r_real + 0.5))
    r_thr = max(sched.r_min, min(sched.r_max, r_thr))
    return c_thr, r_thr
