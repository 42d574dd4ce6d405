import math

import numpy as np
import pytest

from cadseg.dte import ThresholdSchedule, ramp, thresholds_at
from cadseg.errors import ConfigError, IterationError

DEFAULTS = ThresholdSchedule(beta=1000.0)


def test_ramp_at_zero_and_beta():
    assert ramp(DEFAULTS, 0) == 0.0
    assert abs(ramp(DEFAULTS, 1000) - (1.0 - math.exp(-1.0))) < 1e-12
    assert abs(ramp(DEFAULTS, 10_000) - 0.9999546000702375) < 1e-9


def test_ramp_rejects_negative_iteration():
    with pytest.raises(IterationError):
        ramp(DEFAULTS, -1)


def test_thresholds_at_start():
    assert thresholds_at(DEFAULTS, 0) == (0.01, 1)


def test_thresholds_documented_point():
    c_thr, r_thr = thresholds_at(DEFAULTS, 1000)
    assert abs(c_thr - (0.01 + 0.74 * (1.0 - math.exp(-1.0)))) < 1e-12
    assert r_thr == 10


def test_thresholds_approach_maxima():
    c_thr, r_thr = thresholds_at(DEFAULTS, 100_000)
    assert abs(c_thr - 0.75) < 1e-12
    assert r_thr == 16


def test_monotone_non_decreasing_over_long_horizon():
    ts = np.linspace(0, 10 * DEFAULTS.beta, 400).astype(int)
    last_c, last_r = -1.0, 0
    for t in ts:
        c_thr, r_thr = thresholds_at(DEFAULTS, int(t))
        assert c_thr >= last_c
        assert r_thr >= last_r
        assert DEFAULTS.c_min <= c_thr < DEFAULTS.c_max or c_thr == DEFAULTS.c_min
        assert DEFAULTS.r_min <= r_thr <= DEFAULTS.r_max
        last_c, last_r = c_thr, r_thr


def test_ramp_strictly_increasing():
    values = [ramp(DEFAULTS, t) for t in range(0, 5000, 250)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_round_half_up_on_size_threshold():
    sched = ThresholdSchedule(r_min=1, r_max=4, beta=10.0)
    # force the ramp to exactly 0.5: r = 1 + 3*0.5 = 2.5, half-up -> 3
    c_thr, r_thr = thresholds_at(sched, 5, ramp_fn=lambda s, t: 0.5)
    assert r_thr == 3
    assert abs(c_thr - (sched.c_min + 0.5 * (sched.c_max - sched.c_min))) < 1e-12


def test_size_threshold_clamped_at_limits():
    sched = ThresholdSchedule(r_min=2, r_max=5, beta=10.0)
    assert thresholds_at(sched, 0, ramp_fn=lambda s, t: 0.0)[1] == 2
    assert thresholds_at(sched, 0, ramp_fn=lambda s, t: 1.0)[1] == 5


def test_schedule_validation():
    with pytest.raises(ConfigError):
        ThresholdSchedule(c_min=0.8, c_max=0.5, beta=10.0)
    with pytest.raises(ConfigError):
        ThresholdSchedule(r_min=0, beta=10.0)
    with pytest.raises(ConfigError):
        ThresholdSchedule(r_min=9, r_max=3, beta=10.0)
    with pytest.raises(ConfigError):
        ThresholdSchedule(beta=0.0)
    with pytest.raises(ConfigError):
        ThresholdSchedule(beta=-5.0)
    with pytest.raises(ConfigError):
        ThresholdSchedule(c_min=-0.1, beta=10.0)
