import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import delaylab as dl
from delaylab.errors import (
    FirstTimeNotZero,
    HorizonBeyondSchedule,
    NonIncreasingTimes,
    NonPositiveDelay,
    ScheduleError,
    TimeOutOfRange,
)


def test_build_basic_lengths_and_parity():
    sch = dl.build_schedule([0, 2, 3, 5], delay=1.0, horizon=5.0)
    assert np.allclose(sch.lengths, [2, 1, 2])
    kinds = [sch.interval_at(t).kind for t in (0.5, 2.5, 3.5)]
    assert kinds == ["delay_free", "feedback_active", "delay_free"]


def test_build_horizon_beyond_schedule_needs_periodicity():
    with pytest.raises(HorizonBeyondSchedule):
        dl.build_schedule([0.0], delay=1.0, horizon=10.0)


def test_build_rejects_nonincreasing():
    with pytest.raises(NonIncreasingTimes):
        dl.build_schedule([0, 1, 0.5], delay=1.0, horizon=1.0)


def test_build_rejects_bad_first_time_and_delay():
    with pytest.raises(FirstTimeNotZero):
        dl.build_schedule([1, 2], delay=1.0, horizon=2.0)
    with pytest.raises(NonPositiveDelay):
        dl.build_schedule([0, 2], delay=0.0, horizon=2.0)


def test_periodic_needs_even_interval_count():
    with pytest.raises(ScheduleError):
        dl.build_schedule([0, 2, 3, 5], delay=1.0, horizon=20.0, periodic=True)


def test_interval_at_examples():
    sch = dl.build_schedule([0, 2, 3, 5], delay=1.0, horizon=5.0)
    assert sch.interval_at(2.5) == (1, "feedback_active", 0.5)
    assert sch.interval_at(0.0) == (0, "delay_free", 0.0)
    # half-open convention: a switch time belongs to the next interval
    assert sch.interval_at(3.0) == (2, "delay_free", 0.0)


def test_interval_at_out_of_range():
    sch = dl.build_schedule([0, 2], delay=1.0, horizon=2.0)
    with pytest.raises(TimeOutOfRange):
        sch.interval_at(-0.1)
    with pytest.raises(TimeOutOfRange):
        sch.interval_at(2.5)


def test_periodic_extension_indexing():
    sch = dl.build_periodic_schedule(2.0, 1.0, 4, delay=1.0)
    assert sch.horizon == 12.0
    assert sch.interval_at(3.5) == (2, "delay_free", pytest.approx(0.5))
    # wrap into the second stored period
    loc = sch.interval_at(11.5)
    assert loc.index == 7 and loc.kind == "feedback_active"
    assert sch.switch_time(8) == pytest.approx(12.0)
    assert sch.cycle_lengths(17) == (2.0, 1.0)
    assert sch.n_full_cycles() == 4


def test_validate_hypotheses_examples():
    sch = dl.build_schedule([0, 2, 3, 5, 6], delay=1.0, horizon=6.0)
    rep = dl.validate_hypotheses(sch, t_star=1.5)
    assert rep.even_geq_tau == (True, True)
    assert rep.even_gt_tstar == (True, True)
    assert rep.odd_leq_tau == (True, True)
    assert rep.periodic_even == pytest.approx(2.0)
    assert rep.periodic_odd == pytest.approx(1.0)

    short = dl.build_schedule([0, 0.5, 1.5], delay=1.0, horizon=1.5)
    assert dl.validate_hypotheses(short, 0.0).even_geq_tau == (False,)

    long_odd = dl.build_schedule([0, 2, 5], delay=1.0, horizon=5.0)
    assert dl.validate_hypotheses(long_odd, 0.0).odd_leq_tau == (False,)


def test_validate_hypotheses_detects_aperiodicity():
    sch = dl.build_schedule([0, 2, 3, 5.5, 6.5], delay=1.0, horizon=6.5)
    rep = dl.validate_hypotheses(sch, 0.0)
    assert rep.periodic_even is None
    assert rep.periodic_odd == pytest.approx(1.0)


def test_validate_hypotheses_idempotent(demo_schedule):
    a = dl.validate_hypotheses(demo_schedule, 0.3)
    b = dl.validate_hypotheses(demo_schedule, 0.3)
    assert a == b


@st.composite
def schedules(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    gaps = draw(st.lists(st.floats(min_value=0.05, max_value=3.0), min_size=n, max_size=n))
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    delay = draw(st.floats(min_value=0.1, max_value=2.0))
    return dl.build_schedule(times, delay, horizon=float(times[-1]))


@given(schedules(), st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=100, deadline=None)
def test_interval_cover_property(sch, frac):
    t = frac * sch.horizon * (1 - 1e-12)
    loc = sch.interval_at(t)
    t0 = sch.switch_time(loc.index)
    t1 = sch.switch_time(loc.index + 1)
    assert t0 <= t < t1 or (t == sch.horizon)
    assert loc.offset == pytest.approx(t - t0, abs=1e-12)
    assert loc.kind == ("delay_free" if loc.index % 2 == 0 else "feedback_active")


@given(schedules())
@settings(max_examples=100, deadline=None)
def test_lengths_sum_to_last_switch(sch):
    total = float(np.sum(sch.lengths))
    last = float(sch.switch_times[-1])
    assert abs(total - last) <= 4 * np.spacing(max(abs(last), 1.0)) * len(sch.lengths)
