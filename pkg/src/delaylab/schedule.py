"""On-off switching schedules.

A schedule partitions [0, horizon] into alternating intervals: even-indexed
intervals are feedback-free, odd-indexed intervals carry the feedback (delay
or anti-damping) term.  Intervals are half-open [t_n, t_{n+1}) so the
feedback operator is single-valued at switch instants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    FirstTimeNotZero,
    HorizonBeyondSchedule,
    NonIncreasingTimes,
    NonPositiveDelay,
    ScheduleError,
    TimeOutOfRange,
)

DELAY_FREE = "delay_free"
FEEDBACK_ACTIVE = "feedback_active"

# relative tolerance for detecting equal interval lengths (user-entered values)
_PERIODIC_RTOL = 1e-12


class IntervalLocation(NamedTuple):
    index: int
    kind: str
    offset: float


def interval_kind(index: int) -> str:
    return DELAY_FREE if index % 2 == 0 else FEEDBACK_ACTIVE


@dataclass(frozen=True)
class SwitchingSchedule:
    """Switch times {t_n} with t_0 = 0, a delay tau and a covered horizon.

    With ``periodic=True`` the stored pattern repeats beyond the last stored
    switch time; the stored pattern must then contain an even number of
    intervals so the parity of extended intervals stays consistent.
    """

    switch_times: np.ndarray
    delay: float
    horizon: float
    periodic: bool = False
    lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.switch_times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise NonIncreasingTimes("switch_times must be a nonempty 1-d sequence")
        if times[0] != 0.0:
            raise FirstTimeNotZero(f"first switch time must be 0, got {times[0]}")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise NonIncreasingTimes("switch_times must be strictly increasing")
        if not self.delay > 0:
            raise NonPositiveDelay(f"delay must be positive, got {self.delay}")
        if not self.horizon > 0:
            raise ScheduleError(f"horizon must be positive, got {self.horizon}")
        if self.periodic and (times.size - 1) % 2 != 0:
            raise ScheduleError(
                "periodic extension needs an even number of stored intervals"
            )
        if not self.periodic and self.horizon > times[-1]:
            raise HorizonBeyondSchedule(
                f"horizon {self.horizon} exceeds last switch time {times[-1]} "
                "and the schedule is not periodic"
            )
        times = times.copy()
        times.setflags(write=False)
        lengths = np.diff(times)
        lengths.setflags(write=False)
        object.__setattr__(self, "switch_times", times)
        object.__setattr__(self, "lengths", lengths)

    # -- basic geometry ------------------------------------------------

    @property
    def n_stored_intervals(self) -> int:
        return len(self.switch_times) - 1

    @property
    def period(self) -> float:
        return float(self.switch_times[-1])

    def switch_time(self, n: int) -> float:
        """t_n, following the periodic extension when enabled."""
        k = self.n_stored_intervals
        if 0 <= n <= k:
            return float(self.switch_times[n])
        if not self.periodic or n < 0:
            raise TimeOutOfRange(f"switch index {n} outside stored schedule")
        cycles, local = divmod(n, k)
        return cycles * self.period + float(self.switch_times[local])

    def length(self, n: int) -> float:
        """T_n = t_{n+1} - t_n, with periodic wrap."""
        k = self.n_stored_intervals
        if 0 <= n < k:
            return float(self.lengths[n])
        if not self.periodic or n < 0:
            raise TimeOutOfRange(f"interval index {n} outside stored schedule")
        return float(self.lengths[n % k])

    def cycle_lengths(self, n: int) -> tuple[float, float]:
        """(T_{2n}, T_{2n+1}) for cycle n."""
        return self.length(2 * n), self.length(2 * n + 1)

    def n_full_cycles(self, t_end: float | None = None) -> int:
        """Complete off/on cycles with t_{2n+2} <= t_end (default horizon)."""
        if t_end is None:
            t_end = self.horizon
        n = 0
        while True:
            try:
                end = self.switch_time(2 * n + 2)
            except TimeOutOfRange:
                return n
            if end > t_end * (1 + 1e-12):
                return n
            n += 1

    def interval_at(self, t: float) -> IntervalLocation:
        """Locate t: (index n, kind, offset t - t_n) with t_n <= t < t_{n+1}.

        t == horizon on a non-periodic schedule clamps to the last interval.
        """
        if t < 0 or t > self.horizon:
            raise TimeOutOfRange(f"t={t} outside [0, {self.horizon}]")
        times = self.switch_times
        k = self.n_stored_intervals
        base = 0
        cycle_start = 0.0
        if t >= times[-1]:
            if not self.periodic:
                # only reachable for t == horizon == last switch: clamp
                idx = k - 1
                return IntervalLocation(idx, interval_kind(idx), float(t - times[idx]))
            cycles = int(t // self.period)
            local = t - cycles * self.period
            if local >= self.period:  # guard fp spill at cycle boundaries
                cycles += 1
                local = 0.0
            base = cycles * k
            cycle_start = cycles * self.period
            t = local
        idx = int(np.searchsorted(times, t, side="right")) - 1
        idx = min(max(idx, 0), k - 1)
        return IntervalLocation(
            base + idx, interval_kind(base + idx), float(cycle_start + t) - self.switch_time(base + idx)
        )

    def switch_times_until(self, t_end: float) -> np.ndarray:
        """All switch times in [0, t_end], following the periodic extension."""
        if t_end > self.horizon * (1 + 1e-12):
            raise TimeOutOfRange(f"t_end={t_end} beyond horizon {self.horizon}")
        out = [0.0]
        n = 1
        while True:
            try:
                tn = self.switch_time(n)
            except TimeOutOfRange:
                break
            if tn > t_end * (1 + 1e-12):
                break
            out.append(tn)
            n += 1
        return np.array(out)


def build_schedule(
    switch_times: Sequence[float] | Iterable[float],
    delay: float,
    horizon: float,
    periodic: bool = False,
) -> SwitchingSchedule:
    """Validate and build a schedule from explicit switch times."""
    return SwitchingSchedule(
        switch_times=np.asarray(list(switch_times), dtype=float),
        delay=float(delay),
        horizon=float(horizon),
        periodic=periodic,
    )


def build_periodic_schedule(
    t_even: float, t_odd: float, n_cycles: int, delay: float
) -> SwitchingSchedule:
    """Schedule of n_cycles repetitions of (feedback-free T0, feedback-on T~)."""
    if n_cycles < 1:
        raise ScheduleError("n_cycles must be >= 1")
    if t_even <= 0 or t_odd <= 0:
        raise NonIncreasingTimes("interval lengths must be positive")
    times = [0.0]
    for _ in range(n_cycles):
        times.append(times[-1] + t_even)
        times.append(times[-1] + t_odd)
    return build_schedule(times, delay, horizon=times[-1], periodic=True)


@dataclass(frozen=True)
class HypothesisReport:
    """Per-interval structural conditions, reported not enforced."""

    even_geq_tau: tuple[bool, ...]
    even_gt_tstar: tuple[bool, ...]
    odd_leq_tau: tuple[bool, ...]
    periodic_even: float | None
    periodic_odd: float | None

    @property
    def all_even_geq_tau(self) -> bool:
        return all(self.even_geq_tau)

    @property
    def all_even_gt_tstar(self) -> bool:
        return all(self.even_gt_tstar)

    @property
    def all_odd_leq_tau(self) -> bool:
        return all(self.odd_leq_tau)

    def to_dict(self) -> dict:
        return {
            "even_geq_tau": list(self.even_geq_tau),
            "even_gt_tstar": list(self.even_gt_tstar),
            "odd_leq_tau": list(self.odd_leq_tau),
            "periodic_even": self.periodic_even,
            "periodic_odd": self.periodic_odd,
        }


def _uniform_value(values: np.ndarray) -> float | None:
    if values.size == 0:
        return None
    v0 = float(values[0])
    if np.all(np.abs(values - v0) <= _PERIODIC_RTOL * max(abs(v0), 1e-300)):
        return v0
    return None


def validate_hypotheses(schedule: SwitchingSchedule, t_star: float) -> HypothesisReport:
    """Check the even/odd interval-length conditions against tau and t_star.

    Pure report; never raises on violated conditions.
    """
    if t_star < 0 or not math.isfinite(t_star):
        raise ValueError(f"t_star must be finite and >= 0, got {t_star}")
    lengths = schedule.lengths
    even = lengths[0::2]
    odd = lengths[1::2]
    tau = schedule.delay
    return HypothesisReport(
        even_geq_tau=tuple(bool(t >= tau) for t in even),
        even_gt_tstar=tuple(bool(t > t_star) for t in even),
        odd_leq_tau=tuple(bool(t <= tau) for t in odd),
        periodic_even=_uniform_value(even),
        periodic_odd=_uniform_value(odd),
    )
