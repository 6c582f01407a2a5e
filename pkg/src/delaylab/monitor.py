"""Runtime verification of the per-interval decay inequalities.

Every check compares a measured quantity (lhs) against the proven bound
(rhs) plus a recorded tolerance and reports slack = rhs + tol - lhs, so an
entry passes iff its slack is nonnegative.  Derivative checks use central
finite differences at interior nodes only, with slack scaled by a local
third-difference estimate of the O(h^2) differentiation error; nodes within
two steps of a switch time (or of a switch time shifted by +-tau, where the
window weight kinks) are excluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IntervalTooShort, TimeOutOfRange, WindowUnderflow
from .integrator import Trajectory
from .semigroup import SemigroupEnvelope
from .system import ANTI_DAMPING, DELAYED

_EPS = np.finfo(float).eps

VARIANT_GENERAL = "general"
VARIANT_SMALL_DELAY = "small_delay"
VARIANT_ANTI_DAMPING = "anti_damping"


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    index: int
    lhs: float
    rhs: float
    tol: float
    applicable: bool = True
    note: str = ""

    @property
    def slack(self) -> float:
        return self.rhs + self.tol - self.lhs

    @property
    def passed(self) -> bool | None:
        if not self.applicable:
            return None
        return bool(self.slack >= 0.0)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.index,
            "lhs": self.lhs if self.applicable else None,
            "rhs": self.rhs if self.applicable else None,
            "tol": self.tol if self.applicable else None,
            "slack": self.slack if self.applicable else None,
            "pass": self.passed,
            "applicable": self.applicable,
            "note": self.note,
        }


@dataclass
class InequalityReport:
    checks: list[InequalityCheck] = field(default_factory=list)

    def extend(self, other: "InequalityReport") -> "InequalityReport":
        self.checks.extend(other.checks)
        return self

    @property
    def applicable_checks(self) -> list[InequalityCheck]:
        return [c for c in self.checks if c.applicable]

    @property
    def worst_slack(self) -> float | None:
        applicable = self.applicable_checks
        if not applicable:
            return None
        return min(c.slack for c in applicable)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.applicable_checks)

    def failures(self) -> list[InequalityCheck]:
        return [c for c in self.applicable_checks if not c.passed]

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.checks], sort_keys=True, indent=1)


@dataclass(frozen=True)
class LyapunovSeries:
    """F(t) per node plus its delay-window component."""

    times: np.ndarray
    values: np.ndarray
    window_integrals: np.ndarray


def _step_weights(traj: Trajectory) -> np.ndarray:
    """|B| on each grid step (i h, (i+1) h) for i = 0 .. N + m - 1.

    Piecewise constant and exactly resolved: switch times sit on nodes, so a
    step never straddles a switch.  Steps beyond a non-periodic schedule's
    last switch get weight zero (the operator is undefined there; only
    trajectory-tail windows reach that range).
    """
    sched = traj.schedule
    h = traj.step
    n_total = traj.n_nodes - 1 + traj.delay_nodes
    weights = np.zeros(n_total)
    n = 0
    while True:
        try:
            t0 = sched.switch_time(n)
            t1 = sched.switch_time(n + 1)
        except TimeOutOfRange:
            break
        k0 = round(t0 / h)
        if k0 >= n_total:
            break
        k1 = min(round(t1 / h), n_total)
        if n % 2 == 1 and k1 > k0:
            weights[k0:k1] = traj.system.op_norm((n - 1) // 2)
        n += 1
    return weights


def lyapunov_series(traj: Trajectory) -> LyapunovSeries:
    """F(t) = |U(t)|^2/2 + (1/2) int_{t-tau}^t |B(s+tau)| |U(s)|^2 ds per node.

    The window integral uses trapezoidal quadrature in |U|^2 with the
    piecewise-constant weight integrated exactly on each step.
    """
    m = traj.delay_nodes
    h = traj.step
    n_nodes = traj.n_nodes
    ws = _step_weights(traj)

    gg = np.empty(n_nodes + m)
    gg[m:] = traj.norm_sq
    if traj.prehistory is not None:
        pre = traj.system.inner_product.norms(traj.prehistory)
        gg[:m] = pre**2
    else:
        if np.any(ws[:m] != 0.0):
            raise WindowUnderflow(
                "window reaches below t=0 with nonzero weight and no history"
            )
        gg[:m] = 0.0

    contrib = ws * (h / 2.0) * (gg[:-1] + gg[1:])
    prefix = np.concatenate([[0.0], np.cumsum(contrib)])
    window = 0.5 * (prefix[m:] - prefix[:-m] if m > 0 else 0.0)
    values = 0.5 * traj.norm_sq + window
    return LyapunovSeries(times=traj.times, values=values, window_integrals=window)


def _node(traj: Trajectory, t: float) -> int:
    return traj.node_of(t)


def _covered_intervals(traj: Trajectory, parity: int):
    """(n, t_n, t_{n+1}) for intervals of given parity fully inside the run."""
    sched = traj.schedule
    t_end = traj.times[-1]
    out = []
    n = parity
    while True:
        try:
            t0 = sched.switch_time(n)
            t1 = sched.switch_time(n + 1)
        except TimeOutOfRange:
            break
        if t1 > t_end * (1 + 1e-12):
            break
        out.append((n, t0, t1))
        n += 2
    return out


def check_even_contraction(
    traj: Trajectory, env: SemigroupEnvelope, tol_rel: float = 1e-9
) -> InequalityReport:
    """|U(t_{2n+1})|^2 <= c_n |U(t_{2n})|^2 on every covered feedback-free interval."""
    report = InequalityReport()
    for n, t0, t1 in _covered_intervals(traj, parity=0):
        try:
            c = env.contraction_factor(t1 - t0)
        except IntervalTooShort:
            report.checks.append(InequalityCheck(
                name="even_contraction", index=n, lhs=np.nan, rhs=np.nan, tol=0.0,
                applicable=False, note="interval not longer than t_star",
            ))
            continue
        lhs = float(traj.norm_sq[_node(traj, t1)])
        rhs = c * float(traj.norm_sq[_node(traj, t0)])
        report.checks.append(InequalityCheck(
            name="even_contraction", index=n, lhs=lhs, rhs=rhs, tol=tol_rel * rhs,
        ))
    return report


def _kink_nodes(traj: Trajectory) -> set[int]:
    """Nodes where the checked channels lose smoothness: switch times and
    switch times shifted by +-tau (window-weight kinks)."""
    sched = traj.schedule
    h = traj.step
    m = traj.delay_nodes
    n_last = traj.n_nodes - 1
    nodes: set[int] = set()
    n = 0
    while True:
        try:
            t = sched.switch_time(n)
        except TimeOutOfRange:
            break
        k = round(t / h)
        if k - m > n_last:
            break
        for shifted in (k, k - m, k + m):
            if 0 <= shifted <= n_last:
                nodes.add(shifted)
        n += 1
    return nodes


def _fd_check_interval(
    traj: Trajectory,
    channel: np.ndarray,
    rhs_at,
    name: str,
    n_interval: int,
    k0: int,
    k1: int,
    kinks: set[int],
    tol_factor: float,
) -> InequalityCheck:
    """Worst interior node of a derivative bound on one interval."""
    h = traj.step
    candidates = [
        k for k in range(k0 + 2, k1 - 1)
        if all(abs(k - kk) > 2 for kk in kinks if k0 < kk < k1)
    ]
    if not candidates:
        return InequalityCheck(
            name=name, index=n_interval, lhs=np.nan, rhs=np.nan, tol=0.0,
            applicable=False, note="no interior nodes clear of kinks",
        )
    ks = np.array(candidates)
    lhs = (channel[ks + 1] - channel[ks - 1]) / (2.0 * h)
    third = (channel[ks + 2] - 2 * channel[ks + 1]
             + 2 * channel[ks - 1] - channel[ks - 2]) / (2.0 * h**3)
    scale = np.max(np.abs(channel[k0:k1 + 1]))
    tol = tol_factor * h**2 * np.abs(third) / 6.0 + 1e3 * _EPS * scale / h
    rhs = rhs_at(ks)
    slack = rhs + tol - lhs
    worst = int(np.argmin(slack))
    return InequalityCheck(
        name=name, index=n_interval,
        lhs=float(lhs[worst]), rhs=float(rhs[worst]), tol=float(tol[worst]),
        note=f"worst of {len(ks)} interior nodes, t={traj.times[ks[worst]]:.6g}",
    )


def check_F_derivative(
    traj: Trajectory,
    series: LyapunovSeries | None = None,
    tol_factor: float = 4.0,
) -> InequalityReport:
    """Derivative bound on feedback intervals.

    Delayed mode: F'(t) <= B |U(t)|^2 (needs every feedback-free interval at
    least tau long; otherwise reported not-applicable).  Anti-damping mode:
    d/dt |U|^2 <= 2 D |U|^2, no length hypothesis.
    """
    sched = traj.schedule
    system = traj.system
    delayed = system.mode == DELAYED
    report = InequalityReport()
    odd_intervals = _covered_intervals(traj, parity=1)

    if delayed:
        evens = sched.lengths[0::2]
        gate = bool(np.all(evens >= sched.delay * (1 - 1e-12)))
        if not gate:
            for n, _, _ in odd_intervals:
                report.checks.append(InequalityCheck(
                    name="lyapunov_derivative", index=n, lhs=np.nan, rhs=np.nan,
                    tol=0.0, applicable=False,
                    note="hypothesis T_even >= tau violated",
                ))
            return report
        if series is None:
            series = lyapunov_series(traj)
        channel = series.values
        name = "lyapunov_derivative"
    else:
        channel = traj.norm_sq
        name = "norm_growth_antidamping"

    kinks = _kink_nodes(traj)
    for n, t0, t1 in odd_intervals:
        coeff = system.op_norm((n - 1) // 2) * (1.0 if delayed else 2.0)
        rhs_at = lambda ks, c=coeff: c * traj.norm_sq[ks]
        report.checks.append(_fd_check_interval(
            traj, channel, rhs_at, name, n,
            _node(traj, t0), _node(traj, t1), kinks, tol_factor,
        ))
    return report


def check_growth_bound(traj: Trajectory, tol_factor: float = 4.0) -> InequalityReport:
    """d/dt |U(t)|^2 <= B |U(t)|^2 + B |U(t_{2n})|^2 on feedback intervals.

    Needs T_odd <= tau and the preceding feedback-free interval >= tau;
    violations are flagged not-applicable per interval, never evaluated.
    """
    sched = traj.schedule
    system = traj.system
    if system.mode != DELAYED:
        raise ValueError("growth bound applies to delayed mode only")
    report = InequalityReport()
    kinks = _kink_nodes(traj)
    tau = sched.delay
    for n, t0, t1 in _covered_intervals(traj, parity=1):
        t_even = sched.switch_time(n - 1)
        unmet = []
        if (t1 - t0) > tau * (1 + 1e-12):
            unmet.append("T_odd > tau")
        if (t0 - t_even) < tau * (1 - 1e-12):
            unmet.append("preceding T_even < tau")
        if unmet:
            report.checks.append(InequalityCheck(
                name="norm_growth", index=n, lhs=np.nan, rhs=np.nan, tol=0.0,
                applicable=False, note="; ".join(unmet),
            ))
            continue
        coeff = system.op_norm((n - 1) // 2)
        anchor = float(traj.norm_sq[_node(traj, t_even)])
        rhs_at = lambda ks, c=coeff, a=anchor: c * (traj.norm_sq[ks] + a)
        report.checks.append(_fd_check_interval(
            traj, traj.norm_sq, rhs_at, "norm_growth", n,
            _node(traj, t0), _node(traj, t1), kinks, tol_factor,
        ))
    return report


def cycle_factor(
    variant: str, op_norm: float, t_odd: float, contraction: float
) -> float:
    """Proven bound on |U(t_{2n+2})|^2 / |U(t_{2n})|^2 across one off/on cycle."""
    x = op_norm * t_odd
    if variant == VARIANT_GENERAL:
        return float(np.exp(2 * x) * (contraction + x))
    if variant == VARIANT_SMALL_DELAY:
        return float(np.exp(x) * (contraction + 1.0 - np.exp(-x)))
    if variant == VARIANT_ANTI_DAMPING:
        return float(np.exp(2 * x) * contraction)
    raise ValueError(f"unknown variant '{variant}'")


def check_cycle_bounds(
    traj: Trajectory,
    env: SemigroupEnvelope,
    variant: str,
    tol_rel: float = 1e-9,
) -> InequalityReport:
    """Measured cycle-to-cycle squared-norm ratio against the variant's factor."""
    sched = traj.schedule
    system = traj.system
    expected_mode = ANTI_DAMPING if variant == VARIANT_ANTI_DAMPING else DELAYED
    if system.mode != expected_mode:
        raise ValueError(f"variant '{variant}' needs a system in mode '{expected_mode}'")
    report = InequalityReport()
    name = f"cycle_bound_{variant}"
    t_end = traj.times[-1]
    tau = sched.delay
    n_cycle = 0
    while True:
        try:
            t0 = sched.switch_time(2 * n_cycle)
            t1 = sched.switch_time(2 * n_cycle + 1)
            t2 = sched.switch_time(2 * n_cycle + 2)
        except TimeOutOfRange:
            break
        if t2 > t_end * (1 + 1e-12):
            break
        t_even, t_odd = t1 - t0, t2 - t1
        unmet = []
        if variant in (VARIANT_GENERAL, VARIANT_SMALL_DELAY) and t_even < tau * (1 - 1e-12):
            unmet.append("T_even < tau")
        if variant == VARIANT_SMALL_DELAY and t_odd > tau * (1 + 1e-12):
            unmet.append("T_odd > tau")
        try:
            c = env.contraction_factor(t_even)
        except IntervalTooShort:
            unmet.append("T_even <= t_star")
            c = np.nan
        if unmet:
            report.checks.append(InequalityCheck(
                name=name, index=n_cycle, lhs=np.nan, rhs=np.nan, tol=0.0,
                applicable=False, note="; ".join(unmet),
            ))
            n_cycle += 1
            continue
        factor = cycle_factor(variant, system.op_norm(n_cycle), t_odd, c)
        start = float(traj.norm_sq[_node(traj, t0)])
        end = float(traj.norm_sq[_node(traj, t2)])
        lhs = end / start if start > 0 else 0.0
        report.checks.append(InequalityCheck(
            name=name, index=n_cycle, lhs=lhs, rhs=factor, tol=tol_rel * factor,
        ))
        n_cycle += 1
    return report


def run_standard_checks(
    traj: Trajectory,
    env: SemigroupEnvelope,
    tol_rel: float = 1e-9,
    tol_factor: float = 4.0,
) -> InequalityReport:
    """Every check applicable to the trajectory's mode, one combined report."""
    report = check_even_contraction(traj, env, tol_rel)
    report.extend(check_F_derivative(traj, tol_factor=tol_factor))
    if traj.system.mode == DELAYED:
        report.extend(check_growth_bound(traj, tol_factor=tol_factor))
        report.extend(check_cycle_bounds(traj, env, VARIANT_GENERAL, tol_rel))
        report.extend(check_cycle_bounds(traj, env, VARIANT_SMALL_DELAY, tol_rel))
    else:
        report.extend(check_cycle_bounds(traj, env, VARIANT_ANTI_DAMPING, tol_rel))
    return report
