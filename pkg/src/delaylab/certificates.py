"""Stability certificates for on-off feedback schedules.

Two families:

* series certificates — the per-cycle log-terms whose divergence to -infinity
  proves asymptotic stability.  Divergence of an infinite series cannot be
  decided from finitely many terms, so the verdict is either a finite-horizon
  quantitative bound or a pattern-backed asymptotic verdict for declared
  structures (fully periodic data, or summable feedback with a uniform floor
  on the feedback-free interval lengths).  Instability is never claimed.
* exponential certificates — for periodic schedules, the sup-factor d; d < 1
  yields |U(n P)| <= d^{n/2} |U_0| and a decay rate alpha = ln(1/d) / (2 P).

Two envelope constants coexist and are kept apart by name everywhere:
``c_envelope`` = M e^{-mu T0} (enters the exponential theorems as stated) and
``c_squared_factor`` = (M e^{-mu T0})^2 (the per-interval contraction factor
driving the cycle bounds).  Exponential certificates are computed under
either reading; the squared one is the tighter of the two.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentTailDeclaration, TimeOutOfRange
from .monitor import (
    VARIANT_ANTI_DAMPING,
    VARIANT_GENERAL,
    VARIANT_SMALL_DELAY,
    cycle_factor,
)
from .schedule import SwitchingSchedule
from .semigroup import SemigroupEnvelope

# verdicts
CERTIFIED_FINITE_HORIZON = "certified_finite_horizon"
CERTIFIED_ASYMPTOTIC_PATTERN = "certified_asymptotic_pattern"
NOT_CERTIFIED = "not_certified"
INAPPLICABLE = "inapplicable"

# exponential-certificate variants
DELAYED_GENERAL = "delayed_general"
DELAYED_SMALL = "delayed_small"
EXP_ANTI_DAMPING = "anti_damping"

AS_STATED = "as_stated"
SQUARED_VARIANT = "squared_variant"

_SERIES_THEOREM = {
    VARIANT_GENERAL: "asymptotic_general",
    VARIANT_SMALL_DELAY: "asymptotic_small_delay",
    VARIANT_ANTI_DAMPING: "asymptotic_anti_damping",
}
_EXP_THEOREM = {
    DELAYED_GENERAL: "exponential_general",
    DELAYED_SMALL: "exponential_small_delay",
    EXP_ANTI_DAMPING: "exponential_anti_damping",
}
_EXP_TO_SERIES_VARIANT = {
    DELAYED_GENERAL: VARIANT_GENERAL,
    DELAYED_SMALL: VARIANT_SMALL_DELAY,
    EXP_ANTI_DAMPING: VARIANT_ANTI_DAMPING,
}


@dataclass(frozen=True)
class TailDeclaration:
    """Caller-declared bound on the feedback terms B_{2n+1} T_{2n+1}.

    ``geometric``: terms are bounded by amplitude * ratio^n with ratio in
    (0, 1).  ``zero_tail``: terms vanish from index zero_from on.
    """

    kind: str
    amplitude: float = 0.0
    ratio: float = 0.0
    zero_from: int = 0

    def __post_init__(self):
        if self.kind == "geometric":
            if not (0.0 < self.ratio < 1.0):
                raise ValueError(f"geometric ratio must be in (0,1), got {self.ratio}")
            if self.amplitude < 0:
                raise ValueError("geometric amplitude must be nonnegative")
        elif self.kind == "zero_tail":
            if self.zero_from < 0:
                raise ValueError("zero_from must be nonnegative")
        else:
            raise ValueError(f"unknown tail kind '{self.kind}'")

    def bound(self, n: int) -> float:
        if self.kind == "geometric":
            return self.amplitude * self.ratio**n
        return math.inf if n < self.zero_from else 0.0


@dataclass(frozen=True)
class AsymptoticPattern:
    """Declared structure that makes a divergent series verdict possible.

    ``periodic``: fully periodic schedule and operator norms with negative
    per-cycle log-term.  ``summable_tail``: declared tail bound on the
    feedback terms plus a uniform floor on the feedback-free interval
    lengths exceeding the crossover time.
    """

    kind: str
    tail: TailDeclaration | None = None
    even_floor: float | None = None

    def __post_init__(self):
        if self.kind not in ("periodic", "summable_tail"):
            raise ValueError(f"unknown pattern kind '{self.kind}'")
        if self.kind == "summable_tail" and self.tail is None:
            raise ValueError("summable_tail pattern needs a tail declaration")


@dataclass(frozen=True)
class Predicted:
    d: float
    alpha: float
    period: float
    amplification: float

    def to_dict(self) -> dict:
        return {"d": self.d, "alpha": self.alpha, "period": self.period,
                "amplification": self.amplification}


@dataclass(frozen=True)
class CertificateReport:
    theorem: str
    variant: str | None
    applicable: bool
    unmet_preconditions: tuple[str, ...] = ()
    partial_sums: tuple[float, ...] = ()
    per_cycle_factors: tuple[float, ...] = ()
    bound_curve: tuple[float, ...] = ()
    verdict: str = INAPPLICABLE
    predicted: Predicted | None = None
    c_envelope: float | None = None
    c_squared_factor: float | None = None
    reading: str | None = None
    note: str = ""

    @property
    def certified(self) -> bool:
        return self.verdict in (CERTIFIED_FINITE_HORIZON, CERTIFIED_ASYMPTOTIC_PATTERN)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "variant": self.variant,
            "applicable": self.applicable,
            "unmet_preconditions": list(self.unmet_preconditions),
            "partial_sums": list(self.partial_sums),
            "per_cycle_factors": list(self.per_cycle_factors),
            "bound_curve": list(self.bound_curve),
            "verdict": self.verdict,
            "predicted": self.predicted.to_dict() if self.predicted else None,
            "c_envelope": self.c_envelope,
            "c_squared_factor": self.c_squared_factor,
            "reading": self.reading,
            "note": self.note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def exit_code(reports) -> int:
    """0 = all certified, 3 = some not_certified, 4 = some inapplicable."""
    if isinstance(reports, CertificateReport):
        reports = [reports]
    if any(not r.applicable for r in reports):
        return 4
    if any(not r.certified for r in reports):
        return 3
    return 0


def _compensated_partial_sums(terms) -> list[float]:
    """Running sums with Neumaier compensation (log/product consistency at 1e-12)."""
    s = 0.0
    c = 0.0
    out = []
    for x in terms:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out.append(s + c)
    return out


def _cycle_data(
    schedule: SwitchingSchedule,
    op_norms,
    n_cycles: int,
    cyclic: bool,
):
    """(T_even, T_odd, B) per cycle, or an error string if uncoverable."""
    norms = list(op_norms)
    if not norms:
        return None, "no feedback operator norms supplied"
    rows = []
    for k in range(n_cycles):
        try:
            t_even, t_odd = schedule.cycle_lengths(k)
        except TimeOutOfRange:
            return None, f"schedule covers only {k} full cycles, {n_cycles} requested"
        if k < len(norms):
            b = norms[k]
        elif cyclic:
            b = norms[k % len(norms)]
        else:
            return None, f"cycle {k} has no operator norm and cycling is disabled"
        rows.append((t_even, t_odd, float(b)))
    return rows, None


def _cycle_preconditions(variant: str, t_even: float, t_odd: float, tau: float,
                         env: SemigroupEnvelope) -> list[str]:
    unmet = []
    if variant in (VARIANT_GENERAL, VARIANT_SMALL_DELAY) and t_even < tau * (1 - 1e-12):
        unmet.append("T_even < tau")
    if variant == VARIANT_SMALL_DELAY and t_odd > tau * (1 + 1e-12):
        unmet.append("T_odd > tau")
    if t_even <= env.t_star:
        unmet.append("T_even <= t_star")
    return unmet


def _validate_pattern(
    pattern: AsymptoticPattern,
    schedule: SwitchingSchedule,
    op_norms,
    env: SemigroupEnvelope,
    variant: str,
    cyclic: bool,
) -> tuple[bool, str]:
    """Does the declared pattern make the series provably divergent?"""
    norms = list(op_norms)
    if pattern.kind == "periodic":
        if not schedule.periodic:
            return False, "pattern 'periodic' but the schedule is not periodic"
        if not cyclic:
            return False, "pattern 'periodic' but operator cycling is disabled"
        n_pairs = schedule.n_stored_intervals // 2
        span = math.lcm(n_pairs, len(norms))
        rows, err = _cycle_data(schedule, norms, span, cyclic=True)
        if err:
            return False, err
        for k, (t_even, t_odd, b) in enumerate(rows):
            if _cycle_preconditions(variant, t_even, t_odd, schedule.delay, env):
                return False, f"cycle {k} violates the variant preconditions"
            term = math.log(cycle_factor(variant, b, t_odd, env.contraction_factor(t_even)))
            if not term < 0:
                return False, f"per-cycle log-term {term:.6g} is not negative (cycle {k})"
        return True, f"periodic pattern, all {span} distinct log-terms negative"
    # summable_tail: delegate to the sufficient-condition route
    try:
        rep = remark_sufficient_test(
            schedule, norms, env, pattern.tail,
            even_floor=pattern.even_floor, cyclic=cyclic,
        )
    except InconsistentTailDeclaration as exc:
        return False, str(exc)
    if rep.certified:
        return True, "summable feedback with uniform feedback-free floor"
    return False, rep.note


def series_certificate(
    schedule: SwitchingSchedule,
    op_norms,
    env: SemigroupEnvelope,
    variant: str,
    n_cycles: int,
    pattern: AsymptoticPattern | None = None,
    target_bound: float | None = None,
    cyclic: bool = True,
) -> CertificateReport:
    """Partial sums of the per-cycle log-terms and the verdict they support.

    ``certified_finite_horizon`` when exp(S_N) meets the declared target
    bound; ``certified_asymptotic_pattern`` when a declared pattern makes the
    series provably divergent; ``not_certified`` otherwise.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    theorem = _SERIES_THEOREM[variant]
    rows, err = _cycle_data(schedule, op_norms, n_cycles, cyclic)
    if err:
        return CertificateReport(theorem=theorem, variant=variant, applicable=False,
                                 unmet_preconditions=(err,), note=err)
    unmet: list[str] = []
    factors = []
    for k, (t_even, t_odd, b) in enumerate(rows):
        bad = _cycle_preconditions(variant, t_even, t_odd, schedule.delay, env)
        if bad:
            unmet.extend(f"cycle {k}: {u}" for u in bad)
            continue
        factors.append(cycle_factor(variant, b, t_odd, env.contraction_factor(t_even)))
    if unmet:
        return CertificateReport(
            theorem=theorem, variant=variant, applicable=False,
            unmet_preconditions=tuple(unmet),
            note="variant preconditions violated on evaluated cycles",
        )
    log_terms = [math.log(f) for f in factors]
    sums = _compensated_partial_sums(log_terms)
    curve = [math.exp(s) for s in sums]

    verdict = NOT_CERTIFIED
    note = ""
    if pattern is not None:
        ok, note = _validate_pattern(pattern, schedule, op_norms, env, variant, cyclic)
        if ok:
            verdict = CERTIFIED_ASYMPTOTIC_PATTERN
    if verdict == NOT_CERTIFIED and target_bound is not None:
        if curve[-1] <= target_bound:
            verdict = CERTIFIED_FINITE_HORIZON
            note = f"exp(S_N) = {curve[-1]:.6g} <= target {target_bound:.6g}"
        elif not note:
            note = f"exp(S_N) = {curve[-1]:.6g} misses target {target_bound:.6g}"
    if verdict == NOT_CERTIFIED and pattern is None and target_bound is None:
        note = "no pattern or target bound declared; finite sums prove nothing"

    return CertificateReport(
        theorem=theorem, variant=variant, applicable=True,
        partial_sums=tuple(sums), per_cycle_factors=tuple(factors),
        bound_curve=tuple(curve), verdict=verdict, note=note,
    )


def remark_sufficient_test(
    schedule: SwitchingSchedule,
    op_norms,
    env: SemigroupEnvelope,
    tail: TailDeclaration,
    even_floor: float | None = None,
    probe_terms: int = 1000,
    n_report_cycles: int = 20,
    cyclic: bool = True,
) -> CertificateReport:
    """Sufficient condition: sum B_n T_n finite and sum ln c_n divergent.

    The tail declaration is probed against the listed terms (raises
    InconsistentTailDeclaration on contradiction).  Divergence of the
    contraction-log series needs a uniform floor T_even >= floor > t_star;
    for periodic schedules the floor defaults to the stored pattern minimum,
    otherwise it must be declared.
    """
    theorem = "summable_feedback"
    norms = list(op_norms)
    # probe as many terms as the schedule and the operator list can supply
    probe = probe_terms
    if not schedule.periodic:
        probe = min(probe, schedule.n_stored_intervals // 2)
    if not cyclic:
        probe = min(probe, len(norms))
    if probe < 1:
        return CertificateReport(theorem=theorem, variant=None, applicable=False,
                                 unmet_preconditions=("no full cycle to probe",),
                                 note="no full cycle to probe")
    rows, err = _cycle_data(schedule, norms, probe, cyclic)
    if err:
        return CertificateReport(theorem=theorem, variant=None, applicable=False,
                                 unmet_preconditions=(err,), note=err)
    for k, (_, t_odd, b) in enumerate(rows):
        term = b * t_odd
        bound = tail.bound(k)
        if term > bound * (1 + 1e-9) + 1e-300:
            raise InconsistentTailDeclaration(
                f"listed term B*T = {term:.6g} at cycle {k} exceeds the "
                f"declared bound {bound:.6g}"
            )
    evens = [t_even for t_even, _, _ in rows]
    if even_floor is None:
        even_floor = min(evens) if schedule.periodic else None
    if even_floor is not None and min(evens) < even_floor * (1 - 1e-12):
        raise InconsistentTailDeclaration(
            f"declared even floor {even_floor} exceeds a listed feedback-free "
            f"length {min(evens)}"
        )
    certifiable = even_floor is not None and even_floor > env.t_star
    n_rep = min(n_report_cycles, len(rows))
    factors = [
        cycle_factor(VARIANT_GENERAL, b, t_odd, env.contraction_factor(t_even))
        for t_even, t_odd, b in rows[:n_rep]
        if t_even > env.t_star
    ]
    sums = _compensated_partial_sums([math.log(f) for f in factors])
    if certifiable:
        c_bar = env.contraction_factor(even_floor)
        verdict = CERTIFIED_ASYMPTOTIC_PATTERN
        note = (f"feedback terms summable by declaration; contraction factors "
                f"uniformly <= {c_bar:.6g} < 1")
    else:
        verdict = NOT_CERTIFIED
        note = ("no uniform feedback-free floor above t_star; "
                "contraction logs need not diverge")
    return CertificateReport(
        theorem=theorem, variant=None, applicable=True,
        partial_sums=tuple(sums), per_cycle_factors=tuple(factors),
        bound_curve=tuple(math.exp(s) for s in sums),
        verdict=verdict, note=note,
    )


def exponential_certificate(
    t_even: float,
    t_odd: float,
    sup_norm: float,
    env: SemigroupEnvelope,
    variant: str,
    tau: float | None = None,
    reading: str = AS_STATED,
    curve_cycles: int = 10,
) -> CertificateReport:
    """Sup-factor d for a fully periodic schedule; d < 1 certifies decay.

    ``reading`` selects the envelope constant entering the factor:
    ``as_stated`` uses c_envelope = M e^{-mu T0}; ``squared_variant`` uses its
    square (the per-interval contraction factor), giving a smaller d.  With
    d < 1 the predicted cycle-end decay is |U(n P)| <= d^{n/2} |U_0| and
    alpha = ln(1/d) / (2 P); the amplification constant is the documented
    within-cycle bound e^{B T_odd} * max(1, M), deliberately loose.
    """
    if sup_norm < 0:
        raise ValueError("sup_norm must be nonnegative")
    if reading not in (AS_STATED, SQUARED_VARIANT):
        raise ValueError(f"unknown reading '{reading}'")
    theorem = _EXP_THEOREM[variant]
    unmet = []
    if t_even <= env.t_star:
        unmet.append("T_even <= t_star")
    if variant in (DELAYED_GENERAL, DELAYED_SMALL):
        if tau is None:
            raise ValueError("delayed variants need the delay tau")
        if t_even < tau * (1 - 1e-12):
            unmet.append("T_even < tau")
        if variant == DELAYED_SMALL and t_odd > tau * (1 + 1e-12):
            unmet.append("T_odd > tau")
    c_env = float(env.M * math.exp(-env.mu * t_even)) if not unmet else None
    if unmet:
        return CertificateReport(
            theorem=theorem, variant=variant, applicable=False,
            unmet_preconditions=tuple(unmet), reading=reading,
            note="preconditions unmet",
        )
    c_sq = c_env * c_env
    c_used = c_env if reading == AS_STATED else c_sq
    d = cycle_factor(_EXP_TO_SERIES_VARIANT[variant], sup_norm, t_odd, c_used)
    period = t_even + t_odd
    if d < 1.0:
        predicted = Predicted(
            d=d,
            alpha=math.log(1.0 / d) / (2.0 * period),
            period=period,
            amplification=math.exp(sup_norm * t_odd) * max(1.0, env.M),
        )
        verdict = CERTIFIED_ASYMPTOTIC_PATTERN
        note = f"d = {d:.6g} < 1"
    else:
        predicted = None
        verdict = NOT_CERTIFIED
        note = f"d = {d:.6g} >= 1"
    curve = tuple(d ** (n + 1) for n in range(curve_cycles))
    return CertificateReport(
        theorem=theorem, variant=variant, applicable=True,
        partial_sums=(d,), per_cycle_factors=(d,), bound_curve=curve,
        verdict=verdict, predicted=predicted,
        c_envelope=c_env, c_squared_factor=c_sq, reading=reading, note=note,
    )


@dataclass(frozen=True)
class FactorComparison:
    small_factor: float
    general_factor: float

    @property
    def separation(self) -> float:
        return self.general_factor - self.small_factor

    @property
    def holds(self) -> bool:
        return self.small_factor < self.general_factor


def compare_small_delay_vs_general(b: float, t: float, c: float) -> FactorComparison:
    """Witness that the small-delay cycle factor undercuts the general one.

    e^{BT} (c + 1 - e^{-BT}) < e^{2BT} (c + BT) for all B, T > 0, c in (0, 1).
    """
    if not (b > 0 and t > 0):
        raise ValueError("B and T must be positive")
    if not (0 < c < 1):
        raise ValueError("c must lie in (0, 1)")
    return FactorComparison(
        small_factor=cycle_factor(VARIANT_SMALL_DELAY, b, t, c),
        general_factor=cycle_factor(VARIANT_GENERAL, b, t, c),
    )
