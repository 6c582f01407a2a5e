"""Config-driven batch entry point.

Subcommands: ``simulate`` (trajectory CSV + inequality JSON), ``certify``
(certificate JSON, exit code 0/3/4), ``sweep`` (CSV of d/alpha per parameter
value), ``validate`` (schedule hypothesis report).  One JSON config file
with sections model / schedule / envelope / feedback plus run or certify;
unknown keys are errors.  Exit codes: 0 ok or certified, 2 config error,
3 not certified, 4 inapplicable, 5 numerical failure.  All floating-point
output carries 17 significant digits so artifacts round-trip exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import certificates as cert
from . import models, monitor, semigroup
from .errors import ConfigError, DelayLabError, UnknownAxis
from .integrator import simulate
from .schedule import SwitchingSchedule, build_periodic_schedule, build_schedule, validate_hypotheses
from .system import ANTI_DAMPING, DELAYED, DelaySystem

_EXP_THEOREMS = {
    "exponential_general": cert.DELAYED_GENERAL,
    "exponential_small_delay": cert.DELAYED_SMALL,
    "exponential_anti_damping": cert.EXP_ANTI_DAMPING,
}
_SERIES_THEOREMS = {
    "asymptotic_general": monitor.VARIANT_GENERAL,
    "asymptotic_small_delay": monitor.VARIANT_SMALL_DELAY,
    "asymptotic_anti_damping": monitor.VARIANT_ANTI_DAMPING,
}
_SWEEP_AXES = ("B_bar", "T0", "T_tilde", "tau", "a", "mu0", "delta")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _check_keys(section: dict, where: str, required: tuple, optional: tuple = ()):
    if not isinstance(section, dict):
        raise ConfigError(f"section '{where}' must be an object")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"section '{where}' is missing keys: {', '.join(missing)}")
    unknown = [k for k in section if k not in required + optional]
    if unknown:
        raise ConfigError(f"section '{where}' has unknown keys: {', '.join(unknown)}")


@dataclass
class LoadedConfig:
    raw: dict
    path: str

    def section(self, name: str, required: bool = True) -> dict | None:
        if name not in self.raw:
            if required:
                raise ConfigError(f"config is missing the '{name}' section")
            return None
        return self.raw[name]


def load_config(path: str) -> LoadedConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be an object")
    known = {"model", "schedule", "envelope", "feedback", "run", "certify"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level sections: {', '.join(sorted(unknown))}")
    return LoadedConfig(raw=raw, path=path)


def build_schedule_from_config(sec: dict) -> SwitchingSchedule:
    if "switch_times" in sec:
        _check_keys(sec, "schedule", ("switch_times", "delay"), ("horizon", "periodic"))
        times = sec["switch_times"]
        horizon = sec.get("horizon", times[-1])
        return build_schedule(times, sec["delay"], horizon, sec.get("periodic", False))
    _check_keys(sec, "schedule", ("T0", "T_tilde", "n_cycles", "delay"))
    return build_periodic_schedule(sec["T0"], sec["T_tilde"], sec["n_cycles"], sec["delay"])


def build_model_from_config(model_sec: dict, feedback_sec: dict):
    """Returns (system, model object or None, default initial state)."""
    _check_keys(feedback_sec, "feedback", ("mode", "b_values"), ("cyclic",))
    mode = feedback_sec["mode"]
    if mode not in (DELAYED, ANTI_DAMPING):
        raise ConfigError(f"feedback.mode must be '{DELAYED}' or '{ANTI_DAMPING}'")
    b_values = [float(b) for b in feedback_sec["b_values"]]
    if not b_values:
        raise ConfigError("feedback.b_values must be nonempty")
    cyclic = bool(feedback_sec.get("cyclic", True))

    if "type" not in model_sec:
        raise ConfigError("section 'model' is missing keys: type")
    mtype = model_sec["type"]
    if mtype == "scalar":
        _check_keys(model_sec, "model", ("type", "a"), ("u0",))
        system = models.build_scalar(model_sec["a"], b_values, mode, cyclic)
        u0 = np.array([float(model_sec.get("u0", 1.0))])
        return system, None, u0
    if mtype == "viscoelastic_wave":
        _check_keys(model_sec, "model",
                    ("type", "n_x", "n_s", "s_max", "mu0", "delta"), ("initial_mode",))
        if mode != DELAYED:
            raise ConfigError("viscoelastic model supports delayed mode only")
        kernel = models.MemoryKernel(model_sec["mu0"], model_sec["delta"])
        model = models.build_viscoelastic_wave(
            int(model_sec["n_x"]), int(model_sec["n_s"]), model_sec["s_max"],
            kernel, b_values, cyclic)
        k = int(model_sec.get("initial_mode", 1))
        u0 = model.initial_state(np.sin(k * np.pi * model.x), np.zeros(model.n_x))
        return model.system, model, u0
    if mtype == "locally_damped_wave":
        _check_keys(model_sec, "model",
                    ("type", "n_x", "a", "omega1", "omega2"), ("initial_mode",))
        model = models.build_locally_damped_wave(
            int(model_sec["n_x"]), model_sec["a"], tuple(model_sec["omega1"]),
            tuple(model_sec["omega2"]), b_values, mode, cyclic)
        k = int(model_sec.get("initial_mode", 1))
        u0 = model.initial_state(np.sin(k * np.pi * model.x), np.zeros(model.n_x))
        return model.system, model, u0
    raise ConfigError(f"unknown model type '{mtype}'")


def resolve_envelope(sec: dict, system: DelaySystem) -> semigroup.SemigroupEnvelope:
    if "M" in sec or "mu" in sec:
        _check_keys(sec, "envelope", ("M", "mu"), ("verify",))
        if sec.get("verify", False):
            return semigroup.pin_envelope(
                system.generator, system.inner_product, sec["M"], sec["mu"])
        return semigroup.SemigroupEnvelope(
            M=float(sec["M"]), mu=float(sec["mu"]), strategy="pinned", certified=False)
    _check_keys(sec, "envelope", ("strategy",), ("n_points", "extra_times"))
    return semigroup.estimate_envelope(
        system.generator, system.inner_product, sec["strategy"],
        n_points=int(sec.get("n_points", 200)),
        extra_times=tuple(sec.get("extra_times", ())))


def _adjust_step(h_req: float, schedule: SwitchingSchedule, t_end: float) -> float:
    """Largest h = tau/k <= h_req aligning tau, all switch times and t_end."""
    tau = schedule.delay

    def aligned(value: float, h: float) -> bool:
        k = round(value / h)
        return abs(value - k * h) <= 1e-9 * max(1.0, abs(value))

    targets = list(schedule.switch_times_until(t_end)) + [t_end]
    k = max(1, math.ceil(tau / h_req - 1e-12))
    for kk in range(k, k * 4096 + 1):
        h = tau / kk
        if all(aligned(v, h) for v in targets):
            return h
    raise ConfigError(
        f"could not align a step <= {h_req} with the delay and switch times"
    )


def run_simulate(config: LoadedConfig, out_dir: str, emit_states: bool = False) -> int:
    system, _, u0 = build_model_from_config(
        config.section("model"), config.section("feedback"))
    schedule = build_schedule_from_config(config.section("schedule"))
    run_sec = config.section("run")
    _check_keys(run_sec, "run", ("h", "t_end"), ("tol_rel", "tol_factor"))
    t_end = float(run_sec["t_end"])
    h_req = float(run_sec["h"])
    h = _adjust_step(h_req, schedule, t_end)
    if abs(h - h_req) > 1e-12 * h_req:
        print(f"step adjusted from {_fmt(h_req)} to {_fmt(h)} for grid alignment",
              file=sys.stderr)
    env = resolve_envelope(config.section("envelope"), system)

    traj = simulate(system, schedule, u0, h, t_end)
    report = monitor.run_standard_checks(
        traj, env,
        tol_rel=float(run_sec.get("tol_rel", 1e-9)),
        tol_factor=float(run_sec.get("tol_factor", 4.0)),
    )
    os.makedirs(out_dir, exist_ok=True)
    traj.write_csv(os.path.join(out_dir, "trajectory.csv"), emit_states=emit_states)
    with open(os.path.join(out_dir, "inequalities.json"), "w") as fh:
        fh.write(report.to_json())
    worst = report.worst_slack
    print(f"final norm {_fmt(traj.norms[-1])}; "
          f"worst slack {_fmt(worst) if worst is not None else 'n/a'}; "
          f"{len(report.failures())} failed checks")
    return 0


def _uniform_cycle(schedule: SwitchingSchedule) -> tuple[float, float]:
    rep = validate_hypotheses(schedule, t_star=0.0)
    if rep.periodic_even is None or rep.periodic_odd is None:
        raise ConfigError("exponential theorems need uniform interval lengths "
                          "(use the periodic schedule form)")
    return rep.periodic_even, rep.periodic_odd


def _certify_reports(config: LoadedConfig) -> list[cert.CertificateReport]:
    system, _, _ = build_model_from_config(
        config.section("model"), config.section("feedback"))
    schedule = build_schedule_from_config(config.section("schedule"))
    env = resolve_envelope(config.section("envelope"), system)
    sec = config.section("certify")
    _check_keys(sec, "certify", ("theorems",),
                ("n_cycles", "reading", "target_bound", "pattern", "tail",
                 "even_floor", "probe_terms"))
    n_cycles = int(sec.get("n_cycles", 10))
    reading = sec.get("reading", cert.AS_STATED)
    pattern = None
    if "pattern" in sec:
        psec = dict(sec["pattern"])
        tail = None
        if "tail" in psec:
            tail = cert.TailDeclaration(**psec.pop("tail"))
        pattern = cert.AsymptoticPattern(tail=tail, **psec)
    tail_decl = cert.TailDeclaration(**sec["tail"]) if "tail" in sec else None

    reports: list[cert.CertificateReport] = []
    for name in sec["theorems"]:
        if name in _SERIES_THEOREMS:
            reports.append(cert.series_certificate(
                schedule, system.op_norms, env, _SERIES_THEOREMS[name], n_cycles,
                pattern=pattern, target_bound=sec.get("target_bound"),
                cyclic=system.cyclic))
        elif name in _EXP_THEOREMS:
            t_even, t_odd = _uniform_cycle(schedule)
            reports.append(cert.exponential_certificate(
                t_even, t_odd, system.sup_op_norm, env, _EXP_THEOREMS[name],
                tau=schedule.delay, reading=reading))
        elif name == "summable_feedback":
            if tail_decl is None:
                raise ConfigError("summable_feedback needs a certify.tail declaration")
            reports.append(cert.remark_sufficient_test(
                schedule, system.op_norms, env, tail_decl,
                even_floor=sec.get("even_floor"),
                probe_terms=int(sec.get("probe_terms", 1000)),
                cyclic=system.cyclic))
        else:
            raise ConfigError(f"unknown theorem '{name}'")
    return reports


def run_certify(config: LoadedConfig, out_dir: str) -> int:
    reports = _certify_reports(config)
    os.makedirs(out_dir, exist_ok=True)
    payload = [r.to_dict() for r in reports]
    with open(os.path.join(out_dir, "certificates.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    for r in reports:
        extra = ""
        if r.predicted is not None:
            extra = f" d={_fmt(r.predicted.d)} alpha={_fmt(r.predicted.alpha)}"
        print(f"{r.theorem}: {r.verdict}{extra}")
    return cert.exit_code(reports)


def run_validate(config: LoadedConfig, out_dir: str) -> int:
    system, _, _ = build_model_from_config(
        config.section("model"), config.section("feedback"))
    schedule = build_schedule_from_config(config.section("schedule"))
    env = resolve_envelope(config.section("envelope"), system)
    report = validate_hypotheses(schedule, env.t_star)
    payload = {
        "t_star": env.t_star,
        "M": env.M,
        "mu": env.mu,
        "hypotheses": report.to_dict(),
    }
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "validate.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    print(f"t_star {_fmt(env.t_star)}; even>=tau {report.all_even_geq_tau}; "
          f"even>t_star {report.all_even_gt_tstar}; odd<=tau {report.all_odd_leq_tau}")
    return 0


def _parse_values(spec: str) -> list[float]:
    if spec.startswith("lin:"):
        _, lo, hi, num = spec.split(":")
        return list(np.linspace(float(lo), float(hi), int(num)))
    if not spec:
        return []
    return [float(v) for v in spec.split(",")]


def _sweep_point(config: LoadedConfig, axis: str, value: float):
    """Evaluate one exponential certificate with the axis value substituted."""
    raw = json.loads(json.dumps(config.raw))  # deep copy
    if axis == "a":
        raw["model"]["a"] = value
    elif axis == "mu0":
        raw["model"]["mu0"] = value
    elif axis == "delta":
        raw["model"]["delta"] = value
    elif axis == "tau":
        raw["schedule"]["delay"] = value
    elif axis == "T0":
        raw["schedule"]["T0"] = value
    elif axis == "T_tilde":
        raw["schedule"]["T_tilde"] = value
    point = LoadedConfig(raw=raw, path=config.path)

    system, _, _ = build_model_from_config(
        point.section("model"), point.section("feedback"))
    schedule = build_schedule_from_config(point.section("schedule"))
    env = resolve_envelope(point.section("envelope"), system)
    sec = point.section("certify", required=False) or {}
    theorem = next((t for t in sec.get("theorems", []) if t in _EXP_THEOREMS),
                   "exponential_general")
    t_even, t_odd = _uniform_cycle(schedule)
    sup_norm = value if axis == "B_bar" else system.sup_op_norm
    report = cert.exponential_certificate(
        t_even, t_odd, sup_norm, env, _EXP_THEOREMS[theorem],
        tau=schedule.delay, reading=sec.get("reading", cert.AS_STATED))
    d = report.partial_sums[0] if report.applicable else math.nan
    alpha = report.predicted.alpha if report.predicted else math.nan
    return d, alpha, report.verdict


def run_sweep(config: LoadedConfig, axis: str, values: list[float],
              out_dir: str, threads: int = 1) -> int:
    if axis not in _SWEEP_AXES:
        raise UnknownAxis(f"axis '{axis}' not in {_SWEEP_AXES}")
    if axis in ("T0", "T_tilde") and "T0" not in config.section("schedule"):
        raise ConfigError(f"axis '{axis}' needs the periodic schedule form")
    if threads > 1 and values:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda v: _sweep_point(config, axis, v), values))
    else:
        rows = [_sweep_point(config, axis, v) for v in values]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w") as fh:
        fh.write("value,d,alpha,verdict\n")
        for v, (d, alpha, verdict) in zip(values, rows):
            fh.write(f"{_fmt(v)},{_fmt(d)},{_fmt(alpha)},{verdict}\n")
    for i in range(len(rows) - 1):
        d0, d1 = rows[i][0], rows[i + 1][0]
        if np.isfinite(d0) and np.isfinite(d1) and (d0 - 1.0) * (d1 - 1.0) < 0:
            print(f"d crosses 1 between {axis}={_fmt(values[i])} "
                  f"and {axis}={_fmt(values[i + 1])}")
    print(f"wrote {len(rows)} sweep rows to {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="delaylab",
        description="simulate and certify on-off delay-feedback systems")
    parser.add_argument("command", choices=["simulate", "certify", "sweep", "validate"])
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--emit-states", action="store_true",
                        help="include state columns in the trajectory CSV")
    parser.add_argument("--axis", default=None, help="sweep parameter name")
    parser.add_argument("--values", default="",
                        help="comma list or lin:lo:hi:n (sweep only)")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.command == "simulate":
            code = run_simulate(config, args.out, emit_states=args.emit_states)
        elif args.command == "certify":
            code = run_certify(config, args.out)
        elif args.command == "validate":
            code = run_validate(config, args.out)
        else:
            if not args.axis:
                raise ConfigError("sweep needs --axis")
            code = run_sweep(config, args.axis, _parse_values(args.values),
                             args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DelayLabError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5
    return code


if __name__ == "__main__":
    sys.exit(main())
