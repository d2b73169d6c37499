"""Command-line front end: analyze, optimize, sweep and verify scenarios.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import (
    NonCooperativePower,
    SingleIrsPower,
    classify_case_dnc,
    optimal_phases_dnc,
    optimal_phases_sgl,
    placement_of,
    single_irs_scenario,
)
from .channel import rng_stream
from .config import ConfigError, DEFAULT_ARRAYS, read_config, resolve_scenario
from .montecarlo import McConfig, estimate_gamma_mc, estimate_rate_mc, verify_analytic
from .optimize import OptimizerConfig, run_optimizer
from .power import DoubleIrsPower, average_power, classify_case, rate_bound
from .scenario import ArraySpec, LinkFading, PhaseShifts, Regime, ScenarioConfig

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_CONFIG = 0, 1, 2

SYSTEMS = ("dirs_c", "dirs_nc", "sirs_pos1", "sirs_pos2", "sirs_pos_mid", "no_irs")
DESIGNS = ("optimized", "random", "pure_los_design", "pure_nlos_design")
METRICS = ("gamma_analytic", "rate_bound", "rate_mc", "gamma_mc")
SWEEP_VARIABLES = ("P_S", "T_S", "T1_split", "T_total", "K", "irs_x", "irs_y")
CSV_HEADER = ("variable", "point", "system", "design", "metric", "value", "std_error", "iterations")


def fmt(x) -> str:
    """Locale-independent round-trip formatting; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


# ------------------------------------------------------------------ systems


def system_scenario(cfg: ScenarioConfig, system: str) -> ScenarioConfig:
    if system.startswith("sirs"):
        return single_irs_scenario(cfg, placement_of(system))
    return cfg


def system_power(cfg: ScenarioConfig, system: str, ph: PhaseShifts) -> float:
    """Analytic average power of ``system``; ``cfg`` is the system's own scenario."""
    if system == "dirs_c":
        return average_power(cfg, ph)
    if system == "dirs_nc":
        return NonCooperativePower(cfg)(ph)
    if system.startswith("sirs"):
        return SingleIrsPower(cfg)(ph)
    if system == "no_irs":
        return cfg.fading["SU"].alpha * cfg.size("S")
    raise ValueError(f"unknown system {system!r}")


def mc_system(system: str) -> str:
    return "sirs" if system.startswith("sirs") else system


@dataclass
class Design:
    phases: PhaseShifts
    iterations: int | None = None
    note: str = ""


def _optimized(cfg: ScenarioConfig, system: str, opt: OptimizerConfig) -> Design:
    if system == "dirs_c":
        trace = run_optimizer(cfg, opt)
        return Design(trace.phases, trace.iterations_used, trace.method)
    if system == "dirs_nc":
        ph = optimal_phases_dnc(cfg)
    elif system.startswith("sirs"):
        ph = optimal_phases_sgl(cfg)
    else:
        ph = PhaseShifts()
    return Design(PhaseShifts.zeros(cfg) if ph is None else ph)


def make_design(cfg: ScenarioConfig, system: str, design: str, opt: OptimizerConfig, stream: int = 0) -> Design:
    """Phase configuration of ``design`` for ``system`` (``cfg`` is the system's scenario)."""
    if system == "no_irs":
        return Design(PhaseShifts())
    if design == "optimized":
        return _optimized(cfg, system, opt)
    if design == "random":
        return Design(PhaseShifts.random(cfg, rng_stream(opt.seed, stream)))
    if design == "pure_los_design":
        return _optimized(cfg.with_regime(Regime.PURE_LOS), system, opt)
    if design == "pure_nlos_design":
        # every phase configuration is optimal when nothing carries LoS
        return Design(PhaseShifts.zeros(cfg))
    raise ValueError(f"unknown design {design!r}")


# -------------------------------------------------------------------- sweep


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    systems: tuple = ("dirs_c",)
    designs: tuple = ("optimized",)
    metrics: tuple = ("gamma_analytic", "rate_bound")
    total: int | None = None

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; expected one of {SWEEP_VARIABLES}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        for name, items, allowed in (
            ("system", self.systems, SYSTEMS),
            ("design", self.designs, DESIGNS),
            ("metric", self.metrics, METRICS),
        ):
            if not items:
                raise ValueError(f"at least one {name} is required")
            for item in items:
                if item not in allowed:
                    raise ValueError(f"unknown {name} {item!r}; expected one of {allowed}")
        if self.variable in ("T_S", "T1_split", "T_total"):
            for v in self.values:
                if int(v) != v or v < 1:
                    raise ValueError(f"{self.variable} values must be positive integers, got {v}")
        if self.variable == "T_total":
            for v in self.values:
                if int(v) % 2:
                    raise ValueError(f"T_total values must be even (T1 = T2 = T/2), got {v}")
        if self.variable == "T1_split":
            if self.total is None:
                raise ValueError("T1_split sweeps need a total element count")
            for v in self.values:
                if not v < self.total:
                    raise ValueError(f"T1_split value {v} must be < T_total = {self.total}")


def _dims(total: int) -> list:
    spec = ArraySpec.with_size(int(total))
    return [spec.rows, spec.cols]


def apply_sweep_value(raw: dict, variable: str, value, total: int | None = None) -> dict:
    """Copy of the raw config with one sweep variable set."""
    out = json.loads(json.dumps(raw))
    arrays = out.setdefault("arrays", {})
    if variable == "P_S":
        out.pop("P_S_W", None)
        out["P_S_dBm"] = float(value)
    elif variable == "K":
        out.pop("K", None)
        out["K_dB"] = float(value)
    elif variable in ("irs_x", "irs_y"):
        out[variable] = float(value)
    elif variable == "T_S":
        arrays["S"] = _dims(value)
    elif variable == "T_total":
        arrays["1"] = arrays["2"] = _dims(int(value) // 2)
    elif variable == "T1_split":
        arrays["1"] = _dims(value)
        arrays["2"] = _dims(int(total) - int(value))
    else:
        raise ValueError(f"unknown sweep variable {variable!r}")
    return out


def _split_total(raw: dict) -> int:
    arrays = {**DEFAULT_ARRAYS, **raw.get("arrays", {})}
    return int(np.prod(arrays["1"]) + np.prod(arrays["2"]))


@dataclass
class SweepJob:
    raw: dict
    spec: SweepSpec
    index: int
    opt: OptimizerConfig
    mc: McConfig


def _run_point(job: SweepJob) -> list:
    spec = job.spec
    value = spec.values[job.index]
    cfg = resolve_scenario(apply_sweep_value(job.raw, spec.variable, value, spec.total))
    rows = []
    for system in spec.systems:
        scfg = system_scenario(cfg, system)
        for design in spec.designs:
            d = make_design(scfg, system, design, job.opt, stream=job.index)
            gamma_value = None
            for metric in spec.metrics:
                err = None
                if metric in ("gamma_analytic", "rate_bound"):
                    if gamma_value is None:
                        gamma_value = system_power(scfg, system, d.phases)
                    val = gamma_value if metric == "gamma_analytic" else rate_bound(scfg, gamma_value)
                else:
                    est_fn = estimate_gamma_mc if metric == "gamma_mc" else estimate_rate_mc
                    est = est_fn(scfg, d.phases, mc_system(system), job.mc)
                    val, err = est.mean, est.std_error
                rows.append((spec.variable, value, system, design, metric, val, err, d.iterations))
    return rows


def run_sweep(raw: dict, spec: SweepSpec, opt: OptimizerConfig, mc: McConfig, workers: int = 1) -> list:
    """Rows in deterministic (point, system, design, metric) order."""
    jobs = [SweepJob(raw, spec, i, opt, mc) for i in range(len(spec.values))]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_point, jobs))
    else:
        chunks = [_run_point(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for variable, point, system, design, metric, val, err, iters in rows:
        writer.writerow([variable, fmt(point), system, design, metric, fmt(val), fmt(err), fmt(iters)])
    return buf.getvalue()


# ------------------------------------------------------------------- verify


@dataclass(frozen=True)
class FormulaCheck:
    name: str
    system: str
    cfg: ScenarioConfig


def _zero_k(cfg: ScenarioConfig, links) -> ScenarioConfig:
    fading = dict(cfg.fading)
    for link in links:
        fading[link] = LinkFading(fading[link].alpha, 0.0)
    return cfg.replace(fading=fading)


def formula_checks(cfg: ScenarioConfig) -> list:
    """One scenario per analytic formula, derived from ``cfg``'s geometry and path losses."""
    finite = cfg
    if finite.regime() is not Regime.FINITE or not all(f.has_los for f in finite.fading.values()):
        finite = cfg.with_rician_factor(10.0)
    los, nlos = finite.with_regime(Regime.PURE_LOS), finite.with_regime(Regime.PURE_NLOS)
    sgl = single_irs_scenario(finite, "pos1")
    checks = [
        FormulaCheck("dirs_c case0", "dirs_c", _zero_k(finite, ("S1", "2U"))),
        FormulaCheck("dirs_c case1", "dirs_c", _zero_k(finite, ("2U",))),
        FormulaCheck("dirs_c case2", "dirs_c", _zero_k(finite, ("S1",))),
        FormulaCheck("dirs_c case3", "dirs_c", finite),
        FormulaCheck("dirs_c pure_los", "dirs_c", los),
        FormulaCheck("dirs_c pure_nlos", "dirs_c", nlos),
        FormulaCheck("dirs_nc case0", "dirs_nc", _zero_k(finite, ("S1", "S2"))),
        FormulaCheck("dirs_nc case1", "dirs_nc", _zero_k(finite, ("2U",))),
        FormulaCheck("dirs_nc case2", "dirs_nc", _zero_k(finite, ("1U",))),
        FormulaCheck("dirs_nc case3", "dirs_nc", finite),
        FormulaCheck("dirs_nc pure_los", "dirs_nc", los),
        FormulaCheck("dirs_nc pure_nlos", "dirs_nc", nlos),
        FormulaCheck("sirs general", "sirs", sgl),
        FormulaCheck("sirs pure_los", "sirs", sgl.with_regime(Regime.PURE_LOS)),
        FormulaCheck("sirs pure_nlos", "sirs", sgl.with_regime(Regime.PURE_NLOS)),
        FormulaCheck("no_irs", "no_irs", finite),
    ]
    return checks


def run_verify(cfg: ScenarioConfig, mc: McConfig, corrupt: float = 0.0) -> list:
    """``(name, analytic, mc mean, std error, z, passed, exact)`` per formula.

    ``corrupt`` scales every analytic value by ``1 + corrupt``; a negative
    control that must make the checks fail.
    """
    rng = rng_stream(mc.seed, 2**32)
    table = []
    for check in formula_checks(cfg):
        ph = PhaseShifts.random(check.cfg, rng) if check.system != "no_irs" else PhaseShifts()
        system = "sirs_pos1" if check.system == "sirs" else check.system
        analytic = system_power(check.cfg, system, ph) * (1.0 + corrupt)
        res = verify_analytic(analytic, check.cfg, ph, check.system, mc)
        table.append((check.name, analytic, res.estimate.mean, res.estimate.std_error, res.z, res.passed, res.exact))
    return table


# ---------------------------------------------------------------------- I/O


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def write_phases(path: str | Path, ph: PhaseShifts) -> None:
    Path(path).write_text(json.dumps(ph.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_phases(path: str | Path) -> PhaseShifts:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return PhaseShifts.from_dict(data)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: cannot read phases ({exc})") from None


def analyze_report(cfg: ScenarioConfig, system: str, ph: PhaseShifts | None) -> dict:
    scfg = system_scenario(cfg, system)
    if ph is None:
        ph = PhaseShifts.zeros(scfg) if system != "no_irs" else PhaseShifts()
    gamma_value = system_power(scfg, system, ph)
    report = {"system": system}
    if system in ("dirs_c", "dirs_nc"):
        label = classify_case(cfg) if system == "dirs_c" else classify_case_dnc(cfg)
        report.update(case=f"Case{int(label.case)}", regime=label.regime.value)
    elif system.startswith("sirs"):
        report.update(regime=SingleIrsPower(scfg).regime.value)
    report.update(gamma=gamma_value, rate_bound=rate_bound(scfg, gamma_value))
    return report


# ---------------------------------------------------------------- commands


def _load(args) -> tuple[dict, ScenarioConfig]:
    raw = read_config(args.config) if args.config else {}
    if args.seed is not None:
        raw["seed"] = args.seed
    return raw, resolve_scenario(raw)


def _opt(args, cfg: ScenarioConfig) -> OptimizerConfig:
    return OptimizerConfig(max_iterations=args.max_iters, rel_tolerance=args.tol, seed=cfg.seed)


def _mc(args, cfg: ScenarioConfig) -> McConfig:
    return McConfig(num_samples=args.samples, seed=cfg.seed, workers=args.workers)


def cmd_analyze(args) -> int:
    _, cfg = _load(args)
    ph = read_phases(args.phases) if args.phases else None
    report = analyze_report(cfg, args.system, ph)
    for key, val in report.items():
        print(f"{key}: {val}")
    if args.output:
        _write(args.output, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def cmd_optimize(args) -> int:
    _, cfg = _load(args)
    opt = _opt(args, cfg)
    if args.system == "dirs_c":
        model = DoubleIrsPower(cfg)
        trace = run_optimizer(model, opt)
        ph, objectives = trace.phases, trace.objectives
        report = {
            "system": "dirs_c",
            "case": f"Case{int(trace.label.case)}",
            "regime": trace.label.regime.value,
            "method": trace.method,
            "converged": trace.converged,
            "iterations": trace.iterations_used,
        }
        scfg = cfg
    else:
        scfg = system_scenario(cfg, args.system)
        d = make_design(scfg, args.system, "optimized", opt)
        ph = d.phases
        objectives = [system_power(scfg, args.system, ph)]
        report = {"system": args.system, "method": "closed form", "converged": True, "iterations": 0}
    gamma_value = objectives[-1]
    report.update(gamma=gamma_value, rate_bound=rate_bound(scfg, gamma_value))
    for key, val in report.items():
        print(f"{key}: {val}")
    out = Path(args.output or "phases.json")
    write_phases(out, ph)
    trace_path = Path(args.trace) if args.trace else out.with_name(out.stem + "_trace.csv")
    lines = ["iteration,objective"] + [f"{i},{fmt(v)}" for i, v in enumerate(objectives)]
    trace_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _parse_values(text: str) -> tuple:
    vals = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        x = float(item)
        vals.append(int(x) if x.is_integer() else x)
    return tuple(vals)


def cmd_sweep(args) -> int:
    raw, cfg = _load(args)
    values = _parse_values(args.values)
    total = args.total if args.total is not None else _split_total(raw)
    try:
        spec = SweepSpec(
            variable=args.variable,
            values=values,
            systems=tuple(args.system or ("dirs_c",)),
            designs=tuple(args.design or ("optimized",)),
            metrics=tuple(args.metric or ("gamma_analytic", "rate_bound")),
            total=total if args.variable == "T1_split" else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = run_sweep(raw, spec, _opt(args, cfg), _mc(args, cfg), workers=args.workers)
    _write(args.output, rows_to_csv(rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    _, cfg = _load(args)
    table = run_verify(cfg, _mc(args, cfg), corrupt=args.debug_corrupt)
    header = ("formula", "analytic", "mc_mean", "std_error", "z", "passed", "check")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for name, analytic, mean, err, z, passed, exact in table:
        writer.writerow([name, fmt(analytic), fmt(mean), fmt(err), "" if exact else fmt(z),
                         "pass" if passed else "FAIL", "exact" if exact else "z"])
        shown = "exact" if exact else f"z={z:.2f}"
        print(f"{'PASS' if passed else 'FAIL'}  {name:<20} {shown}", file=sys.stderr)
    if args.output:
        _write(args.output, buf.getvalue())
    return EXIT_OK if all(row[5] for row in table) else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doubleirs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file (defaults apply to missing keys)")
    common.add_argument("--output", help="output file (default: stdout or phases.json)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo samples")
    common.add_argument("--max-iters", type=int, default=500, help="optimizer outer passes")
    common.add_argument("--tol", type=float, default=1e-8, help="relative improvement threshold")
    common.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analyze", parents=[common], help="case label, average power and rate bound")
    p.add_argument("--system", choices=SYSTEMS, default="dirs_c")
    p.add_argument("--phases", help="phase JSON file (default: all zeros)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", parents=[common], help="optimize phases; writes phases JSON and trace CSV")
    p.add_argument("--system", choices=SYSTEMS[:-1], default="dirs_c")
    p.add_argument("--trace", help="trace CSV path (default: <output stem>_trace.csv)")
    p.add_argument("--report", help="also write the report as JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common], help="CSV table over one swept variable")
    p.add_argument("--variable", choices=SWEEP_VARIABLES, required=True)
    p.add_argument("--values", required=True, help="comma-separated values (P_S in dBm, K in dB)")
    p.add_argument("--total", type=int, help="T_total for T1_split sweeps (default: T1 + T2 of the config)")
    p.add_argument("--system", action="append", choices=SYSTEMS)
    p.add_argument("--design", action="append", choices=DESIGNS)
    p.add_argument("--metric", action="append", choices=METRICS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="analytic formulas vs Monte-Carlo")
    p.add_argument("--debug-corrupt", type=float, default=0.0, metavar="EPS",
                   help="scale analytic values by 1+EPS (negative control)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.samples < 1 or args.max_iters < 1 or not args.tol > 0 or args.workers < 1:
        print("error: --samples, --max-iters and --workers must be >= 1 and --tol > 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
