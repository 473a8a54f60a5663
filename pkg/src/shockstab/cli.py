"""Command line entry point: ``shockstab profile|simulate|probe|sweep``.

Exit codes: 0 when every enabled check passes, 1 when a check fails, 2 for
usage or configuration errors, 3 for runtime failures.  Every command writes
``report.json`` (or ``error.json`` on failure) to its output directory.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import functionals, kernels
from .dynamics import run
from .errors import ConfigError, UsageError
from .hugoniot import o1_constants
from .model import lemma21_probe
from .profile import build_weight, profile_report, solve_profile, write_profile_csv

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _check(value, threshold, passed) -> dict:
    return {"pass": bool(passed), "value": value, "threshold": threshold}


def _finish(command, scenario, out: Path, checks: dict, extra=None) -> int:
    passed = all(c["pass"] for c in checks.values())
    report = {"command": command, "scenario": scenario.name, "seed": scenario.seed,
              "kernel_backend": kernels.BACKEND, "checks": checks, "passed": passed}
    if extra:
        report.update(extra)
    _write_json(out / "report.json", report)
    return EXIT_OK if passed else EXIT_CHECK


def cmd_profile(scenario: cfgmod.Scenario, out: Path) -> int:
    c = scenario.config
    prof = solve_profile(c.params, c.ends(), n_samples=scenario.profile_samples)
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(prof, out / "profile.csv")
    rep = profile_report(prof)
    sd = prof.sqrt_delta
    w = build_weight(prof)
    checks = {
        "monotone": _check(None, None, rep["v_tilde_increasing"] and rep["u_tilde_decreasing"]),
        "rankine_hugoniot": _check(rep["rh_residual"], 1e-12, rep["rh_residual"] <= 1e-12),
        "far_field": _check(rep["far_field_misfit"], 1e-9, rep["far_field_misfit"] <= 1e-9),
        "tail_fit": _check(min(rep["tail_r2_left"], rep["tail_r2_right"]), 0.999,
                           min(rep["tail_r2_left"], rep["tail_r2_right"]) >= 0.999),
        "weight_bounds": _check([float(w.a.min()), float(w.a.max())], [1.0, 1.0 + sd],
                                w.a.min() >= 1.0 and w.a.max() <= 1.0 + sd),
    }
    return _finish("profile", scenario, out, checks, {"properties": rep})


def _probe_results(scenario: cfgmod.Scenario) -> tuple[dict, dict]:
    c = scenario.config
    params, ends = c.params, c.ends()
    const = o1_constants(params, ends)
    rng = np.random.default_rng(scenario.seed)
    checks, data = {}, {}

    if "probes" in scenario.checks:
        worst, rows = 0.0, []
        for vbar in (ends.v_minus, 0.5 * (ends.v_minus + ends.v_plus), ends.v_plus):
            for sign in (-1.0, 1.0):
                pr = lemma21_probe(params, vbar + sign * 1e-3, vbar, ends.delta, ends.v_plus)
                worst = max(worst, pr.p_ratio_error, pr.q_ratio_error)
                rows.append(asdict(pr))
        checks["lemma21_leading"] = _check(worst, 0.05, worst <= 0.05)
        data["lemma21"] = rows
        n = 1000
        P = rng.normal(scale=1e-2, size=n)
        w = rng.normal(scale=1e-2, size=n)
        a_x = rng.uniform(0.0, 1.0, size=n)
        cos = functionals.completion_of_square_residual(P, w, a_x, const.c_star)
        checks["completion_of_square"] = _check(cos, 1e-12, cos <= 1e-12)
        alpha_gap = abs(const.sigma_ell ** 3 * const.alpha_ell - (1.0 + params.gamma) / (2.0 * ends.v_minus))
        alpha_rel = alpha_gap / ((1.0 + params.gamma) / (2.0 * ends.v_minus))
        checks["alpha_identity"] = _check(alpha_rel, 1e-12, alpha_rel <= 1e-12)
        prof = solve_profile(params, ends, n_samples=scenario.profile_samples)
        dp = functionals.diffusion_coefficient_probe(prof)
        data["diffusion_coefficient"] = asdict(dp)
        checks["diffusion_coefficient_finite"] = _check(dp.ratio, None, math.isfinite(dp.ratio))

    if "poincare" in scenario.checks:
        y = np.linspace(0.0, 1.0, 10_001)
        lhs, rhs = functionals.poincare_check(y, y)
        eq_err = max(abs(lhs - 1.0 / 12.0), abs(rhs - 1.0 / 12.0))
        checks["poincare_equality"] = _check(eq_err, 1e-6, eq_err <= 1e-6)
        worst = -math.inf
        for _ in range(1000):
            m = int(rng.integers(3, 60))
            ys = np.sort(rng.uniform(0.0, 1.0, size=m))
            if np.any(np.diff(ys) <= 0.0):
                continue
            lhs, rhs = functionals.poincare_check(rng.normal(size=m), ys)
            worst = max(worst, lhs - rhs - 1e-12 * max(rhs, 1.0))
        checks["poincare_random"] = _check(worst, 0.0, worst <= 0.0)
    return checks, data


def cmd_probe(scenario: cfgmod.Scenario, out: Path) -> int:
    checks, data = _probe_results(scenario)
    return _finish("probe", scenario, out, checks, {"probes": data})


def simulation_checks(scenario: cfgmod.Scenario, result) -> dict:
    recs = result.records
    checks = {}
    if "identity" in scenario.checks:
        worst = max(r.id_residual for r in recs)
        checks["identity"] = _check(worst, scenario.identity_tol, worst <= scenario.identity_tol)
    if "contraction" in scenario.checks:
        slack = functionals.contraction_slack(recs)
        allowed = scenario.contraction_slack * recs[0].aRE
        checks["contraction"] = _check(slack, allowed, slack <= allowed)
    good = ("aRE", "G1", "GS", "Dv", "Du1", "Du2", "cG1", "cG2", "cD")
    neg = min(min(getattr(r, k) for k in good) for r in recs)
    checks["good_terms_nonnegative"] = _check(neg, 0.0, neg >= 0.0)
    finite = all(math.isfinite(x) for r in recs for x in r.row())
    checks["finite"] = _check(None, None, finite)
    xm = max(r.X_dot_mismatch for r in recs)
    checks["shift_cross_check"] = _check(xm, 1e-12, xm <= 1e-12)
    checks["conservation"] = _check(result.max_conservation_residual, 1e-12,
                                    result.max_conservation_residual <= 1e-12)
    return checks


def cmd_simulate(scenario: cfgmod.Scenario, out: Path) -> int:
    result = run(scenario.config, out_dir=out)
    checks = simulation_checks(scenario, result)
    last = result.records[-1]
    summary = {"epsilon": result.epsilon, "dt": result.dt, "t_end": last.t, "X_end": last.X,
               "X_dot_end": last.X_dot, "apriori_ratio": last.apriori_ratio,
               "max_identity_residual": max(r.id_residual for r in result.records)}
    return _finish("simulate", scenario, out, checks, {"summary": summary})


def expand_sweep(scenario: cfgmod.Scenario) -> list[cfgmod.Scenario]:
    if scenario.sweep_param is None:
        return [scenario]
    members = [cfgmod.with_value(scenario, scenario.sweep_param, v) for v in scenario.sweep_values]
    names = [m.name for m in members]
    if len(set(names)) != len(names):
        raise ConfigError(f"{scenario.name}: sweep_values: member names are not unique")
    return members


def _sweep_member(scenario: cfgmod.Scenario, out: str) -> tuple[str, int, str | None]:
    try:
        return scenario.name, cmd_simulate(scenario, Path(out)), None
    except Exception as exc:  # reported per member, the sweep continues
        code = EXIT_USAGE if isinstance(exc, (ConfigError, UsageError)) else EXIT_RUNTIME
        _write_error(Path(out), exc, code)
        return scenario.name, code, f"{type(exc).__name__}: {exc}"


def cmd_sweep(scenarios: list[cfgmod.Scenario], out: Path, workers: int | None = None) -> int:
    members = [m for s in scenarios for m in expand_sweep(s)]
    names = [m.name for m in members]
    if len(set(names)) != len(names):
        raise ConfigError("sweep member names must be unique")
    workers = workers or min(len(members), os.cpu_count() or 1)
    dirs = [str(out / m.name) for m in members]
    if workers <= 1:
        results = [_sweep_member(m, d) for m, d in zip(members, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_member, members, dirs))
    summary = {name: {"exit_code": code, "error": err} for name, code, err in results}
    _write_json(out / "sweep.json", {"members": summary})
    return max(code for _, code, _ in results)


def _write_error(out: Path | None, exc: BaseException, code: int) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("t", "node"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    if out is not None:
        try:
            _write_json(out / "error.json", payload)
        except OSError:
            pass
    return payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "UsageError", "message": message, "exit_code": EXIT_USAGE}), file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    epilog = ("scenario keys (flat 'key = value' file; override with "
              f"{cfgmod.ENV_PREFIX}<KEY> environment variables):\n" + cfgmod.help_text())
    parser = _Parser(prog="shockstab", description="Viscous shock stability laboratory.",
                     epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "profile": "solve the shock profile and report its properties",
        "simulate": "run a perturbed-shock simulation with the energy ledger",
        "probe": "evaluate the pointwise inequalities and identities",
        "sweep": "run a parameter sweep, one output tree per member",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if name == "sweep":
            p.add_argument("--config", required=True, action="append",
                           help="scenario file or packaged scenario name (repeatable)")
            p.add_argument("--workers", type=int, default=None, help="parallel workers (default: one per member)")
        else:
            p.add_argument("--config", required=True, help="scenario file or packaged scenario name")
        p.add_argument("--out", default=None, help="output directory (default: out/<name>)")
        p.add_argument("--seed", type=_u64, default=None, help="override the scenario seed")
        p.add_argument("--refine", type=int, default=1, help="multiply n_cells by this factor")
    return parser


def _load(path, args) -> cfgmod.Scenario:
    sc = cfgmod.parse_config(path)
    if args.seed is not None:
        sc = cfgmod.with_seed(sc, args.seed)
    return cfgmod.refined(sc, args.refine)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out) if args.out else None
    try:
        if args.command == "sweep":
            scenarios = [_load(p, args) for p in args.config]
            out = Path(args.out) if args.out else Path("out") / "sweep"
            return cmd_sweep(scenarios, out, args.workers)
        scenario = _load(args.config, args)
        out = Path(args.out) if args.out else Path("out") / scenario.name
        cmd = {"profile": cmd_profile, "simulate": cmd_simulate, "probe": cmd_probe}[args.command]
        return cmd(scenario, out)
    except (ConfigError, UsageError) as exc:
        print(json.dumps(_clean(_write_error(out, exc, EXIT_USAGE))), file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # any solver or module failure is a runtime failure
        print(json.dumps(_clean(_write_error(out, exc, EXIT_RUNTIME))), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
