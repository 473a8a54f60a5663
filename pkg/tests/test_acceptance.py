"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one ``criterion N ...: PASS|FAIL`` line; the lines are
also collected into the terminal summary.  The default-scenario runs are
shared through a session fixture, so the refinement study is paid once.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from shockstab import build_weight, shifted_eval, solve_profile
from shockstab import config as cfgmod
from shockstab.dynamics import PerturbationSpec, Stepper, cfl_dt, initial_data, run, sim_profile
from shockstab.functionals import (completion_of_square_residual, contraction_slack,
                                   dissipation_integrals, poincare_check)
from shockstab.model import lemma21_probe
from shockstab.profile import profile_report

DEFAULT = cfgmod.parse_config("default", env={})
CONFIG = DEFAULT.config
PARAMS = CONFIG.params
ENDS = CONFIG.ends()


@contextmanager
def criterion(n, title):
    info = {}
    try:
        yield info
    except BaseException:
        _emit(n, title, "FAIL", info)
        raise
    _emit(n, title, "PASS", info)


def _emit(n, title, verdict, info):
    detail = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items())
    line = f"criterion {n:>2} {title}: {verdict}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def default_runs(tmp_path_factory):
    """Lazily computed default runs keyed by refinement factor: ``k -> (result, seconds)``."""
    cache = {}
    root = tmp_path_factory.mktemp("default")

    def get(k):
        if k not in cache:
            t0 = time.perf_counter()
            res = run(CONFIG.refined(k), out_dir=root / f"k{k}")
            cache[k] = (res, time.perf_counter() - t0, root / f"k{k}")
        return cache[k]

    return get


def test_criterion_01_profile():
    with criterion(1, "profile correctness") as info:
        t0 = time.perf_counter()
        prof = solve_profile(PARAMS, ENDS)
        info["seconds"] = time.perf_counter() - t0
        rep = profile_report(prof)
        info.update(rh=rep["rh_residual"], misfit=rep["far_field_misfit"],
                    r2=min(rep["tail_r2_left"], rep["tail_r2_right"]))
        assert np.all(prof.v_tilde_x > 0.0) and np.all(prof.u_tilde_x < 0.0)
        assert rep["rh_residual"] <= 1e-12
        assert rep["far_field_misfit"] <= 1e-9
        assert info["r2"] >= 0.999
        assert info["seconds"] <= 1.0


def test_criterion_02_weight():
    with criterion(2, "weight bounds") as info:
        prof = solve_profile(PARAMS, ENDS)
        w = build_weight(prof)
        sd = prof.sqrt_delta
        q = np.random.default_rng(0).uniform(prof.xi[0] - 10.0, prof.xi[-1] + 10.0, 100_000)
        sp = shifted_eval(prof, q, 0.37)
        gap = max(np.max(np.abs(w.a_x * sd - ENDS.sigma * prof.v_tilde_x)),
                  np.max(np.abs(sp.a_x * sd - ENDS.sigma * sp.v_x)))
        info.update(a_min=float(min(w.a.min(), sp.a.min())), a_max=float(max(w.a.max(), sp.a.max())),
                    identity_gap=float(gap))
        assert info["a_min"] >= 1.0 and info["a_max"] <= 1.0 + sd
        assert gap <= 1e-10


def test_criterion_03_identities():
    with criterion(3, "exact-identity suite") as info:
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        c_star = solve_profile(PARAMS, ENDS).constants.c_star
        cos = max(completion_of_square_residual(rng.normal(size=1000), rng.normal(size=1000),
                                                rng.uniform(0.0, 1.0, 1000), c_star) for _ in range(10))
        worst = -math.inf
        for _ in range(1000):
            m = int(rng.integers(3, 60))
            y = np.sort(rng.uniform(0.0, 1.0, m))
            if np.any(np.diff(y) <= 0.0):
                continue
            lhs, rhs = poincare_check(rng.normal(size=m), y)
            worst = max(worst, lhs - rhs - 1e-12 * max(rhs, 1.0))
        y = np.linspace(0.0, 1.0, 10_000)
        lhs, rhs = poincare_check(y, y)
        c = solve_profile(PARAMS, ENDS).constants
        alpha = abs(c.sigma_ell ** 3 * c.alpha_ell / ((1.0 + PARAMS.gamma) / (2.0 * ENDS.v_minus)) - 1.0)
        info.update(square=cos, poincare_margin=worst, lhs=lhs, rhs=rhs, alpha=alpha,
                    seconds=time.perf_counter() - t0)
        assert cos <= 1e-12
        assert worst <= 0.0
        assert abs(lhs - 1.0 / 12.0) <= 1e-6 and abs(rhs - 1.0 / 12.0) <= 1e-6
        assert alpha <= 1e-12
        assert info["seconds"] <= 10.0


def test_criterion_04_lemma_coefficients():
    with criterion(4, "leading coefficients") as info:
        t0 = time.perf_counter()
        worst = 0.0
        for vbar in (ENDS.v_minus, 0.5 * (ENDS.v_minus + ENDS.v_plus), ENDS.v_plus):
            for sign in (-1.0, 1.0):
                pr = lemma21_probe(PARAMS, vbar + sign * 1e-3, vbar, ENDS.delta, ENDS.v_plus)
                worst = max(worst, pr.p_ratio_error, pr.q_ratio_error)
        info.update(worst_error=worst, seconds=time.perf_counter() - t0)
        assert worst <= 0.05
        assert info["seconds"] <= 1.0


@pytest.mark.slow
def test_criterion_05_energy_identity(default_runs):
    with criterion(5, "energy identity convergence") as info:
        levels = [default_runs(k) for k in (1, 2, 4)]
        res = [max(r.id_residual for r in lv[0].records) for lv in levels]
        steps = [lv[0].steps_per_tick for lv in levels]
        seconds = sum(lv[1] for lv in levels)
        info.update(r8192=res[0], r16384=res[1], r32768=res[2], ratio1=res[0] / res[1],
                    ratio2=res[1] / res[2], seconds=seconds)
        assert steps[1] == 2 * steps[0] and steps[2] == 2 * steps[1]
        assert res[0] / res[1] >= 2.0 and res[1] / res[2] >= 2.0
        assert seconds <= 600.0


@pytest.mark.slow
def test_criterion_06_contraction(default_runs):
    with criterion(6, "a-contraction") as info:
        (r1, s1, _), (r2, s2, _) = default_runs(1), default_runs(2)
        slack1, slack2 = contraction_slack(r1.records), contraction_slack(r2.records)
        are0 = r1.records[0].aRE
        mass = float(np.sum(r1.initial_state.phi)) * r1.initial_state.grid.dx
        info.update(epsilon=r1.epsilon, mass=mass, slack=slack1, slack_fine=slack2, seconds=s1 + s2)
        assert abs(r1.epsilon - 0.01) <= 1e-3
        assert abs(mass) > 0.0
        assert slack1 <= 1e-3 * are0
        assert slack2 <= 0.5 * slack1
        assert s1 + s2 <= 300.0


@pytest.mark.slow
def test_criterion_07_asymptotics(default_runs):
    with criterion(7, "asymptotics") as info:
        res = default_runs(1)[0]
        recs = {round(r.t): r for r in res.records}
        first, last, mid = recs[0], recs[200], recs[50]
        sup0, sup_end = max(first.sup_v, first.sup_u), max(last.sup_v, last.sup_u)
        info.update(sup_ratio=sup_end / sup0, xdot_ratio=abs(last.X_dot) / res.max_abs_X_dot,
                    drift50=abs(mid.X) / 50.0, drift200=abs(last.X) / 200.0)
        assert sup_end <= 0.5 * sup0
        assert abs(last.X_dot) <= 0.1 * res.max_abs_X_dot
        assert abs(last.X) / 200.0 < abs(mid.X) / 50.0


@pytest.mark.slow
def test_criterion_08_fixed_point():
    with criterion(8, "zero-perturbation fixed point") as info:
        t0 = time.perf_counter()
        grid = CONFIG.grid()
        prof = sim_profile(PARAMS, ENDS, grid)
        state, _ = initial_data(prof, PerturbationSpec(shape="zero"), grid)
        stepper = Stepper(prof, prof.constants, grid)
        dt = cfl_dt(state, grid, CONFIG.cfl)
        drift = xdot = 0.0
        for _ in range(10_000):
            state = stepper.step(state, dt)
            drift = max(drift, float(np.max(np.abs(state.phi))), float(np.max(np.abs(state.w))))
            xdot = max(xdot, abs(state.X_dot))
        info.update(drift=drift, max_xdot=xdot, seconds=time.perf_counter() - t0)
        assert drift <= 1e-6
        assert xdot <= 1e-12
        assert info["seconds"] <= 60.0


@pytest.mark.slow
def test_criterion_09_apriori(default_runs):
    with criterion(9, "a-priori bound shape") as info:
        (r1, _, _), (r2, _, _) = default_runs(1), default_runs(2)
        c1, c2 = r1.records[-1].apriori_ratio, r2.records[-1].apriori_ratio
        ints = dissipation_integrals(r1.records)
        t = ints["t"]
        k = int(np.searchsorted(t, 0.75 * t[-1]))
        growth = {name: (ints[name][-1] - ints[name][k]) / ints[name][-1] for name in ("D", "G")}
        info.update(C0=c1, C0_fine=c2, change=abs(c2 / c1 - 1.0), D_growth=growth["D"], G_growth=growth["G"])
        assert math.isfinite(c1) and math.isfinite(c2)
        assert abs(c2 / c1 - 1.0) <= 0.10
        assert growth["D"] <= 0.01 and growth["G"] <= 0.01


@pytest.mark.slow
def test_criterion_10_determinism_and_conservation(default_runs, tmp_path):
    with criterion(10, "determinism and conservation") as info:
        res, _, out = default_runs(1)
        again = run(CONFIG, out_dir=tmp_path)
        files = sorted(p.name for p in out.glob("*.csv"))
        same = all((out / f).read_bytes() == (tmp_path / f).read_bytes() for f in files)
        cons = max(default_runs(k)[0].max_conservation_residual for k in (1, 2, 4))
        info.update(files=len(files), identical=same, conservation=cons)
        assert files and same
        assert [r.row() for r in again.records] == [r.row() for r in res.records]
        assert cons <= 1e-12
