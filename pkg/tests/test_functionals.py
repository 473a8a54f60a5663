import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.integrate import simpson

from shockstab import ModelParams, left_state_from_right, shifted_eval, solve_profile
from shockstab.dynamics import PerturbationSpec, SimGrid, initial_data, sim_profile
from shockstab.errors import DomainError, UsageError
from shockstab.functionals import (DIAGNOSTICS_HEADER, apriori_ratio, completion_of_square_check,
                                   completion_of_square_residual, contraction_slack,
                                   diffusion_coefficient_probe, dissipation_integrals,
                                   energy_identity_residual, integrate, ledger, poincare_check,
                                   weighted_relative_entropy, with_apriori, write_diagnostics_csv,
                                   y_frame)
from shockstab.hugoniot import delta_v_from_delta

P = ModelParams(5.0 / 3.0)
GRID = SimGrid(-200.0, 200.0, 2048)
ENDS = left_state_from_right(P, 1.0, 0.0, 0.1)
PROF = sim_profile(P, ENDS, GRID)


def _state(av=0.0, au=0.0, shape="gaussian-bump"):
    return initial_data(PROF, PerturbationSpec(shape=shape, amplitude_v=av, amplitude_u=au), GRID)[0]


def test_integrate_is_trapezoid():
    x = np.linspace(0.0, 1.0, 11)
    assert integrate(x, 0.1) == pytest.approx(0.5, abs=1e-15)
    assert integrate(x * x, 0.1) == pytest.approx(1.0 / 3.0 + 0.1 ** 2 / 6.0, abs=1e-15)


def test_zero_state_ledger_vanishes():
    rec = ledger(_state(shape="zero"), PROF, PROF.constants)
    skip = {"t", "id_residual", "apriori_ratio"}
    assert all(getattr(rec, k) == 0.0 for k in DIAGNOSTICS_HEADER if k not in skip)
    assert rec.rate == 0.0 and rec.J_bad == 0.0 and rec.J_good == 0.0


def test_velocity_only_perturbation_oracles():
    s = _state(au=1e-3)
    rec = ledger(s, PROF, PROF.constants)
    sp_a = 1.0 + ENDS.sigma * (s.base.vt - ENDS.v_minus) / PROF.sqrt_delta
    assert rec.aRE == pytest.approx(integrate(0.5 * sp_a * s.w ** 2, GRID.dx), rel=1e-12)
    assert rec.aRE == pytest.approx(weighted_relative_entropy(s, PROF), rel=1e-15)
    assert rec.Dv == 0.0 and rec.sup_v == 0.0 and rec.sup_u == pytest.approx(1e-3)
    assert rec.X_dot_mismatch <= 1e-15 and rec.Y_mismatch <= 1e-15


def test_cg2_for_constant_velocity_gap():
    # int a_x dx = sqrt(delta) across the full profile, so w == c gives sigma c^2 sqrt(delta) / 2
    s = _state(shape="zero")
    c = 2e-3
    s = replace(s, w=np.full_like(s.w, c))
    rec = ledger(s, PROF, PROF.constants)
    assert rec.cG2 == pytest.approx(0.5 * ENDS.sigma * c * c * PROF.sqrt_delta, rel=1e-8)


def test_good_terms_nonnegative_and_h1():
    rec = ledger(_state(av=0.005, au=-0.003), PROF, PROF.constants)
    for k in ("aRE", "G1", "GS", "Dv", "Du1", "Du2", "cG1", "cG2", "cD", "h1", "g"):
        assert getattr(rec, k) >= 0.0
    assert rec.h1 > rec.g > 0.0


@settings(max_examples=50)
@given(st.integers(1, 500), st.floats(1e-3, 10.0), st.integers(0, 2 ** 32 - 1))
def test_completion_of_square_random_fields(n, c_star, seed):
    rng = np.random.default_rng(seed)
    P_, w, ax = rng.normal(size=n), rng.normal(size=n), rng.uniform(0.0, 1.0, size=n)
    assert completion_of_square_residual(P_, w, ax, c_star) <= 1e-12


def test_completion_of_square_edge_cases():
    assert completion_of_square_residual(np.zeros(3), np.zeros(3), np.ones(3), 0.1) == 0.0
    with pytest.raises(DomainError):
        completion_of_square_residual(np.ones(3), np.ones(3), np.ones(3), 0.0)
    assert completion_of_square_check(_state(av=0.01), PROF, PROF.constants) <= 1e-12


def test_poincare_equality_case():
    y = np.linspace(0.0, 1.0, 10_001)
    lhs, rhs = poincare_check(y, y)
    assert lhs == pytest.approx(1.0 / 12.0, abs=1e-12)
    assert rhs == pytest.approx(1.0 / 12.0, abs=1e-12)


def test_poincare_constant_and_errors():
    assert poincare_check(np.ones(5)) == (0.0, 0.0)
    with pytest.raises(UsageError):
        poincare_check([1.0, 2.0])
    with pytest.raises(UsageError):
        poincare_check([1.0, 2.0, 3.0], [0.0, 0.5, 0.5])
    with pytest.raises(UsageError):
        poincare_check([1.0, 2.0, 3.0], [0.0, 0.5])


@given(hnp.arrays(float, st.integers(3, 60), elements=st.floats(-1e3, 1e3)),
       st.integers(0, 2 ** 32 - 1))
def test_poincare_inequality_random(f, seed):
    y = np.sort(np.random.default_rng(seed).uniform(0.0, 1.0, size=f.size))
    if np.any(np.diff(y) <= 0.0):
        return
    lhs, rhs = poincare_check(f, y)
    assert lhs <= rhs + 1e-12 * max(rhs, 1.0)


def test_y_frame_relations():
    s = _state(au=2e-3)
    fr = y_frame(s, PROF, tol=1e-8)
    assert np.all(np.diff(fr.y) > 0.0) and fr.y[0] > 1e-8 and fr.y[-1] < 1.0 - 1e-8
    assert np.allclose(fr.f, s.w[fr.indices], rtol=0.0, atol=1e-16)
    rec = ledger(s, PROF, PROF.constants)
    a = 1.0 + ENDS.sigma * (s.base.vt - ENDS.v_minus) / PROF.sqrt_delta
    # int a w dy = -Y1 / delta, since dy = -u_tilde_x dx / delta
    lhs = np.trapezoid(a[fr.indices] * fr.f, fr.y) if hasattr(np, "trapezoid") else np.trapz(a[fr.indices] * fr.f, fr.y)
    assert lhs == pytest.approx(-rec.Y1 / ENDS.delta, rel=1e-4)


def _records(h1s, dv=None, t=None):
    base = ledger(_state(shape="zero"), PROF, PROF.constants)
    t = t if t is not None else range(len(h1s))
    dv = dv if dv is not None else [0.0] * len(h1s)
    return [replace(base, t=float(ti), h1=h, Dv=d, aRE=h) for ti, h, d in zip(t, h1s, dv)]


def test_apriori_ratio_shapes():
    assert apriori_ratio(_records([0.0, 0.0]), 0.1).tolist() == [1.0, 1.0]
    r = apriori_ratio(_records([2.0, 1.0, 0.5], dv=[1.0, 1.0, 1.0]), 0.1)
    assert r.tolist() == pytest.approx([1.0, 1.5, 2.0])
    assert np.all(np.diff(apriori_ratio(_records([1.0, 3.0, 0.1]), 0.1)) >= 0.0)
    recs = with_apriori(_records([1.0, 1.0]), 0.1)
    assert [x.apriori_ratio for x in recs] == [1.0, 1.0]
    assert with_apriori([], 0.1) == []


def test_dissipation_integrals_and_slack():
    ints = dissipation_integrals(_records([1.0] * 5, dv=[2.0] * 5))
    assert ints["D"].tolist() == pytest.approx([0.0, 2.0, 4.0, 6.0, 8.0])
    with pytest.raises(UsageError):
        dissipation_integrals([])
    assert contraction_slack(_records([3.0, 2.0, 2.5, 1.0])) == pytest.approx(0.5)
    assert contraction_slack(_records([3.0, 2.0])) == 0.0


@pytest.mark.parametrize("where,at", [("first", 0), ("center", 1), ("last", 2)])
def test_identity_residual_exact_on_quadratics(where, at):
    f = lambda t: 1.0 + 0.3 * t - 0.2 * t * t  # noqa: E731
    df = lambda t: 0.3 - 0.4 * t  # noqa: E731
    ts = [2.0, 2.5, 3.0]
    rec = replace(_records([1.0])[0], t=ts[at], rate=df(ts[at]))
    assert energy_identity_residual([(t, f(t)) for t in ts], rec, where) <= 1e-14


def test_identity_residual_rejections():
    rec = replace(_records([1.0])[0], t=1.0)
    with pytest.raises(UsageError):
        energy_identity_residual([(0.0, 1.0), (1.0, 1.0)], rec)
    with pytest.raises(UsageError):
        energy_identity_residual([(0.0, 1.0), (1.0, 1.0), (3.0, 1.0)], rec)
    with pytest.raises(UsageError):
        energy_identity_residual([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], rec, "first")
    with pytest.raises(UsageError):
        energy_identity_residual([(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], rec, "middle")


def test_diffusion_probe_scales_with_strength():
    probes = []
    for d in (0.2, 0.1, 0.05):
        ends = left_state_from_right(P, 1.0, 0.0, delta_v_from_delta(P, 1.0, d))
        probes.append(diffusion_coefficient_probe(solve_profile(P, ends)))
    ratios = [p.ratio for p in probes]
    assert all(math.isfinite(r) for r in ratios)
    assert max(ratios) / min(ratios) <= 1.1
    limits = [p.limit / p.delta for p in probes]
    assert max(limits) / min(limits) <= 1.1
    with pytest.raises(UsageError):
        diffusion_coefficient_probe(PROF, cutoff=0.7)


def test_diagnostics_csv_round_trip(tmp_path):
    rec = ledger(_state(av=0.004), PROF, PROF.constants)
    path = tmp_path / "d.csv"
    write_diagnostics_csv(path, [rec])
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == DIAGNOSTICS_HEADER
    back = [float(x) for x in rows[1]]
    assert back[:22] == rec.row()[:22]


def test_volume_only_perturbation_term_structure():
    rec = ledger(_state(av=0.004), PROF, PROF.constants)
    assert rec.GS == 0.0 and rec.Du1 == 0.0 and rec.Du2 == 0.0 and rec.cD == 0.0
    assert rec.Dv > 0.0


def test_cg2_matches_double_resolution_quadrature():
    s = _state(au=3e-3)
    rec = ledger(s, PROF, PROF.constants)
    fine = np.linspace(GRID.x_min, GRID.x_max, 2 * GRID.n_cells + 1)
    sp = shifted_eval(PROF, fine, 0.0)
    w = 3e-3 * np.exp(-(fine / 4.0) ** 2)
    assert rec.cG2 == pytest.approx(0.5 * ENDS.sigma * simpson(sp.a_x * w * w, x=fine), rel=1e-6)


def test_ledger_invariant_under_velocity_offset():
    ends2 = left_state_from_right(P, 1.0, 0.7, 0.1)
    prof2 = sim_profile(P, ends2, GRID)
    spec = PerturbationSpec(amplitude_v=0.004, amplitude_u=-0.002)
    r1 = ledger(initial_data(PROF, spec, GRID)[0], PROF, PROF.constants)
    r2 = ledger(initial_data(prof2, spec, GRID)[0], prof2, prof2.constants)
    for k in ("aRE", "G1", "GS", "Dv", "Du1", "Y1", "Y2", "Y3", "Y4", "B2", "B3", "B4", "cG2", "cD"):
        assert getattr(r2, k) == pytest.approx(getattr(r1, k), rel=1e-9, abs=1e-22)
    assert r2.rate == pytest.approx(r1.rate, rel=1e-9, abs=1e-22)


def test_completion_of_square_root():
    rng = np.random.default_rng(3)
    w = rng.normal(size=100)
    cs = PROF.constants.c_star
    Pm = w / (2.0 * cs)
    assert np.all((Pm - w / (2.0 * cs)) ** 2 == 0.0)
    assert completion_of_square_residual(Pm, w, np.ones(100), cs) <= 1e-12


def test_poincare_against_fine_quadrature():
    rng = np.random.default_rng(4)
    fine = np.linspace(0.0, 1.0, 400_001)
    for _ in range(20):
        m = int(rng.integers(3, 12))
        y = np.sort(rng.uniform(0.0, 1.0, m))
        f = rng.normal(size=m)
        lhs, rhs = poincare_check(f, y)
        g = np.interp(fine, y, f)
        gp = np.gradient(g, fine)
        ref_l = simpson((g - simpson(g, x=fine)) ** 2, x=fine)
        ref_r = 0.5 * simpson(fine * (1.0 - fine) * gp * gp, x=fine)
        assert lhs == pytest.approx(ref_l, rel=1e-3, abs=1e-9)
        assert rhs == pytest.approx(ref_r, rel=1e-2, abs=1e-9)


def test_y_range_covers_window():
    grid = SimGrid(-400.0, 400.0, 8192)
    prof = sim_profile(P, ENDS, grid)
    s = initial_data(prof, PerturbationSpec(shape="zero"), grid)[0]
    tol = 1e-6
    y = (ENDS.u_minus - s.u) / ENDS.delta
    assert y[0] < tol and y[-1] > 1.0 - tol
    fr = y_frame(s, prof, tol=tol)
    dy = np.max(np.diff(fr.y))
    assert fr.y[0] - tol < dy and (1.0 - tol) - fr.y[-1] < dy
    assert not fr.f.any()
