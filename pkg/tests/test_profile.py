import csv
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from shockstab import ModelParams, build_weight, left_state_from_right, shifted_eval, solve_profile
from shockstab.errors import ShockTooStrongError
from shockstab.hugoniot import o1_constants
from shockstab.profile import (PROFILE_CSV_HEADER, profile_report, profile_rhs, tail_fit, tail_rates,
                               write_profile_csv)

# xi at which v_tilde takes the given value, from mpmath quadrature of dxi = dv / f(v)
# with v_tilde(0) = 0.95 (30 digits)
XI_OF_V = {0.99: 11.963983612854872, 0.91: -11.834682669108805, 0.999: 25.086631817177473}


def test_center_and_ends(profile, ends):
    mid = np.flatnonzero(profile.xi == 0.0)
    assert mid.size == 1
    assert profile.v_tilde[mid[0]] == 0.5 * (ends.v_minus + ends.v_plus)
    assert profile.far_field_misfit <= 1e-9


@pytest.mark.parametrize("v", sorted(XI_OF_V))
def test_profile_matches_quadrature_oracle(profile, v):
    sp = shifted_eval(profile, np.array([XI_OF_V[v]]), 0.0)
    assert sp.v[0] == pytest.approx(v, abs=1e-10)


def test_ode_residual_and_derivatives(profile, params, ends):
    assert np.max(np.abs(profile.v_tilde_x - profile_rhs(params, ends, profile.v_tilde))) <= 1e-12
    fd = np.gradient(profile.v_tilde_x, profile.spacing, edge_order=2)
    assert np.max(np.abs(fd - profile.v_tilde_xx)) <= 1e-3 * np.max(np.abs(profile.v_tilde_xx))
    assert np.allclose(profile.u_tilde_x, -ends.sigma * profile.v_tilde_x, rtol=0, atol=1e-16)


def test_tail_slopes_match_linearization(profile, params, ends):
    left, right = tail_rates(params, ends)
    slope_r, r2r = tail_fit(profile, "right")
    slope_l, r2l = tail_fit(profile, "left")
    assert slope_r == pytest.approx(-right, rel=1e-3)
    assert slope_l == pytest.approx(left, rel=1e-3)
    assert min(r2r, r2l) >= 0.999
    with pytest.raises(ValueError):
        tail_fit(profile, "up")


def test_shifted_eval_translation(profile, ends):
    x = np.linspace(-50.0, 50.0, 101)
    a = shifted_eval(profile, x, 3.25)
    b = shifted_eval(profile, x - 3.25, 0.0)
    assert np.array_equal(a.v, b.v)
    far = shifted_eval(profile, np.array([-1e4, 1e4]), 0.0)
    assert far.v.tolist() == [ends.v_minus, ends.v_plus]
    assert far.u.tolist() == [ends.u_minus, ends.u_plus]
    assert far.v_x.tolist() == [0.0, 0.0]


def test_shifted_eval_reproduces_samples(profile):
    sp = shifted_eval(profile, profile.xi, 0.0)
    assert np.max(np.abs(sp.v - profile.v_tilde)) <= 1e-15
    assert np.max(np.abs(sp.v_x - profile.v_tilde_x)) <= 1e-15


def test_profile_csv(tmp_path, profile):
    path = tmp_path / "profile.csv"
    write_profile_csv(profile, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == PROFILE_CSV_HEADER
    assert len(rows) == profile.xi.size + 1
    assert float(rows[1][1]) == profile.v_tilde[0]


def test_report_flags(profile):
    rep = profile_report(profile)
    assert rep["v_tilde_increasing"] and rep["u_tilde_decreasing"]
    assert rep["rh_residual"] <= 1e-12
    assert rep["center_value"] == 0.95


@settings(max_examples=15)
@given(st.floats(1.1, 3.0), st.floats(0.5, 2.0), st.floats(0.02, 0.2))
def test_profile_invariants(g, vp, frac):
    p = ModelParams(g)
    e = left_state_from_right(p, vp, 0.0, frac * vp)
    try:
        c = o1_constants(p, e)
    except ShockTooStrongError:
        assume(False)
    # window wide enough for a 1e-10 tail gap under the exact decay rates
    L = 1.5 * math.log(0.5 * frac * vp / 1e-10) / min(tail_rates(p, e))
    prof = solve_profile(p, e, half_length=L, n_samples=1025)
    assert c == prof.constants
    assert np.all(prof.v_tilde_x > 0.0) and np.all(prof.u_tilde_x < 0.0)
    assert prof.far_field_misfit <= 1e-9 * vp
    w = build_weight(prof)
    sd = prof.sqrt_delta
    assert w.a.min() >= 1.0 and w.a.max() <= 1.0 + sd
    assert np.max(np.abs(w.a_x * sd - e.sigma * prof.v_tilde_x)) <= 1e-10
    q = np.linspace(prof.xi[0], prof.xi[-1], 777)
    sp = shifted_eval(prof, q, 0.1)
    assert np.all(np.diff(sp.v) >= -4.0 * np.finfo(float).eps)
    assert np.max(np.abs(sp.a_x * sd - e.sigma * sp.v_x)) <= 1e-10


def test_profile_rhs_values(params, ends):
    assert profile_rhs(params, ends, ends.v_minus) == 0.0
    assert profile_rhs(params, ends, ends.v_plus) == 0.0
    s = ends.sigma
    direct = -(0.95 / s) * (s * s * 0.05 + 0.95 ** (-params.gamma) - 0.9 ** (-params.gamma))
    assert profile_rhs(params, ends, 0.95) > 0.0
    assert profile_rhs(params, ends, 0.95) == pytest.approx(direct, rel=1e-12)


def test_shift_by_one_spacing_gives_neighbours(profile):
    sp = shifted_eval(profile, profile.xi[1:], profile.spacing)
    assert np.max(np.abs(sp.v - profile.v_tilde[:-1])) <= 1e-15


def test_far_field_weight_and_clamp(profile, ends):
    w = build_weight(profile)
    assert w.a[0] == 1.0 and w.a[-1] == 1.0 + profile.sqrt_delta
    sp = shifted_eval(profile, np.array([profile.xi[-1] + 1.0]), 0.0)
    got = (sp.v[0], sp.u[0], sp.v_x[0], sp.u_x[0], sp.u_xx[0], sp.a[0], sp.a_x[0])
    assert got == (ends.v_plus, ends.u_plus, 0.0, 0.0, 0.0, 1.0 + profile.sqrt_delta, 0.0)
