"""Viscous shock profile, the weight function and shifted evaluation.

The traveling wave solves the first integral of the profile ODE,

    v' = -(v / sigma) * (sigma^2 (v - v_-) + p(v) - p(v_-)),

integrated outward from ``v(0) = (v_- + v_+) / 2``.  Each half is integrated
in the log-gap variable ``s = log|v - v_pm|``, which tends to a linear
function of ``xi`` in the tails, so the solver never stalls near the
equilibria and the exponential tails are resolved to full relative
precision.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import linregress

from . import kernels
from .errors import DomainError, SolverFailure
from .hugoniot import Constants, EndStates, o1_constants
from .model import ModelParams, pressure, pressure_deriv, pressure_deriv2

PROFILE_CSV_HEADER = ["xi", "v_tilde", "u_tilde", "v_tilde_x", "u_tilde_x", "u_tilde_xx", "a", "a_x"]


@dataclass(frozen=True, eq=False)
class ShockProfile:
    """Samples of the traveling wave on a uniform ``xi`` grid.

    ``gap`` holds ``|v_tilde - v_-|`` for ``xi < 0`` and ``|v_tilde - v_+|``
    for ``xi >= 0`` at full relative precision (the difference itself
    underflows ``v_tilde`` in the far tails).
    """

    xi: np.ndarray
    v_tilde: np.ndarray
    u_tilde: np.ndarray
    v_tilde_x: np.ndarray
    u_tilde_x: np.ndarray
    u_tilde_xx: np.ndarray
    v_tilde_xx: np.ndarray
    v_tilde_xxx: np.ndarray
    gap: np.ndarray
    ends: EndStates
    constants: Constants
    params: ModelParams
    _hermite: tuple = field(repr=False, default=None)

    @property
    def spacing(self) -> float:
        return float((self.xi[-1] - self.xi[0]) / (self.xi.size - 1))

    @property
    def far_field_misfit(self) -> float:
        return float(max(self.gap[0], self.gap[-1]))

    @property
    def sqrt_delta(self) -> float:
        return math.sqrt(self.ends.delta)


@dataclass(frozen=True, eq=False)
class WeightFn:
    a: np.ndarray
    a_x: np.ndarray


def _pressure_gap_ratio(params, v_end, w):
    """``(p(v_end + w) - p(v_end)) / w``, accurate for tiny ``w``."""
    g = params.gamma
    return params.b * v_end ** (-g) * np.expm1(-g * np.log1p(w / v_end)) / w


def _bracket(params, ends, v):
    """``sigma^2 (v - v_-) + p(v) - p(v_-)`` evaluated about the nearer end."""
    s2 = ends.sigma ** 2
    mid = 0.5 * (ends.v_minus + ends.v_plus)
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    left = (v < mid) & (v != ends.v_minus)
    right = (v >= mid) & (v != ends.v_plus)
    wl = v[left] - ends.v_minus
    out[left] = wl * (s2 + _pressure_gap_ratio(params, ends.v_minus, wl))
    # RH turns the bracket into sigma^2 (v - v_+) + p(v) - p(v_+)
    wr = v[right] - ends.v_plus
    out[right] = wr * (s2 + _pressure_gap_ratio(params, ends.v_plus, wr))
    return out


def _velocity_and_weight(ends: EndStates, v, sqrt_delta: float):
    """``u_tilde`` and ``a`` as affine functions of ``v_tilde``, anchored at the nearer end state.

    Both anchors give the same line (Rankine-Hugoniot), but the nearer one
    reproduces the far-field values exactly.
    """
    v = np.asarray(v, dtype=float)
    s = ends.sigma
    right = v >= 0.5 * (ends.v_minus + ends.v_plus)
    u = np.where(right, ends.u_plus - s * (v - ends.v_plus), ends.u_minus - s * (v - ends.v_minus))
    a = np.where(right, 1.0 + sqrt_delta + s * (v - ends.v_plus) / sqrt_delta,
                 1.0 + s * (v - ends.v_minus) / sqrt_delta)
    # the clip only removes rounding overshoot at the far-field ends
    return u, np.clip(a, 1.0, 1.0 + sqrt_delta)


def profile_rhs(params: ModelParams, ends: EndStates, v):
    """Right-hand side ``dv/dxi`` of the first-integral profile ODE."""
    arr = np.asarray(v, dtype=float)
    if np.any(arr < ends.v_minus) or np.any(arr > ends.v_plus):
        raise DomainError(f"profile value outside [{ends.v_minus}, {ends.v_plus}]")
    out = -(arr / ends.sigma) * _bracket(params, ends, arr)
    return float(out) if np.ndim(v) == 0 else out


def _profile_derivatives(params, ends, v, vx):
    s = ends.sigma
    bracket = _bracket(params, ends, v)
    dbracket = s * s + pressure_deriv(params, v)
    f1 = -bracket / s - v * dbracket / s
    f2 = -2.0 * dbracket / s - v * pressure_deriv2(params, v) / s
    vxx = f1 * vx
    vxxx = f2 * vx * vx + f1 * vxx
    return vxx, vxxx


def default_half_length(ends: EndStates, constants: Constants, tol: float = 1e-9) -> float:
    return 30.0 / (constants.sigma_ell * ends.delta) * max(1.0, abs(math.log(tol)) / 10.0)


def solve_profile(params: ModelParams, ends: EndStates, half_length: float | None = None,
                  n_samples: int = 4097, *, xi: np.ndarray | None = None,
                  tol: float = 1e-9, rtol: float = 1e-12) -> ShockProfile:
    """Solve the viscous shock ODE and sample it on a uniform grid.

    Parameters
    ----------
    half_length
        Grid covers ``[-L, L]``; defaults to :func:`default_half_length`.
    n_samples
        Number of uniform samples when ``xi`` is not given (``>= 64``).
    xi
        Explicit uniform, strictly increasing sample points (overrides
        ``half_length``/``n_samples``).
    tol
        Far-field misfit tolerance used for the default half-length.

    Raises
    ------
    SolverFailure
        If the integrator fails.
    """
    if params.mu != 1.0:
        raise DomainError("profile solver assumes the normalized viscosity mu = 1")
    constants = o1_constants(params, ends)
    if xi is None:
        if n_samples < 64:
            raise DomainError(f"n_samples must be >= 64, got {n_samples}")
        L = default_half_length(ends, constants, tol) if half_length is None else float(half_length)
        xi = np.linspace(-L, L, n_samples)
    else:
        xi = np.asarray(xi, dtype=float)
        steps = np.diff(xi)
        if xi.size < 2 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise DomainError("xi must be uniform and strictly increasing")
    sigma = ends.sigma
    s2 = sigma * sigma

    def rhs_right(_, s):
        w = -math.exp(s[0])
        v = ends.v_plus + w
        return [-(v / sigma) * (s2 + _pressure_gap_ratio(params, ends.v_plus, w))]

    def rhs_left(_, s):
        w = math.exp(s[0])
        v = ends.v_minus + w
        return [-(v / sigma) * (s2 + _pressure_gap_ratio(params, ends.v_minus, w))]

    s0 = math.log(0.5 * (ends.v_plus - ends.v_minus))
    gap = np.empty_like(xi)
    right = xi >= 0.0
    left = ~right
    for mask, fun, sign in ((right, rhs_right, 1.0), (left, rhs_left, -1.0)):
        if not mask.any():
            continue
        reach = float(np.max(np.abs(xi[mask])))
        if reach == 0.0:
            gap[mask] = math.exp(s0)
            continue
        sol = solve_ivp(fun, (0.0, sign * reach), [s0], method="DOP853", rtol=rtol,
                        atol=1e-12, dense_output=True)
        if not sol.success:
            raise SolverFailure(f"profile integration failed: {sol.message}")
        gap[mask] = np.exp(sol.sol(xi[mask])[0])
    v = np.where(right, ends.v_plus - gap, ends.v_minus + gap)
    center = xi == 0.0
    v[center] = 0.5 * (ends.v_minus + ends.v_plus)
    gap[center] = ends.v_plus - v[center]
    # v' from the ODE in gap form: v' = w * ds/dxi with w = v - v_end
    w = np.where(right, -gap, gap)
    v_end = np.where(right, ends.v_plus, ends.v_minus)
    vx = -w * (v / sigma) * (s2 + _pressure_gap_ratio(params, v_end, w))
    vxx, vxxx = _profile_derivatives(params, ends, v, vx)
    u, _ = _velocity_and_weight(ends, v, math.sqrt(ends.delta))
    profile = ShockProfile(
        xi=xi,
        v_tilde=v,
        u_tilde=u,
        v_tilde_x=vx,
        u_tilde_x=-sigma * vx,
        u_tilde_xx=-sigma * vxx,
        v_tilde_xx=vxx,
        v_tilde_xxx=vxxx,
        gap=gap,
        ends=ends,
        constants=constants,
        params=params,
        _hermite=_hermite_tables(v, vx, vxx, vxxx, float((xi[-1] - xi[0]) / (xi.size - 1))),
    )
    return profile


def _hermite_tables(v, vx, vxx, vxxx, h):
    """Values and (monotone-limited) slopes for cubic Hermite evaluation."""
    values = np.vstack([v, vx, vxx])
    slopes = np.vstack([vx.copy(), vxx, vxxx])
    sv = slopes[0]
    secant = np.diff(v) / h
    flat = secant == 0.0
    sv[:-1][flat] = 0.0
    sv[1:][flat] = 0.0
    # Fritsch-Carlson: keep (alpha, beta) inside the circle of radius 3
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = sv[:-1] / secant
        beta = sv[1:] / secant
    r2 = alpha * alpha + beta * beta
    bad = ~flat & (r2 > 9.0)
    for i in np.flatnonzero(bad):
        tau = 3.0 / math.sqrt(r2[i])
        sv[i] = tau * alpha[i] * secant[i]
        sv[i + 1] = tau * beta[i] * secant[i]
    return np.ascontiguousarray(values), np.ascontiguousarray(slopes)


def build_weight(profile: ShockProfile) -> WeightFn:
    """Weight ``a = 1 + (u_- - u_tilde)/sqrt(delta)`` and its derivative."""
    sd = profile.sqrt_delta
    ends = profile.ends
    _, a = _velocity_and_weight(ends, profile.v_tilde, sd)
    a_x = ends.sigma * profile.v_tilde_x / sd
    return WeightFn(a=a, a_x=a_x)


@dataclass(frozen=True, eq=False)
class ShiftedProfile:
    """Profile quantities sampled at ``x - shift``."""

    v: np.ndarray
    u: np.ndarray
    v_x: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray
    a: np.ndarray
    a_x: np.ndarray
    v_xx: np.ndarray


def shifted_eval(profile: ShockProfile, x_grid, shift: float) -> ShiftedProfile:
    """Evaluate ``(v, u, v_x, u_x, u_xx, a, a_x)`` of the profile at ``x - shift``.

    Outside the sampled window the far-field constants are returned with zero
    derivatives.
    """
    ends = profile.ends
    q = np.asarray(x_grid, dtype=float) - shift
    values, slopes = profile._hermite
    lo = np.array([ends.v_minus, 0.0, 0.0])
    hi = np.array([ends.v_plus, 0.0, 0.0])
    out = kernels.hermite_eval(float(profile.xi[0]), profile.spacing, values, slopes, lo, hi, q)
    v, vx, vxx = out
    sigma = ends.sigma
    sd = profile.sqrt_delta
    u, a = _velocity_and_weight(ends, v, sd)
    beyond = q > profile.xi[-1]
    if beyond.any():
        u[beyond] = ends.u_plus
        a[beyond] = 1.0 + sd
    before = q < profile.xi[0]
    if before.any():
        u[before] = ends.u_minus
        a[before] = 1.0
    return ShiftedProfile(v=v, u=u, v_x=vx, u_x=-sigma * vx, u_xx=-sigma * vxx,
                          a=a, a_x=sigma * vx / sd, v_xx=vxx)


def tail_fit(profile: ShockProfile, side: str = "right"):
    """Linear fit of ``log|v_tilde - v_pm|`` over the outer quarter of the grid.

    Returns ``(slope, r_squared)``.
    """
    L = profile.xi[-1]
    if side == "right":
        mask = profile.xi >= 0.5 * L
    elif side == "left":
        mask = profile.xi <= 0.5 * profile.xi[0]
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    fit = linregress(profile.xi[mask], np.log(profile.gap[mask]))
    return float(fit.slope), float(fit.rvalue ** 2)


def tail_rates(params: ModelParams, ends: EndStates) -> tuple[float, float]:
    """Exact exponential decay rates of the linearized ODE at ``v_-`` and ``v_+``."""
    s2 = ends.sigma ** 2
    left = (ends.v_minus / ends.sigma) * -(s2 + pressure_deriv(params, ends.v_minus))
    right = (ends.v_plus / ends.sigma) * (s2 + pressure_deriv(params, ends.v_plus))
    return left, right


def profile_report(profile: ShockProfile) -> dict:
    """Property summary used by the ``profile`` subcommand and tests."""
    ends = profile.ends
    c = profile.constants
    params = profile.params
    weight = build_weight(profile)
    r1, r2 = ends.rh_residuals(params)
    slope_r, r2_r = tail_fit(profile, "right")
    slope_l, r2_l = tail_fit(profile, "left")
    rate_l, rate_r = tail_rates(params, ends)
    mid = np.argmin(np.abs(profile.xi))
    vx = profile.v_tilde_x
    core = vx > 1e-12 * vx.max()
    ode_residual = np.max(np.abs(vx - profile_rhs(params, ends, profile.v_tilde)))
    return {
        "v_tilde_increasing": bool(np.all(vx > 0.0) and np.all(np.diff(profile.v_tilde) >= 0.0)),
        "u_tilde_decreasing": bool(np.all(profile.u_tilde_x < 0.0)),
        "rh_residual": max(abs(r1), abs(r2)),
        "far_field_misfit": profile.far_field_misfit,
        "center_value": float(profile.v_tilde[mid]),
        "center_xi": float(profile.xi[mid]),
        "tail_slope_right": slope_r,
        "tail_r2_right": r2_r,
        "tail_slope_left": slope_l,
        "tail_r2_left": r2_l,
        "tail_rate_right": rate_r,
        "tail_rate_left": rate_l,
        "vxx_over_delta_vx": float(np.max(np.abs(profile.v_tilde_xx[core]) / vx[core]) / ends.delta),
        "speed_gap_over_delta": abs(ends.sigma - c.sigma_ell) / ends.delta,
        "sound_gap_over_delta": float(np.max(np.abs(c.sigma_ell ** 2 + pressure_deriv(params, profile.v_tilde)))) / ends.delta,
        "weight_min": float(weight.a.min()),
        "weight_max": float(weight.a.max()),
        "ode_residual": float(ode_residual),
        "delta": ends.delta,
        "sigma": ends.sigma,
    }


def write_profile_csv(profile: ShockProfile, path) -> None:
    weight = build_weight(profile)
    cols = [profile.xi, profile.v_tilde, profile.u_tilde, profile.v_tilde_x,
            profile.u_tilde_x, profile.u_tilde_xx, weight.a, weight.a_x]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_CSV_HEADER)
        for row in zip(*cols):
            writer.writerow([f"{x:.17g}" for x in row])
