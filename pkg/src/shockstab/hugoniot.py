"""Rankine-Hugoniot data on the 2-shock curve and the derived O(1) constants."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, InvalidShockError, ShockTooStrongError
from .model import ModelParams, pressure, pressure_deriv, pressure_deriv2, pressure_jump


@dataclass(frozen=True)
class EndStates:
    v_minus: float
    v_plus: float
    u_minus: float
    u_plus: float
    sigma: float
    delta: float

    def rh_residuals(self, params: ModelParams) -> tuple[float, float]:
        """Residuals of both jump conditions, relative to the jump sizes."""
        s = self.sigma
        dv = self.v_plus - self.v_minus
        du = self.u_plus - self.u_minus
        dp = pressure_jump(params, self.v_plus, self.v_minus)
        r1 = (-s * dv - du) / max(abs(du), abs(s * dv))
        r2 = (-s * du + dp) / max(abs(dp), abs(s * du))
        return r1, r2


@dataclass(frozen=True)
class Constants:
    sigma_ell: float
    alpha_ell: float
    c_star: float
    m_shift: float


def shock_speed(params: ModelParams, v_minus: float, v_plus: float) -> float:
    if v_minus <= 0.0 or v_plus <= 0.0:
        raise DomainError(f"volumes must be positive, got v-={v_minus}, v+={v_plus}")
    if v_minus >= v_plus:
        raise InvalidShockError(f"entropy condition needs v- < v+, got {v_minus} >= {v_plus}")
    return math.sqrt(-pressure_jump(params, v_plus, v_minus) / (v_plus - v_minus))


def left_state_from_right(params: ModelParams, v_plus: float, u_plus: float,
                          delta_v: float) -> EndStates:
    """Left state on the 2-shock curve through ``(v_plus, u_plus)``.

    ``delta_v = v_plus - v_minus`` parametrizes the curve.
    """
    v_plus, u_plus, delta_v = float(v_plus), float(u_plus), float(delta_v)
    if not (0.0 < delta_v < v_plus):
        raise InvalidShockError(f"need 0 < delta_v < v_plus, got delta_v={delta_v}")
    v_minus = v_plus - delta_v
    sigma = shock_speed(params, v_minus, v_plus)
    jump = sigma * delta_v
    return EndStates(
        v_minus=v_minus,
        v_plus=v_plus,
        u_minus=u_plus + jump,
        u_plus=u_plus,
        sigma=sigma,
        delta=jump,
    )


def delta_v_from_delta(params: ModelParams, v_plus: float, delta: float) -> float:
    """Invert ``delta_v -> |u- - u+|`` on ``(0, v_plus)`` by bracketing."""
    if delta <= 0.0:
        raise InvalidShockError(f"shock strength must be positive, got {delta}")

    def gap(dv):
        return shock_speed(params, v_plus - dv, v_plus) * dv - delta

    lo, hi = v_plus * 1e-12, v_plus * (1.0 - 1e-12)
    if gap(hi) < 0.0:
        raise InvalidShockError(f"no 2-shock from v+={v_plus} reaches delta={delta}")
    if gap(lo) > 0.0:
        raise InvalidShockError(f"shock strength delta={delta} is below the resolvable range")
    return brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def o1_constants(params: ModelParams, ends: EndStates) -> Constants:
    """sigma_ell, alpha_ell, C* and the shift gain M for the given shock.

    Raises ShockTooStrongError when C* is not positive.
    """
    g = params.gamma
    vm = ends.v_minus
    dpm = pressure_deriv(params, vm)
    sigma_ell = math.sqrt(-dpm)
    alpha_ell = (g + 1.0) / (2.0 * g * sigma_ell * pressure(params, vm))
    alt = pressure_deriv2(params, vm) / (2.0 * dpm * dpm * sigma_ell)
    if abs(alt - alpha_ell) > 1e-12 * abs(alpha_ell):
        raise AssertionError(f"alpha_ell forms disagree: {alpha_ell} vs {alt}")
    c_star = 0.5 * (1.0 / sigma_ell - math.sqrt(ends.delta) * (g + 1.0) / g / pressure(params, vm))
    if c_star <= 0.0:
        raise ShockTooStrongError(f"C* = {c_star:.3e} <= 0 for delta = {ends.delta}")
    return Constants(
        sigma_ell=sigma_ell,
        alpha_ell=alpha_ell,
        c_star=c_star,
        m_shift=1.25 * sigma_ell ** 3 * alpha_ell,
    )
