"""Gamma-law equation of state, internal energy and relative quantities.

All functions accept scalars or numpy arrays and are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ModelParams:
    """Pressure law ``p(v) = b v**(-gamma)`` with viscosity scale ``mu``."""

    gamma: float
    b: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise DomainError(f"gamma must be > 1, got {self.gamma}")
        if not np.isfinite(self.b) or self.b <= 0.0:
            raise DomainError(f"b must be > 0, got {self.b}")
        if not np.isfinite(self.mu) or self.mu <= 0.0:
            raise DomainError(f"mu must be > 0, got {self.mu}")


def _check_volume(v, name="v"):
    arr = np.asarray(v, dtype=float)
    if not np.all(arr > 0.0):
        raise DomainError(f"{name} must be positive, got min {np.min(arr)!r}")
    return arr


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def pressure(params: ModelParams, v):
    v = _check_volume(v)
    return _out(params.b * v ** (-params.gamma))


def pressure_deriv(params: ModelParams, v):
    v = _check_volume(v)
    g = params.gamma
    return _out(-g * params.b * v ** (-g - 1.0))


def pressure_deriv2(params: ModelParams, v):
    v = _check_volume(v)
    g = params.gamma
    return _out(g * (g + 1.0) * params.b * v ** (-g - 2.0))


def pressure_jump(params: ModelParams, v, vbar):
    """``p(v) - p(vbar)`` without cancellation when ``v`` is close to ``vbar``."""
    v = _check_volume(v)
    vbar = _check_volume(vbar, "vbar")
    g = params.gamma
    return _out(params.b * vbar ** (-g) * np.expm1(-g * np.log1p((v - vbar) / vbar)))


def internal_energy(params: ModelParams, v):
    """Internal energy ``Q`` normalized so that ``Q'(v) = -p(v)``."""
    v = _check_volume(v)
    g = params.gamma
    return _out(params.b * v ** (1.0 - g) / (g - 1.0))


def internal_energy_deriv(params: ModelParams, v):
    return _out(-np.asarray(pressure(params, v)))


def relative_quantity(F: Callable, dF: Callable, v, w):
    """``F(v|w) = F(v) - F(w) - F'(w) (v - w)``."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return _out(F(v) - F(w) - dF(w) * (v - w))


def relative_pressure(params: ModelParams, v, w):
    return relative_quantity(
        lambda x: pressure(params, x), lambda x: pressure_deriv(params, x), v, w
    )


def relative_internal_energy(params: ModelParams, v, w):
    return relative_quantity(
        lambda x: internal_energy(params, x),
        lambda x: internal_energy_deriv(params, x),
        v,
        w,
    )


def rel_entropy_density(params: ModelParams, U, Ubar):
    """Relative entropy ``|u - ubar|^2 / 2 + Q(v|vbar)`` for ``U = (v, u)``."""
    v, u = U
    vbar, ubar = Ubar
    u = np.asarray(u, dtype=float)
    ubar = np.asarray(ubar, dtype=float)
    q = np.asarray(relative_internal_energy(params, v, vbar))
    return _out(0.5 * (u - ubar) ** 2 + q)


@dataclass
class Lemma21Probe:
    """Both sides of each relative-quantity bound at one pair ``(v, vbar)``.

    Quantities with an unspecified constant are reported as the infimum
    constant that would make the bound hold at this sample (``*_const``).
    Range violations are flagged, never raised.
    """

    v: float
    vbar: float
    delta: float
    dv_sq: float
    dp: float
    p_rel: float
    q_rel: float
    # (1): |v - vbar|^2 <= C Q(v|vbar) and <= C p(v|vbar)
    q_lower_const: float
    p_lower_const: float
    # (2): |p(v) - p(vbar)| <= C |v - vbar|
    lipschitz_const: float
    # (3): leading coefficients and remainder constants
    p_ratio: float
    p_leading: float
    p_upper_const: float
    q_ratio: float
    q_leading: float
    q_upper_const: float
    q_lower_rhs: float
    q_lower_holds: bool
    in_range_1: bool
    in_range_2: bool
    in_range_3: bool

    @property
    def p_ratio_error(self) -> float:
        return abs(self.p_ratio - self.p_leading) / self.p_leading

    @property
    def q_ratio_error(self) -> float:
        return abs(self.q_ratio - self.q_leading) / self.q_leading


def lemma21_probe(params: ModelParams, v: float, vbar: float, delta: float,
                  v_plus: float = 1.0) -> Lemma21Probe:
    """Evaluate the relative-quantity bounds at ``(v, vbar)``.

    The leading coefficients are those of the ``b = 1`` normalization:
    ``(gamma+1)/(2 gamma p(vbar))`` for ``p(v|vbar)/|p(v)-p(vbar)|^2`` and
    ``p(vbar)**(-1/gamma-1)/(2 gamma)`` for ``Q(v|vbar)/|p(v)-p(vbar)|^2``.
    """
    v = float(_check_volume(v))
    vbar = float(_check_volume(vbar, "vbar"))
    g = params.gamma
    pbar = pressure(params, vbar)
    dp = pressure_jump(params, v, vbar)
    dv_sq = (v - vbar) ** 2
    p_rel = relative_pressure(params, v, vbar)
    q_rel = relative_internal_energy(params, v, vbar)

    def ratio(num, den):
        if den == 0.0:
            return 0.0 if num == 0.0 else np.inf
        return num / den

    p_leading = (g + 1.0) / (2.0 * g * pbar)
    q_leading = pbar ** (-1.0 / g - 1.0) / (2.0 * g)
    p_ratio = ratio(p_rel, dp * dp) if dp != 0.0 else p_leading
    q_ratio = ratio(q_rel, dp * dp) if dp != 0.0 else q_leading
    q_lower_rhs = q_leading * dp * dp - (1.0 + g) / (3.0 * g * g) * pbar ** (-1.0 / g - 2.0) * dp ** 3
    p_plus = pressure(params, v_plus)
    return Lemma21Probe(
        v=v,
        vbar=vbar,
        delta=delta,
        dv_sq=dv_sq,
        dp=dp,
        p_rel=p_rel,
        q_rel=q_rel,
        q_lower_const=ratio(dv_sq, q_rel),
        p_lower_const=ratio(dv_sq, p_rel),
        lipschitz_const=ratio(abs(dp), abs(v - vbar)),
        p_ratio=p_ratio,
        p_leading=p_leading,
        p_upper_const=(p_ratio - p_leading) / delta if delta > 0 else np.nan,
        q_ratio=q_ratio,
        q_leading=q_leading,
        q_upper_const=(q_ratio - q_leading) / delta if delta > 0 else np.nan,
        q_lower_rhs=q_lower_rhs,
        q_lower_holds=bool(q_rel >= q_lower_rhs - 1e-15 * max(abs(q_rel), 1e-300)),
        in_range_1=bool(0.0 < vbar < 2.0 * v_plus and 0.0 < v < 3.0 * v_plus),
        in_range_2=bool(v > v_plus / 2.0 and vbar > v_plus / 2.0),
        in_range_3=bool(abs(dp) < delta and abs(pbar - p_plus) < delta),
    )
