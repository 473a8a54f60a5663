"""Weighted relative entropy ledger and the exact identities behind it.

Every spatial integral uses the trapezoidal rule on the simulation grid
(:func:`integrate`), the same rule used for the shift velocity, so the
shift cross-check closes to rounding error.  Derivatives of the
perturbation are second-order central differences.

Notation for a state ``U = (v, u)`` and the shifted profile:

* ``phi = v - v_tilde^X`` and ``w = u - u_tilde^X``;
* ``P = p(v) - p(v_tilde^X)``;
* ``Q(v|v_tilde)`` is the relative internal energy;
* ``eta = w^2 / 2 + Q(v|v_tilde)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, UsageError
from .hugoniot import Constants
from .model import pressure, pressure_deriv, pressure_deriv2
from .profile import ShockProfile, shifted_eval

DIAGNOSTICS_HEADER = [
    "t", "X", "X_dot", "aRE", "G1", "GS", "Dv", "Du1", "Du2", "Y1", "Y2", "Y3", "Y4",
    "B1", "B2", "B3", "B4", "B5", "B6", "cG1", "cG2", "cD", "id_residual", "sup_v", "sup_u",
    "h1", "g", "apriori_ratio",
]


def integrate(f, dx: float) -> float:
    """Trapezoidal rule on a uniform grid."""
    f = np.asarray(f)
    return float(dx * (np.sum(f) - 0.5 * (f[0] + f[-1])))


def _relative_terms(gamma, phi, vt, pt):
    """``P``, the relative pressure ``p(v|vt)`` and ``Q(v|vt)`` without cancellation."""
    z = phi / vt
    L = np.log1p(z)
    e = np.expm1(-gamma * L)
    P = pt * e
    prel = pt * (e + gamma * z)
    Q = pt * vt * (np.expm1((1.0 - gamma) * L) / (gamma - 1.0) + z)
    return P, prel, Q


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Energy ledger at one instant.

    ``h1`` is the squared perturbation norm ``||phi||_H1^2 + ||w||_H1^2``.
    ``B5`` and ``B6`` carry an unspecified constant set to 1 and are only
    meaningful as shapes.  ``rate`` is ``X_dot Y + J_bad - J_good`` plus
    ``boundary_flux = sigma [a Q(v|v_tilde)]`` across the window ends, the
    predicted time derivative of ``aRE`` on the truncated domain (the
    boundary term vanishes on the whole line).
    """

    t: float
    X: float
    X_dot: float
    aRE: float
    G1: float
    GS: float
    Dv: float
    Du1: float
    Du2: float
    Y1: float
    Y2: float
    Y3: float
    Y4: float
    B1: float
    B2: float
    B3: float
    B4: float
    B5: float
    B6: float
    cG1: float
    cG2: float
    cD: float
    id_residual: float
    sup_v: float
    sup_u: float
    h1: float
    g: float
    apriori_ratio: float
    J_bad: float = 0.0
    J_good: float = 0.0
    Y_direct: float = 0.0
    X_dot_ledger: float = 0.0
    boundary_flux: float = 0.0
    rate: float = 0.0

    @property
    def Y(self) -> float:
        return self.Y1 + self.Y2 + self.Y3 + self.Y4

    @property
    def X_dot_mismatch(self) -> float:
        return abs(self.X_dot - self.X_dot_ledger)

    @property
    def Y_mismatch(self) -> float:
        return abs(self.Y - self.Y_direct)

    def row(self) -> list[float]:
        return [getattr(self, k) for k in DIAGNOSTICS_HEADER]


def _fields(state, profile):
    x, dx = state.grid.x, state.grid.dx
    sp = shifted_eval(profile, x, state.X)
    phi = state.v - sp.v
    w = state.u - sp.u
    return sp, phi, w, dx


def weighted_relative_entropy(state, profile: ShockProfile) -> float:
    """``int a^X eta(U | U_tilde^X) dx``."""
    sp, phi, w, dx = _fields(state, profile)
    params = profile.params
    _, _, Q = _relative_terms(params.gamma, phi, sp.v, np.asarray(pressure(params, sp.v)))
    return integrate(sp.a * (0.5 * w * w + Q), dx)


def ledger(state, profile: ShockProfile, constants: Constants) -> DiagnosticsRecord:
    """Evaluate every term of the weighted relative entropy balance for ``state``."""
    sp, phi, w, dx = _fields(state, profile)
    params, ends = profile.params, profile.ends
    sigma, delta, cs = ends.sigma, ends.delta, constants.c_star
    v = state.v
    vt = sp.v
    pt = np.asarray(pressure(params, vt))
    dp = np.asarray(pressure_deriv(params, vt))
    P, prel, Q = _relative_terms(params.gamma, phi, vt, pt)
    eta = 0.5 * w * w + Q
    phi_x = np.gradient(phi, dx, edge_order=2)
    w_x = np.gradient(w, dx, edge_order=2)
    w_xx = np.gradient(w_x, dx, edge_order=2)
    a, a_x = sp.a, sp.a_x
    I = lambda f: integrate(f, dx)  # noqa: E731

    Y1 = I(a * sp.u_x * w)
    Y2 = I(a * dp * sp.v_x * w) / sigma
    Y3 = -I(a * dp * sp.v_x * (phi + w / sigma))
    Y4 = -I(a_x * eta)
    Y_direct = -I(a_x * eta) + I(a * sp.u_x * w) - I(a * dp * sp.v_x * phi)

    sq = (P - w / (2.0 * cs)) ** 2
    cross = phi * sp.u_x / (v * vt)
    B1 = I(a_x * w * w) / (4.0 * cs)
    B2 = -I(a_x * w * w_x / v)
    B3 = I(a_x * w * cross)
    B4 = I(a * w_x * cross)
    B5 = delta * I(a_x * P * P)
    B6 = I(a_x * np.abs(P) ** 3)
    cG1 = cs * I(a_x * sq)
    cG2 = 0.5 * sigma * I(a_x * w * w)
    cD = I(a * w_x * w_x / v)

    J_bad = I(a_x * P * w) - I(a * sp.u_x * prel) + B2 + B3 + B4
    J_good = cG2 + sigma * I(a_x * Q) + cD
    Dv, Du1 = I(phi_x * phi_x), I(w_x * w_x)
    X_dot_ledger = -constants.m_shift / delta * (Y1 + Y2)
    rec = DiagnosticsRecord(
        t=float(state.t), X=float(state.X), X_dot=float(state.X_dot),
        aRE=I(a * eta),
        G1=I(np.abs(a_x) * sq), GS=I(np.abs(sp.v_x) * w * w),
        Dv=Dv, Du1=Du1, Du2=I(w_xx * w_xx),
        Y1=Y1, Y2=Y2, Y3=Y3, Y4=Y4,
        B1=B1, B2=B2, B3=B3, B4=B4, B5=B5, B6=B6,
        cG1=cG1, cG2=cG2, cD=cD,
        id_residual=math.nan,
        sup_v=float(np.max(np.abs(phi))), sup_u=float(np.max(np.abs(w))),
        h1=I(phi * phi) + Dv + I(w * w) + Du1, g=Dv + Du1,
        apriori_ratio=math.nan,
        J_bad=J_bad, J_good=J_good, Y_direct=Y_direct, X_dot_ledger=X_dot_ledger,
        boundary_flux=float(sigma * (a[-1] * Q[-1] - a[0] * Q[0])),
    )
    return replace(rec, rate=rec.X_dot * rec.Y + J_bad - J_good + rec.boundary_flux)


_STENCILS = {
    "center": (np.array([-1.0, 0.0, 1.0]), 1),
    "first": (np.array([-3.0, 4.0, -1.0]), 0),
    "last": (np.array([1.0, -4.0, 3.0]), 2),
}


def energy_identity_residual(samples, record: DiagnosticsRecord, where: str = "center") -> float:
    """Mismatch between the measured and predicted rate of change of ``aRE``.

    ``samples`` holds three ``(t, aRE)`` pairs at equal spacing and ``record``
    is the ledger at one of them: the middle one for ``where="center"``,
    otherwise the first or last (one-sided second-order difference).
    """
    if where not in _STENCILS:
        raise UsageError(f"where must be one of {sorted(_STENCILS)}, got {where!r}")
    if len(samples) != 3:
        raise UsageError(f"need exactly 3 consecutive samples, got {len(samples)}")
    t = np.array([s[0] for s in samples], dtype=float)
    val = np.array([s[1] for s in samples], dtype=float)
    h = np.diff(t)
    if not (h[0] > 0.0 and abs(h[1] - h[0]) <= 1e-9 * h[0]):
        raise UsageError("samples must be equally spaced in time")
    weights, at = _STENCILS[where]
    if abs(t[at] - record.t) > 1e-9 * max(1.0, abs(record.t)):
        raise UsageError(f"record time {record.t} does not match the sample time {t[at]}")
    deriv = float(weights @ val) / (2.0 * h[0])
    return abs(deriv - record.rate)


def completion_of_square_residual(P, w, a_x, c_star: float) -> float:
    """Relative pointwise gap in the completed square for ``a_x P w - C* a_x P^2``."""
    if not c_star > 0.0:
        raise DomainError(f"C* must be positive, got {c_star}")
    P, w, a_x = (np.asarray(q, dtype=float) for q in (P, w, a_x))
    lhs = a_x * P * w - c_star * a_x * P * P
    rhs = a_x * (-c_star * (P - w / (2.0 * c_star)) ** 2 + w * w / (4.0 * c_star))
    scale = np.abs(a_x) * (np.abs(P * w) + c_star * P * P + w * w / (4.0 * c_star))
    top = float(np.max(scale)) if scale.size else 0.0
    if top == 0.0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs))) / top


def completion_of_square_check(state, profile: ShockProfile, constants: Constants) -> float:
    sp, phi, w, _ = _fields(state, profile)
    P = np.asarray(pressure(profile.params, state.v)) - np.asarray(pressure(profile.params, sp.v))
    return completion_of_square_residual(P, w, sp.a_x, constants.c_star)


def poincare_check(f, y=None) -> tuple[float, float]:
    """Both sides of the weighted Poincare inequality on ``[0, 1]``.

    ``f`` is taken piecewise linear through the samples and constant beyond
    the first and last sample; both integrals are then evaluated exactly.
    Returns ``(int |f - mean f|^2, 1/2 int y (1 - y) |f'|^2)``.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size < 3:
        raise UsageError("poincare_check needs at least 3 samples")
    y = np.linspace(0.0, 1.0, f.size) if y is None else np.asarray(y, dtype=float)
    if y.shape != f.shape:
        raise UsageError("y and f must have the same length")
    h = np.diff(y)
    if np.any(h <= 0.0) or y[0] < 0.0 or y[-1] > 1.0:
        raise UsageError("y must be strictly increasing inside [0, 1]")
    head, tail = y[0], 1.0 - y[-1]
    mean = f[0] * head + float(np.sum(0.5 * (f[:-1] + f[1:]) * h)) + f[-1] * tail
    a, b = f[:-1] - mean, f[1:] - mean
    lhs = (f[0] - mean) ** 2 * head + float(np.sum(h * (a * a + a * b + b * b) / 3.0)) + (f[-1] - mean) ** 2 * tail
    slope = np.diff(f) / h
    prim = lambda s: s * s / 2.0 - s ** 3 / 3.0  # noqa: E731
    rhs = 0.5 * float(np.sum(slope * slope * (prim(y[1:]) - prim(y[:-1]))))
    return lhs, rhs


@dataclass(frozen=True, eq=False)
class YFrame:
    y: np.ndarray
    f: np.ndarray
    jacobian: np.ndarray
    indices: np.ndarray


def y_frame(state, profile: ShockProfile, tol: float = 0.0) -> YFrame:
    """Perturbation ``u - u_tilde^X`` in the coordinate ``y = (u_- - u_tilde^X) / delta``.

    Only nodes with ``tol < y < 1 - tol`` and positive Jacobian are kept, so
    ``y`` is strictly increasing.
    """
    delta = profile.ends.delta
    if not delta > 0.0:
        raise DomainError("degenerate profile: delta must be positive")
    sp, _, w, _ = _fields(state, profile)
    y = (profile.ends.u_minus - sp.u) / delta
    jac = -sp.u_x / delta
    keep = (jac > 0.0) & (y > tol) & (y < 1.0 - tol)
    idx = np.flatnonzero(keep)
    if idx.size:
        # drop repeats where y has saturated in floating point
        ok = np.concatenate(([True], np.diff(y[idx]) > 0.0))
        idx = idx[ok]
    return YFrame(y=y[idx], f=w[idx], jacobian=jac[idx], indices=idx)


def dissipation_integrals(records) -> dict[str, np.ndarray]:
    """Running time integrals of the dissipation and good terms over the ticks."""
    if not records:
        raise UsageError("empty history")
    t = np.array([r.t for r in records])
    get = lambda name: np.array([getattr(r, name) for r in records])  # noqa: E731
    cum = lambda f: cumulative_trapezoid(f, t, initial=0.0) if t.size > 1 else np.zeros(1)  # noqa: E731
    return {
        "t": t,
        "D": cum(get("Dv") + get("Du1") + get("Du2")),
        "G": cum(get("G1") + get("GS")),
        "X_dot_sq": cum(get("X_dot") ** 2),
    }


def apriori_ratio(records, delta: float, initial: DiagnosticsRecord | None = None) -> np.ndarray:
    """Running maximum of the a-priori bound ratio at every tick.

    The numerator is ``sup h1 + delta int |X_dot|^2 + int (G1 + GS) +
    int (Dv + Du1 + Du2)``, and the denominator is the initial ``h1``.  A
    zero perturbation gives 0/0, which is reported as 1.
    """
    ints = dissipation_integrals(records)
    h1 = np.maximum.accumulate(np.array([r.h1 for r in records]))
    num = h1 + delta * ints["X_dot_sq"] + ints["G"] + ints["D"]
    den = (initial or records[0]).h1
    if den == 0.0:
        ratio = np.where(num == 0.0, 1.0, np.inf)
    else:
        ratio = num / den
    return np.maximum.accumulate(ratio)


def with_apriori(records, delta: float):
    if not records:
        return []
    path = apriori_ratio(records, delta)
    return [replace(r, apriori_ratio=float(c)) for r, c in zip(records, path)]


def contraction_slack(records) -> float:
    """Largest one-tick increase of ``aRE`` (zero when it never increases)."""
    vals = np.array([r.aRE for r in records])
    if vals.size < 2:
        return 0.0
    return max(0.0, float(np.max(np.diff(vals))))


@dataclass(frozen=True)
class DiffusionProbe:
    max_deviation: float
    delta: float
    ratio: float
    limit: float
    cutoff: float
    n_used: int


def diffusion_coefficient_probe(profile: ShockProfile, cutoff: float = 0.02) -> DiffusionProbe:
    """Deviation of ``(dy/dx) / (y (1 - y) v_tilde)`` from its weak-shock limit.

    The limit is ``sigma / (2 sigma_ell) * delta * v''(p_-) / v'(p_-)^2`` for
    the inverse equation of state ``v(p)``; samples with ``y`` outside
    ``[cutoff, 1 - cutoff]`` are excluded.
    """
    if not 0.0 < cutoff < 0.5:
        raise UsageError(f"cutoff must lie in (0, 0.5), got {cutoff}")
    params, ends, c = profile.params, profile.ends, profile.constants
    sigma, delta = ends.sigma, ends.delta
    y = sigma * (profile.v_tilde - ends.v_minus) / delta
    dydx = sigma * profile.v_tilde_x / delta
    keep = (y >= cutoff) & (y <= 1.0 - cutoff)
    q = dydx[keep] / (y[keep] * (1.0 - y[keep]) * profile.v_tilde[keep])
    p1 = pressure_deriv(params, ends.v_minus)
    p2 = pressure_deriv2(params, ends.v_minus)
    dv = 1.0 / p1
    d2v = -p2 / p1 ** 3
    limit = sigma / (2.0 * c.sigma_ell) * delta * d2v / dv ** 2
    dev = float(np.max(np.abs(q - limit))) if q.size else math.nan
    return DiffusionProbe(max_deviation=dev, delta=delta, ratio=dev / delta ** 2, limit=limit,
                          cutoff=cutoff, n_used=int(q.size))


def write_diagnostics_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(DIAGNOSTICS_HEADER)
        for r in records:
            wr.writerow([repr(float(x)) for x in r.row()])


def record_fields() -> list[str]:
    return [f.name for f in fields(DiagnosticsRecord)]
