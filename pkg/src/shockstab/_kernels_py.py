"""Numpy implementations of the hot kernels (fallback for the Cython core)."""
import numpy as np
from scipy.linalg import solve_banded

SNAP = 1e-10


def hermite_eval(x0, h, values, slopes, lo, hi, q):
    q = np.asarray(q, dtype=float)
    m = values.shape[1]
    r = (q - x0) / h
    i = np.floor(r)
    t = r - i
    up = t > 1.0 - SNAP
    i[up] += 1.0
    t[up] = 0.0
    t[t < SNAP] = 0.0
    last = i == m - 1
    i[last] = m - 2
    t[last] = 1.0
    below = i < 0
    above = i > m - 2
    inside = ~(below | above)
    idx = i[inside].astype(np.intp)
    tt = t[inside]
    h00 = (1.0 + 2.0 * tt) * (1.0 - tt) ** 2
    h10 = tt * (1.0 - tt) ** 2
    h01 = tt * tt * (3.0 - 2.0 * tt)
    h11 = tt * tt * (tt - 1.0)
    out = np.empty((values.shape[0], q.size))
    for k in range(values.shape[0]):
        y, s = values[k], slopes[k]
        row = out[k]
        row[inside] = (h00 * y[idx] + h10 * h * s[idx]) + (h01 * y[idx + 1] + h11 * h * s[idx + 1])
        row[below] = lo[k]
        row[above] = hi[k]
    return out


def pressure_gap(phi, vt, pt, gamma):
    return pt * np.expm1(-gamma * np.log1p(phi / vt))


def hyperbolic_rhs(phi, w, vt, pt, gamma, sigma, dx):
    """Semi-discrete perturbation update; returns ``(dphi, dw, F_left, F_right)``.

    ``v`` leaves through the left boundary, so the first node is a half cell
    closed by the physical flux there.  ``F_left`` is that flux, and
    ``F_right`` is the flux through the face next to the right boundary node.
    """
    P = pressure_gap(phi, vt, pt, gamma)
    phi_g = np.append(phi, 0.0)
    w_g = np.append(w, 0.0)
    phi_up = 1.5 * phi_g[1:-1] - 0.5 * phi_g[2:]
    w_up = 1.5 * w_g[1:-1] - 0.5 * w_g[2:]
    F = -sigma * phi_up - 0.5 * (w[:-1] + w[1:])
    G = -sigma * w_up + 0.5 * (P[:-1] + P[1:])
    Fb = -sigma * phi[0] - w[0]
    dphi = np.zeros_like(phi)
    dw = np.zeros_like(w)
    dphi[0] = -(F[0] - Fb) / (0.5 * dx)
    dphi[1:-1] = -(F[1:] - F[:-1]) / dx
    dw[1:-1] = -(G[1:] - G[:-1]) / dx
    return dphi, dw, float(Fb), float(F[-1])


def diffusion_step(w, phi, vt, ut, dx, tau):
    """Crank-Nicolson step of ``w_t = (u_x/v)_x - (ut_x/vt)_x`` with ``v`` frozen."""
    v = vt + phi
    vf = 0.5 * (v[:-1] + v[1:])
    vtf = 0.5 * (vt[:-1] + vt[1:])
    phif = 0.5 * (phi[:-1] + phi[1:])
    c = 1.0 / (vf * dx * dx)
    g = (ut[1:] - ut[:-1]) / dx * (-phif / (vf * vtf))
    flux = c * (w[1:] - w[:-1]) + g / dx
    rhs = tau * (flux[1:] - flux[:-1])
    half = 0.5 * tau
    n = w.size - 2
    ab = np.empty((3, n))
    ab[0, 1:] = -half * c[1:-1]
    ab[1] = 1.0 + half * (c[:-1] + c[1:])
    ab[2, :-1] = -half * c[1:-1]
    out = w.copy()
    out[1:-1] += solve_banded((1, 1), ab, rhs, check_finite=False)
    return out


def shift_integrals(x0, h, values, slopes, v_minus, v_plus, u_minus, u_plus, q, u, sigma, sqrt_delta, gamma,
                    b, dx):
    """Trapezoidal ``(int a u_x w, int a p'(v) v_x w)`` with ``w = u - u_tilde`` at nodes ``q``.

    Only the first two rows (``v``, ``v_x``) of the Hermite tables are used;
    outside the tabulated window ``v_x = 0`` and both integrands vanish.
    """
    q = np.asarray(q, dtype=float)
    v, vx = hermite_eval(x0, h, values[:2], slopes[:2], (v_minus, 0.0), (v_plus, 0.0), q)
    right = v >= 0.5 * (v_minus + v_plus)
    z = np.where(right, v - v_plus, v - v_minus)
    ut = np.where(right, u_plus, u_minus) - sigma * z
    a = np.where(right, 1.0 + sqrt_delta, 1.0) + sigma * z / sqrt_delta
    k = np.clip(a, 1.0, 1.0 + sqrt_delta) * vx * (u - ut)
    f1 = -sigma * k
    f2 = -gamma * b * v ** (-gamma - 1.0) * k
    wts = np.full(q.size, dx)
    wts[0] = wts[-1] = 0.5 * dx
    return float(np.dot(wts, f1)), float(np.dot(wts, f2))
