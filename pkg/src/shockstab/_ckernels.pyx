# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; semantics match ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, log1p, expm1, exp, log

cnp.import_array()

cdef extern from "_ftz.h":
    unsigned int ftz_enter() nogil
    void ftz_leave(unsigned int old) nogil

cdef double SNAP = 1e-10


def hermite_eval(double x0, double h, const double[:, ::1] values, const double[:, ::1] slopes,
                 lo_in, hi_in, q):
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(lo_in, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(hi_in, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0], m = values.shape[1], nk = values.shape[0]
    out_arr = np.empty((nk, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, k, i
    cdef double r, fi, t, h00, h10, h01, h11
    for j in range(n):
        r = (qv[j] - x0) / h
        fi = floor(r)
        t = r - fi
        if t > 1.0 - SNAP:
            fi += 1.0
            t = 0.0
        elif t < SNAP:
            t = 0.0
        if fi == m - 1:
            fi = m - 2
            t = 1.0
        if fi < 0:
            for k in range(nk):
                out[k, j] = lo[k]
            continue
        if fi > m - 2:
            for k in range(nk):
                out[k, j] = hi[k]
            continue
        i = <Py_ssize_t>fi
        h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t)
        h10 = t * (1.0 - t) * (1.0 - t)
        h01 = t * t * (3.0 - 2.0 * t)
        h11 = t * t * (t - 1.0)
        for k in range(nk):
            out[k, j] = (h00 * values[k, i] + h10 * h * slopes[k, i]) + \
                        (h01 * values[k, i + 1] + h11 * h * slopes[k, i + 1])
    return out_arr


def pressure_gap(phi, vt, pt, double gamma):
    cdef const double[::1] ph = np.ascontiguousarray(phi, dtype=np.float64)
    cdef const double[::1] v = np.ascontiguousarray(vt, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(pt, dtype=np.float64)
    cdef Py_ssize_t n = ph.shape[0], j
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for j in range(n):
        out[j] = p[j] * expm1(-gamma * log1p(ph[j] / v[j]))
    return out_arr


def hyperbolic_rhs(const double[::1] phi, const double[::1] w, const double[::1] vt,
                   const double[::1] pt, double gamma, double sigma, double dx):
    cdef Py_ssize_t n = phi.shape[0], j
    dphi_arr = np.zeros(n)
    dw_arr = np.zeros(n)
    cdef double[::1] dphi = dphi_arr
    cdef double[::1] dw = dw_arr
    cdef double P0, P1, Fl, Gl, Fr, Gr, F0 = 0.0, Flast = 0.0
    cdef double phi2, w2, inv = 1.0 / dx
    # subnormal tails of the perturbation are numerically zero but slow
    cdef unsigned int csr = ftz_enter()
    P0 = pt[0] * expm1(-gamma * log1p(phi[0] / vt[0]))
    # face 1/2
    P1 = pt[1] * expm1(-gamma * log1p(phi[1] / vt[1]))
    phi2 = phi[2] if n > 2 else 0.0
    w2 = w[2] if n > 2 else 0.0
    Fl = -sigma * (1.5 * phi[1] - 0.5 * phi2) - 0.5 * (w[0] + w[1])
    Gl = -sigma * (1.5 * w[1] - 0.5 * w2) + 0.5 * (P0 + P1)
    F0 = -sigma * phi[0] - w[0]
    dphi[0] = -(Fl - F0) * (2.0 * inv)
    for j in range(1, n - 1):
        P0 = P1
        P1 = pt[j + 1] * expm1(-gamma * log1p(phi[j + 1] / vt[j + 1]))
        if j + 2 < n:
            phi2 = phi[j + 2]
            w2 = w[j + 2]
        else:
            phi2 = 0.0
            w2 = 0.0
        Fr = -sigma * (1.5 * phi[j + 1] - 0.5 * phi2) - 0.5 * (w[j] + w[j + 1])
        Gr = -sigma * (1.5 * w[j + 1] - 0.5 * w2) + 0.5 * (P0 + P1)
        dphi[j] = -(Fr - Fl) * inv
        dw[j] = -(Gr - Gl) * inv
        Fl = Fr
        Gl = Gr
    Flast = Fl
    ftz_leave(csr)
    return dphi_arr, dw_arr, F0, Flast


def diffusion_step(const double[::1] w, const double[::1] phi, const double[::1] vt,
                   const double[::1] ut, double dx, double tau):
    cdef Py_ssize_t N = w.shape[0], n = N - 2, j, k
    out_arr = np.array(w, dtype=np.float64, copy=True)
    cdef double[::1] out = out_arr
    cdef double[::1] c = np.empty(N - 1)
    cdef double[::1] flux = np.empty(N - 1)
    cdef double[::1] cp = np.empty(n)
    cdef double[::1] dp = np.empty(n)
    cdef double vf, vtf, phif, half = 0.5 * tau, inv2 = 1.0 / (dx * dx), a, b, cc, rhs, m
    cdef unsigned int csr = ftz_enter()
    for j in range(N - 1):
        vf = 0.5 * ((vt[j] + phi[j]) + (vt[j + 1] + phi[j + 1]))
        vtf = 0.5 * (vt[j] + vt[j + 1])
        phif = 0.5 * (phi[j] + phi[j + 1])
        c[j] = inv2 / vf
        flux[j] = c[j] * (w[j + 1] - w[j]) + (ut[j + 1] - ut[j]) / dx * (-phif / (vf * vtf)) / dx
    # Thomas sweep on interior nodes 1..N-2 (row k <-> node k+1)
    for k in range(n):
        a = -half * c[k]
        b = 1.0 + half * (c[k] + c[k + 1])
        cc = -half * c[k + 1]
        rhs = tau * (flux[k + 1] - flux[k])
        if k == 0:
            m = b
            cp[k] = cc / m
            dp[k] = rhs / m
        else:
            m = b - a * cp[k - 1]
            cp[k] = cc / m
            dp[k] = (rhs - a * dp[k - 1]) / m
    for k in range(n - 1, -1, -1):
        if k < n - 1:
            dp[k] = dp[k] - cp[k] * dp[k + 1]
        out[k + 1] = w[k + 1] + dp[k]
    ftz_leave(csr)
    return out_arr


def shift_integrals(double x0, double h, const double[:, ::1] values, const double[:, ::1] slopes,
                    double v_minus, double v_plus, double u_minus, double u_plus, q, u_in, double sigma,
                    double sqrt_delta, double gamma, double b, double dx):
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0], m = values.shape[1], j, i
    cdef double r, fi, t, h00, h10, h01, h11, v, vx, z, a, ut, k, wt, s1 = 0.0, s2 = 0.0
    cdef double mid = 0.5 * (v_minus + v_plus)
    cdef unsigned int csr = ftz_enter()
    for j in range(n):
        r = (qv[j] - x0) / h
        fi = floor(r)
        t = r - fi
        if t > 1.0 - SNAP:
            fi += 1.0
            t = 0.0
        elif t < SNAP:
            t = 0.0
        if fi == m - 1:
            fi = m - 2
            t = 1.0
        if fi < 0 or fi > m - 2:
            continue
        i = <Py_ssize_t>fi
        h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t)
        h10 = t * (1.0 - t) * (1.0 - t)
        h01 = t * t * (3.0 - 2.0 * t)
        h11 = t * t * (t - 1.0)
        v = (h00 * values[0, i] + h10 * h * slopes[0, i]) + (h01 * values[0, i + 1] + h11 * h * slopes[0, i + 1])
        vx = (h00 * values[1, i] + h10 * h * slopes[1, i]) + (h01 * values[1, i + 1] + h11 * h * slopes[1, i + 1])
        if vx == 0.0:
            continue
        # same nearer-end anchoring as the profile module
        if v >= mid:
            z = v - v_plus
            ut = u_plus - sigma * z
            a = 1.0 + sqrt_delta + sigma * z / sqrt_delta
        else:
            z = v - v_minus
            ut = u_minus - sigma * z
            a = 1.0 + sigma * z / sqrt_delta
        a = min(max(a, 1.0), 1.0 + sqrt_delta)
        k = a * vx * (u[j] - ut)
        wt = 0.5 * dx if (j == 0 or j == n - 1) else dx
        s1 += wt * (-sigma * k)
        s2 += wt * (-gamma * b * exp((-gamma - 1.0) * log(v)) * k)
    ftz_leave(csr)
    return s1, s2
