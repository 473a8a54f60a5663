"""Time stepping of the Navier-Stokes system in the shock frame.

In the frame ``xi = x - sigma t`` the system reads

    v_t - sigma v_xi - u_xi = 0,
    u_t - sigma u_xi + p(v)_xi = (u_xi / v)_xi,

and the viscous shock profile is stationary.  The solver evolves the
perturbation ``(phi, w) = (v - v_h, u - u_h)`` around the profile samples
``(v_h, u_h)`` on the grid.  The update for ``v`` is conservative, with
numerical flux ``F(v, u) - F(v_h, u_h)``.  The profile term is a fixed
correction, so the sampled profile is an exact discrete steady state.
Setting ``well_balanced=False`` adds that correction back and gives the
plain conservative scheme, whose steady-state error is the profile
truncation error.

One step is a Strang splitting:

* half a step of Crank-Nicolson diffusion with ``v`` frozen;
* one Heun step of the hyperbolic part;
* a second half step of diffusion.

The shift ``X`` is then advanced by a Heun step using its rate at the old
and the new state.

Advection by ``sigma`` uses second-order upwinding from the right, and the
acoustic terms use central fluxes.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import functionals, kernels
from .errors import InvalidDataError, UsageError, VacuumError
from .hugoniot import Constants, EndStates, left_state_from_right
from .model import ModelParams, pressure, pressure_deriv
from .profile import ShockProfile, shifted_eval, solve_profile

SNAPSHOT_HEADER = ["x", "v", "u", "v_tilde_X", "u_tilde_X"]
SHAPES = ("gaussian-bump", "compact-bump", "zero")


@dataclass(frozen=True)
class SimGrid:
    x_min: float
    x_max: float
    n_cells: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_cells < 8:
            raise UsageError(f"n_cells must be >= 8, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise UsageError("x_max must exceed x_min")
        dx = (self.x_max - self.x_min) / self.n_cells
        object.__setattr__(self, "dx", dx)
        x = self.x_min + dx * np.arange(self.n_cells + 1)
        x[-1] = self.x_max
        object.__setattr__(self, "x", x)

    def refined(self, k: int) -> "SimGrid":
        return SimGrid(self.x_min, self.x_max, self.n_cells * k)


@dataclass(frozen=True, eq=False)
class Background:
    """Profile samples on the simulation grid that the perturbation is measured against."""

    params: ModelParams
    sigma: float
    vt: np.ndarray
    ut: np.ndarray
    pt: np.ndarray


@dataclass(frozen=True, eq=False)
class SimState:
    """Solution at time ``t``: perturbation fields, shift and bookkeeping.

    Boundary conditions: ``u`` is held at its far-field values at both ends
    and ``v`` at the right end, where both characteristics enter.  ``v`` is
    transported out through the left end, so the first node is a half cell
    updated by the scheme.

    ``mass_change`` is the change of ``dx (v_0 / 2 + v_1 + ... + v_{N-1})``
    in the step that produced this state.  ``flux_left`` is the
    time-averaged flux of ``sigma v + u`` at ``x_min``, and ``flux_right`` is
    the same flux through the face next to the right boundary node.
    """

    t: float
    phi: np.ndarray
    w: np.ndarray
    X: float
    X_dot: float
    grid: SimGrid
    base: Background
    steps: int = 0
    dt_last: float = 0.0
    mass_change: float = 0.0
    flux_left: float = 0.0
    flux_right: float = 0.0

    @property
    def v(self) -> np.ndarray:
        return self.base.vt + self.phi

    @property
    def u(self) -> np.ndarray:
        return self.base.ut + self.w

    @property
    def conservation_residual(self) -> float:
        return abs(self.mass_change - self.dt_last * (self.flux_right - self.flux_left))


@dataclass(frozen=True)
class PerturbationSpec:
    shape: str = "gaussian-bump"
    amplitude_v: float = 0.0
    amplitude_u: float = 0.0
    center: float = 0.0
    width: float = 4.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidDataError(f"unknown perturbation shape {self.shape!r}; expected one of {SHAPES}")
        if not self.width > 0.0:
            raise InvalidDataError(f"perturbation width must be positive, got {self.width}")

    def profile(self, x) -> np.ndarray:
        """Unit-amplitude shape function sampled at ``x``."""
        r = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.shape == "gaussian-bump":
            return np.exp(-r * r)
        if self.shape == "compact-bump":
            out = np.zeros_like(r)
            inside = np.abs(r) < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
            return out
        return np.zeros_like(r)


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    v_plus: float = 1.0
    u_plus: float = 0.0
    delta_v: float = 0.1
    x_min: float = -400.0
    x_max: float = 400.0
    n_cells: int = 8192
    cfl: float = 0.5
    t_end: float = 200.0
    tick_interval: float = 1.0
    snapshot_interval: float = 50.0
    perturbation: PerturbationSpec = PerturbationSpec()
    seed: int = 0
    well_balanced: bool = True

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise UsageError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0.0:
            raise UsageError(f"t_end must be positive, got {self.t_end}")
        if not self.tick_interval > 0.0:
            raise UsageError(f"tick_interval must be positive, got {self.tick_interval}")

    def ends(self) -> EndStates:
        return left_state_from_right(self.params, self.v_plus, self.u_plus, self.delta_v)

    def grid(self) -> SimGrid:
        return SimGrid(self.x_min, self.x_max, self.n_cells)

    def refined(self, k: int) -> "SimConfig":
        return replace(self, n_cells=self.n_cells * k)


def sim_profile(params: ModelParams, ends: EndStates, grid: SimGrid) -> ShockProfile:
    """Profile sampled at the simulation nodes."""
    return solve_profile(params, ends, xi=grid.x)


def _background(profile: ShockProfile, grid: SimGrid) -> Background:
    if profile.xi.size != grid.x.size or np.max(np.abs(profile.xi - grid.x)) > 1e-9 * grid.dx:
        raise UsageError("profile must be sampled on the simulation grid (see sim_profile)")
    vt = profile.v_tilde.copy()
    ut = profile.u_tilde.copy()
    # boundary nodes carry the exact far-field states
    vt[0], ut[0] = profile.ends.v_minus, profile.ends.u_minus
    vt[-1], ut[-1] = profile.ends.v_plus, profile.ends.u_plus
    pt = np.asarray(pressure(profile.params, vt))
    return Background(profile.params, profile.ends.sigma, vt, ut, pt)


def h1_norm(f, dx) -> float:
    fx = np.gradient(f, dx, edge_order=2)
    return math.sqrt(functionals.integrate(f * f, dx) + functionals.integrate(fx * fx, dx))


def initial_data(profile: ShockProfile, spec: PerturbationSpec, grid: SimGrid) -> tuple[SimState, float]:
    """Profile plus perturbation, with ``X = 0``.

    Returns the state and ``||v0 - v_tilde||_H1 + ||u0 - u_tilde||_H1``.
    """
    base = _background(profile, grid)
    shape = spec.profile(grid.x)
    leak = max(abs(shape[0]), abs(shape[-1]))
    if leak >= 1e-12 and (spec.amplitude_v != 0.0 or spec.amplitude_u != 0.0):
        raise InvalidDataError(f"perturbation does not decay at the domain boundary (|shape| = {leak:.3g})")
    phi = spec.amplitude_v * shape
    w = spec.amplitude_u * shape
    phi[0] = phi[-1] = 0.0
    w[0] = w[-1] = 0.0
    v = base.vt + phi
    if np.any(v <= 0.0):
        node = int(np.argmin(v))
        raise InvalidDataError(f"perturbation makes v nonpositive at x = {grid.x[node]:.6g}")
    eps = h1_norm(phi, grid.dx) + h1_norm(w, grid.dx)
    state = SimState(t=0.0, phi=phi, w=w, X=0.0, X_dot=0.0, grid=grid, base=base)
    xdot = shift_rate(state, profile, profile.constants)
    return replace(state, X_dot=xdot), eps


def _shift_rate(u, x, X, profile, constants, dx):
    ends, params = profile.ends, profile.params
    values, slopes = profile._hermite
    y1, y2 = kernels.shift_integrals(float(profile.xi[0]), profile.spacing, values, slopes,
                                     ends.v_minus, ends.v_plus, ends.u_minus, ends.u_plus, x - X, u,
                                     ends.sigma, profile.sqrt_delta, params.gamma, params.b, dx)
    return -constants.m_shift / ends.delta * (y1 + y2 / ends.sigma)


def shift_rate(state: SimState, profile: ShockProfile, constants: Constants) -> float:
    """Shift velocity ``-(M / delta) (Y1 + Y2)`` by trapezoidal quadrature."""
    return _shift_rate(state.u, state.grid.x, state.X, profile, constants, state.grid.dx)


def cfl_dt(state: SimState, grid: SimGrid, cfl_number: float) -> float:
    """Largest stable step for the explicit hyperbolic part (diffusion is implicit)."""
    if not (0.0 < cfl_number <= 1.0):
        raise UsageError(f"cfl_number must lie in (0, 1], got {cfl_number}")
    c = np.sqrt(-np.asarray(pressure_deriv(state.base.params, state.v)))
    return cfl_number * grid.dx / (state.base.sigma + float(np.max(c)))


class Stepper:
    """Advances a :class:`SimState` by a fixed step with the split scheme."""

    def __init__(self, profile: ShockProfile, constants: Constants, grid: SimGrid,
                 well_balanced: bool = True):
        self.profile = profile
        self.constants = constants
        self.grid = grid
        self.base = _background(profile, grid)
        self.well_balanced = well_balanced
        self._source = None
        self._profile_flux = self._profile_face_flux()
        if not well_balanced:
            self._source = self._profile_residual()

    def _profile_face_flux(self):
        """Numerical flux of the profile itself at the two boundary faces."""
        b = self.base
        vt, ut = b.vt, b.ut
        vg = np.append(vt, vt[-1])
        v_up = 1.5 * vg[1:-1] - 0.5 * vg[2:]
        F = -b.sigma * v_up - 0.5 * (ut[:-1] + ut[1:])
        return float(-b.sigma * vt[0] - ut[0]), float(F[-1])

    def _profile_residual(self):
        """Discrete residual of the full scheme evaluated on the sampled profile."""
        b, dx = self.base, self.grid.dx
        vt, ut, pt = b.vt, b.ut, b.pt
        vg = np.append(vt, vt[-1])
        ug = np.append(ut, ut[-1])
        F = -b.sigma * (1.5 * vg[1:-1] - 0.5 * vg[2:]) - 0.5 * (ut[:-1] + ut[1:])
        vtf = 0.5 * (vt[:-1] + vt[1:])
        G = (-b.sigma * (1.5 * ug[1:-1] - 0.5 * ug[2:]) + 0.5 * (pt[:-1] + pt[1:])
             - (ut[1:] - ut[:-1]) / (dx * vtf))
        rphi = np.zeros_like(vt)
        rw = np.zeros_like(vt)
        rphi[0] = -(F[0] - (-b.sigma * vt[0] - ut[0])) / (0.5 * dx)
        rphi[1:-1] = -(F[1:] - F[:-1]) / dx
        rw[1:-1] = -(G[1:] - G[:-1]) / dx
        return rphi, rw

    def _rhs(self, phi, w):
        b = self.base
        dphi, dw, fl, fr = kernels.hyperbolic_rhs(phi, w, b.vt, b.pt, b.params.gamma, b.sigma, self.grid.dx)
        if self._source is not None:
            dphi += self._source[0]
            dw += self._source[1]
        return dphi, dw, fl, fr

    def _xdot(self, w, X):
        return _shift_rate(self.base.ut + w, self.grid.x, X, self.profile, self.constants, self.grid.dx)

    def _diffuse(self, phi, w, tau):
        b = self.base
        return kernels.diffusion_step(w, phi, b.vt, b.ut, self.grid.dx, tau)

    def _check(self, phi, t):
        v = self.base.vt + phi
        bad = ~(v > 0.0)
        if bad.any():
            node = int(np.flatnonzero(bad)[0])
            raise VacuumError(f"specific volume lost positivity at node {node} (t = {t:.6g})", t=t, node=node)

    def step(self, state: SimState, dt: float) -> SimState:
        """Advance by ``dt``; ``state.X_dot`` must be the shift rate of ``state``."""
        t_new = state.t + dt
        phi, w = state.phi, state.w
        w = self._diffuse(phi, w, 0.5 * dt)
        k1p, k1w, fl1, fr1 = self._rhs(phi, w)
        phi1 = phi + dt * k1p
        w1 = w + dt * k1w
        self._check(phi1, t_new)
        k2p, k2w, fl2, fr2 = self._rhs(phi1, w1)
        phi_new = phi + (0.5 * dt) * (k1p + k2p)
        w_new = w + (0.5 * dt) * (k1w + k2w)
        self._check(phi_new, t_new)
        w_new = self._diffuse(phi_new, w_new, 0.5 * dt)
        # Heun step for the shift over the whole step
        x_pred = state.X + dt * state.X_dot
        X_new = state.X + (0.5 * dt) * (state.X_dot + self._xdot(w_new, x_pred))
        dm = phi_new - phi
        mass = (0.5 * float(dm[0]) + float(np.sum(dm[1:-1]))) * self.grid.dx
        # flux of sigma v + u is minus the numerical flux of the full field;
        # in well-balanced mode the profile part differs from a constant only
        # by its far-field tail misfit
        pl, pr = self._profile_flux
        flux_left = -(0.5 * (fl1 + fl2) + pl)
        flux_right = -(0.5 * (fr1 + fr2) + pr)
        new = SimState(t=t_new, phi=phi_new, w=w_new, X=X_new, X_dot=0.0, grid=self.grid,
                       base=self.base, steps=state.steps + 1, dt_last=dt, mass_change=mass,
                       flux_left=flux_left, flux_right=flux_right)
        return replace(new, X_dot=self._xdot(w_new, X_new))


def advance(state: SimState, profile: ShockProfile, constants: Constants, dt: float,
            well_balanced: bool = True) -> SimState:
    """One step of the split scheme (builds a throwaway :class:`Stepper`)."""
    return Stepper(profile, constants, state.grid, well_balanced).step(state, dt)


def tick_schedule(dt_cfl: float, tick: float, t_end: float) -> tuple[float, int, int]:
    """Fixed step landing exactly on every tick: ``(dt, steps_per_tick, n_ticks)``."""
    n_ticks = round(t_end / tick)
    if n_ticks < 1 or abs(n_ticks * tick - t_end) > 1e-9 * t_end:
        raise UsageError(f"t_end = {t_end} is not a whole number of ticks of {tick}")
    per_tick = max(1, math.ceil(tick / dt_cfl - 1e-9))
    return tick / per_tick, per_tick, n_ticks


@dataclass
class RunResult:
    records: list
    final_state: SimState
    initial_state: SimState
    epsilon: float
    dt: float
    steps_per_tick: int
    profile: ShockProfile
    snapshots: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    max_conservation_residual: float = 0.0
    max_abs_X_dot: float = 0.0
    max_drift: float = 0.0


def _write_snapshot(path, state: SimState, profile: ShockProfile):
    sp = shifted_eval(profile, state.grid.x, state.X)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SNAPSHOT_HEADER)
        for row in zip(state.grid.x, state.v, state.u, sp.v, sp.u):
            wr.writerow([repr(float(val)) for val in row])


def _metadata(config: SimConfig, grid: SimGrid, profile: ShockProfile, status: str, extra=None):
    cfg = asdict(config)
    meta = {
        "config": cfg,
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells, "dx": grid.dx},
        "end_states": asdict(profile.ends),
        "constants": asdict(profile.constants),
        "kernel_backend": kernels.BACKEND,
        "status": status,
    }
    if extra:
        meta.update(extra)
    return meta


def run(config: SimConfig, out_dir=None, *, snapshots: bool = True) -> RunResult:
    """Integrate to ``t_end``, emitting one diagnostics record per tick.

    With ``out_dir`` the diagnostics CSV, snapshot CSVs and ``metadata.json``
    are written there.  On a vacuum or solver failure the records gathered so
    far are flushed before the error propagates.
    """
    grid = config.grid()
    ends = config.ends()
    profile = sim_profile(config.params, ends, grid)
    constants = profile.constants
    state, eps = initial_data(profile, config.perturbation, grid)
    init = state
    stepper = Stepper(profile, constants, grid, config.well_balanced)
    dt, per_tick, n_ticks = tick_schedule(cfl_dt(state, grid, config.cfl), config.tick_interval, config.t_end)
    snap_every = None
    if config.snapshot_interval and config.snapshot_interval > 0:
        snap_every = max(1, round(config.snapshot_interval / config.tick_interval))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    n_steps = per_tick * n_ticks
    if n_steps < 2:
        raise UsageError("a run needs at least two time steps")
    records = []
    pending = {}   # tick index -> record awaiting its time derivative
    are = {}       # step index -> weighted relative entropy near ticks
    snaps = []
    max_cons = 0.0
    max_xdot = abs(state.X_dot)
    max_drift = 0.0

    def near_tick(m):
        r = m % per_tick
        return r <= 2 or r >= per_tick - 2 or m >= n_steps - 2

    def finish(k):
        rec = pending.pop(k)
        m = k * per_tick
        if 0 < m < n_steps:
            idx, where = (m - 1, m, m + 1), "center"
        elif m == 0:
            idx, where = (0, 1, 2), "first"
        else:
            idx, where = (m - 2, m - 1, m), "last"
        samples = [(i * dt, are[i]) for i in idx]
        records.append(replace(rec, id_residual=functionals.energy_identity_residual(samples, rec, where)))

    def emit(status, extra=None):
        if out is None:
            return
        functionals.write_diagnostics_csv(out / "diagnostics.csv", functionals.with_apriori(records, profile.ends.delta))
        meta = _metadata(config, grid, profile, status, extra)
        meta.update({"dt": dt, "steps_per_tick": per_tick, "epsilon": eps,
                     "snapshots": [os.path.basename(p) for p in snaps]})
        with open(out / "metadata.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)

    try:
        for m in range(n_steps + 1):
            if m > 0:
                state = stepper.step(state, dt)
                max_cons = max(max_cons, state.conservation_residual)
                max_xdot = max(max_xdot, abs(state.X_dot))
                max_drift = max(max_drift, float(np.max(np.abs(state.phi))), float(np.max(np.abs(state.w))))
            if m % per_tick == 0:
                k = m // per_tick
                rec = functionals.ledger(state, profile, constants)
                pending[k] = rec
                are[m] = rec.aRE
                if snapshots and out is not None and snap_every and k % snap_every == 0:
                    path = out / f"snapshot_t{state.t:010.3f}.csv"
                    _write_snapshot(path, state, profile)
                    snaps.append(str(path))
            elif near_tick(m):
                are[m] = functionals.weighted_relative_entropy(state, profile)
            for k in sorted(pending):
                mk = k * per_tick
                ready = (mk == 0 and m >= 2) or (0 < mk < n_steps and m >= mk + 1) or (mk == n_steps and m == n_steps)
                if ready:
                    finish(k)
            for key in [i for i in are if i < m - 3]:
                del are[key]
    except Exception as exc:
        emit("failed", {"error": type(exc).__name__, "message": str(exc), "t": state.t})
        raise
    records = functionals.with_apriori(records, profile.ends.delta)
    extra = {"max_conservation_residual": max_cons, "max_abs_X_dot": max_xdot}
    emit("ok", extra)
    meta = _metadata(config, grid, profile, "ok", extra)
    return RunResult(records=records, final_state=state, initial_state=init, epsilon=eps, dt=dt,
                     steps_per_tick=per_tick, profile=profile, snapshots=snaps, metadata=meta,
                     max_conservation_residual=max_cons, max_abs_X_dot=max_xdot, max_drift=max_drift)
