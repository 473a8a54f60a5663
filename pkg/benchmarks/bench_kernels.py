"""Time the Cython kernels against the numpy fallback on the default scenario.

    python benchmarks/bench_kernels.py [--cells 8192] [--repeat 5] [--number 20]
"""
import argparse
import timeit
from dataclasses import replace

import numpy as np

from shockstab import config as cfgmod
from shockstab.dynamics import initial_data, sim_profile
from shockstab.kernels import backend


def cases(cells):
    cfg = cfgmod.parse_config("default", env={}).config
    cfg = replace(cfg, n_cells=cells)
    grid = cfg.grid()
    prof = sim_profile(cfg.params, cfg.ends(), grid)
    state, _ = initial_data(prof, cfg.perturbation, grid)
    b, ends, params = state.base, prof.ends, prof.params
    values, slopes = prof._hermite
    x0, h = float(prof.xi[0]), prof.spacing
    lo = np.array([ends.v_minus, 0.0, 0.0])
    hi = np.array([ends.v_plus, 0.0, 0.0])
    q = grid.x - 0.37
    u = b.ut + state.w
    return {
        "hyperbolic_rhs": lambda k: k.hyperbolic_rhs(state.phi, state.w, b.vt, b.pt, params.gamma, b.sigma, grid.dx),
        "diffusion_step": lambda k: k.diffusion_step(state.w, state.phi, b.vt, b.ut, grid.dx, 0.5 / 59.0),
        "hermite_eval": lambda k: k.hermite_eval(x0, h, values, slopes, lo, hi, q),
        "shift_integrals": lambda k: k.shift_integrals(x0, h, values, slopes, ends.v_minus, ends.v_plus,
                                                       ends.u_minus, ends.u_plus, q, u, ends.sigma,
                                                       prof.sqrt_delta, params.gamma, params.b, grid.dx),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=8192)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)

    py, cy = backend("python"), backend("cython")
    print(f"{'kernel':<16} {'python us':>12} {'cython us':>12} {'speedup':>8}  max|diff|")
    for name, call in cases(args.cells).items():
        t_py = min(timeit.repeat(lambda: call(py), repeat=args.repeat, number=args.number)) / args.number
        t_cy = min(timeit.repeat(lambda: call(cy), repeat=args.repeat, number=args.number)) / args.number
        a, c = call(py), call(cy)
        a = a if isinstance(a, tuple) else (a,)
        c = c if isinstance(c, tuple) else (c,)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, c))
        print(f"{name:<16} {1e6 * t_py:12.1f} {1e6 * t_cy:12.1f} {t_py / t_cy:8.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
