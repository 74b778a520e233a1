"""Hopf control check u_numeric - u_Hopf at t = t_c - delta for several delta.

The O(eps^2) law is an outer statement: it needs t_c - t much larger than
the eps^{4/7} width of the breaking region.  This script prints the fitted
exponent for each offset, together with the T coordinate of the control time
at the smallest eps, so one can see where the law sets in.

    python scripts/control_offset_study.py --eps 0.1,0.07,0.05 --delta 0.05,0.1,0.15
"""

import argparse
import time

import numpy as np

from critlab.config import load_datum, parse_float_list
from critlab.hopf import find_catastrophe
from critlab.spectral import FieldState, PeriodicGrid, builtin_specs, evolve
from critlab.stencils import loglog_slope
from critlab.universality import compute_constants, double_scaling_coords, hopf_deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datum", default="sech2:1")
    ap.add_argument("--eps", default="0.1,0.07,0.05")
    ap.add_argument("--delta", default="0.05,0.1,0.15")
    ap.add_argument("--L", type=float, default=20.0)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--dt", type=float, default=5e-5)
    a = ap.parse_args()

    datum = load_datum(a.datum)
    cp = find_catastrophe(datum)
    sc = compute_constants(cp)
    eps_list = parse_float_list(a.eps)
    deltas = parse_float_list(a.delta)
    times = sorted(cp.t_c - d for d in deltas)
    grid = PeriodicGrid(a.L, a.n)
    spec = builtin_specs("kdv")
    dev = np.zeros((len(eps_list), len(deltas)))
    t0 = time.perf_counter()
    for i, eps in enumerate(eps_list):
        traj = evolve(FieldState(grid, datum(grid.x), eps), spec, times[-1], a.dt,
                      snap_times=times)
        for j, d in enumerate(deltas):
            dev[i, j] = hopf_deviation(traj.snapshot_at(cp.t_c - d), datum, cp.t_c)
    print(f"# {time.perf_counter() - t0:.1f} s")
    print("delta  T(eps_min)  exponent  fit_residual  " + "  ".join(f"dev(eps={e})" for e in eps_list))
    for j, d in enumerate(deltas):
        _, T = double_scaling_coords(cp.x_c, cp.t_c - d, min(eps_list), sc)
        p, _, r = loglog_slope(eps_list, dev[:, j])
        print(f"{d:<6g} {float(T):<11.3f} {p:<9.3f} {r:<13.2e} "
              + "  ".join(f"{v:.3e}" for v in dev[:, j]))


if __name__ == "__main__":
    main()
