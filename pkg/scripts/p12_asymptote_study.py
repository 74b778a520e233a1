"""How U(X, T) approaches the cube-root asymptote, for several T.

Prints, per T and side, the log-log slope of |U -+ (6|X|)^{1/3}| on the
outer part of the domain, and the deviation against the two candidate laws
-2T sgn(X)/(6|X|)^{1/3} (T != 0) and X^{-2}/36 (T = 0).

    python scripts/p12_asymptote_study.py --T -1,0,0.5,1 --xmax 200 --n 8000
"""

import argparse

import numpy as np

from critlab.config import parse_float_list
from critlab.painleve import asymptote_slope, evaluate_U, solve_p12_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", default="-1,0,0.5,1")
    ap.add_argument("--xmax", type=float, default=200.0)
    ap.add_argument("--n", type=int, default=8000)
    a = ap.parse_args()
    Ts = parse_float_list(a.T)
    sols = solve_p12_family(Ts, a.xmax, a.n)
    probes = np.array([20.0, 50.0, 100.0])
    print("T      side  slope    fit_res   X    deviation     -2T/V         X^-2/36")
    for T, sol in zip(Ts, sols):
        for side in (+1, -1):
            p, _, r = asymptote_slope(sol, side=side)
            for X in side * probes:
                V = (6 * abs(X)) ** (1 / 3)
                dev = float(evaluate_U(sol, X)) + np.sign(X) * V
                print(f"{T:<6g} {side:+d}    {p:<8.4f} {r:<9.2e} {X:<+5g} {dev:<+13.5e} "
                      f"{-2 * T * np.sign(X) / V:<+13.5e} {X ** -2 / 36:+.5e}")


if __name__ == "__main__":
    main()
