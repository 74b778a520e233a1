"""eps sweep of the double-scaling comparison, printed as a table.

Runs the same pipeline as `critlab universality` and prints, per eps, the
centre deviation |u(x_c, t_c) - u_c|, its prediction c1 eps^{2/7} |U(0,0)|,
and the sup/rms errors over the window, followed by the fitted exponents.

    python scripts/universality_sweep.py --eps 0.1,0.07,0.05 --window 1,1
"""

import argparse
import json
import time

from critlab.cli import cmd_universality
from critlab.config import build_config, load_datum
from critlab.hopf import find_catastrophe
from critlab.painleve import evaluate_U, solve_p12
from critlab.universality import compute_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datum", default="sech2:1")
    ap.add_argument("--eps", default="0.1,0.07,0.05")
    ap.add_argument("--window", default="1,1")
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--dt", type=float, default=5e-5)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    cfg = build_config("universality", {"datum": a.datum, "eps": a.eps, "window": a.window,
                                        "n": a.n, "dt": a.dt, "workers": a.workers})
    t0 = time.perf_counter()
    files, diag, _ = cmd_universality(cfg.options)
    wall = time.perf_counter() - t0

    report = json.loads(files["report.json"])
    sc = compute_constants(find_catastrophe(load_datum(a.datum)))
    U00 = float(evaluate_U(solve_p12(0.0, 50.0, 4000), 0.0))
    print(f"c1={sc.c1:.6f} c2={sc.c2:.6f} c3={sc.c3:.6f} c4={sc.c4:.6f} U(0,0)={U00:.8f}")
    print("eps      centre_dev   predicted    sup_err      rms_err")
    for e in report["errors"]:
        pred = sc.c1 * e["eps"] ** (2 / 7) * abs(U00)
        print(f"{e['eps']:<8g} {e['centre_deviation']:<12.5e} {pred:<12.5e} "
              f"{e['sup']:<12.5e} {e['rms']:.5e}")
    for k in ("amplitude_exponent", "correction_exponent", "control_exponent"):
        print(f"{k} = {diag[k]:.4f}")
    print(f"# {wall:.1f} s")


if __name__ == "__main__":
    main()
