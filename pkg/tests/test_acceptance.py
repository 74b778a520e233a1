"""Acceptance criteria, each at its stated tolerance.

Every test records a single PASS/FAIL line (printed in the terminal summary)
before asserting, so a failing criterion still reports what was measured.
"""

import ast
import re
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from critlab import diffpoly
from critlab.cli import cmd_universality
from critlab.config import build_config
from critlab.diffpoly import DiffPoly, U, hierarchy_flow
from critlab.hopf import find_catastrophe
from critlab.initial_data import make_sech_datum
from critlab.painleve import (asymptote_slope, continue_and_detect_poles, grid_derivative,
                              p12_residual, solve_p12_family, solve_tritronquee,
                              trajectory_value)
from critlab.rh import (SIGMA1, builtin_descriptor, cyclic_consistency, det_check,
                        parametrix_jump_error, phi_exponent, wkb_reflection)
from critlab.spectral import (FieldState, PeriodicGrid, builtin_specs, evolve, hampert_rhs,
                              kdv_invariants, soliton)
from critlab.stencils import loglog_slope

ROOT = Path(__file__).resolve().parents[1]


def record(n, checks):
    """checks: list of (label, ok, measured) tuples."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{lab}={val}{'' if good else ' (FAIL)'}" for lab, good, val in checks)
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    failed = [c[0] for c in checks if not c[1]]
    assert ok, f"criterion {n} failed: {failed}"


def _g(v):
    return f"{v:.4g}"


def test_criterion_01_catastrophe():
    t0 = time.perf_counter()
    cp = find_catastrophe(make_sech_datum(1.0))
    wall = time.perf_counter() - t0
    t_c, u_c = np.sqrt(3) / 8, -2 / 3
    x_c = -np.arccosh(np.sqrt(1.5)) + 6 * t_c * u_c
    record(1, [
        ("|t_c-0.216506|", abs(cp.t_c - 0.216506) < 1e-5, _g(abs(cp.t_c - 0.216506))),
        ("|t_c-sqrt3/8|", abs(cp.t_c - t_c) < 1e-5, _g(abs(cp.t_c - t_c))),
        ("|u_c+2/3|", abs(cp.u_c - u_c) < 1e-5, _g(abs(cp.u_c - u_c))),
        ("|x_c-oracle|", abs(cp.x_c - x_c) < 1e-5, _g(abs(cp.x_c - x_c))),
        ("|x_c+1.52450|", abs(cp.x_c + 1.52450) < 1e-5, _g(abs(cp.x_c + 1.52450))),
        ("runtime_s<1", wall < 1.0, _g(wall)),
    ])


def test_criterion_02_hierarchy_goldens():
    t0 = time.perf_counter()
    diffpoly._LENARD_CACHE.clear()
    diffpoly._LENARD_CACHE[0] = U(0)
    f2, f3 = hierarchy_flow(2), hierarchy_flow(3)
    wall = time.perf_counter() - t0
    E2 = DiffPoly.const(1, eps_power=2)
    E4 = DiffPoly.const(1, eps_power=4)
    E6 = DiffPoly.const(1, eps_power=6)
    u, u1, u2, u3 = U(0), U(1), U(2), U(3)
    kdv2 = 30 * u * u * u1 + E2 * (20 * u1 * u2 + 10 * u * u3) + E4 * U(5)
    kdv3 = -(140 * u * u * u * u1 + E2 * (70 * u1 * u1 * u1 + 280 * u * u1 * u2 + 70 * u * u * u3)
             + E4 * (70 * u2 * u3 + 42 * u1 * U(4) + 14 * u * U(5)) + E6 * U(7))
    record(2, [
        ("flow2_exact", f2 == kdv2, f2 == kdv2),
        ("flow3_exact", f3 == kdv3, f3 == kdv3),
        ("runtime_s<1", wall < 1.0, _g(wall)),
    ])


def test_criterion_03_hampert_reduction():
    g = PeriodicGrid(10.0, 256)
    rng = np.random.default_rng(3)
    kdv = diffpoly.compile_evaluator(hierarchy_flow(1))
    worst = 0.0
    for _ in range(50):
        c = np.zeros(g.n // 2 + 1, complex)
        m = int(rng.integers(4, 40))
        c[1:m] = rng.normal(size=m - 1) + 1j * rng.normal(size=m - 1)
        u = np.fft.irfft(c, g.n)
        s = FieldState(g, u / np.max(np.abs(u)), float(rng.uniform(0.01, 0.5)))
        a, b = hampert_rhs(s, 12.0, 0.0), kdv(s)
        worst = max(worst, np.max(np.abs(a - b)) / np.max(np.abs(b)))
    record(3, [("max_relative_diff<1e-10", worst < 1e-10, _g(worst))])


def test_criterion_04_solver_validation():
    kdv = builtin_specs("kdv")
    g = PeriodicGrid(20.0, 512)
    eps = 0.5
    s = FieldState(g, soliton(g, eps), eps)
    e1 = np.max(np.abs(evolve(s, kdv, 1.0, 0.01).final.samples - soliton(g, eps, t=1.0))) / 0.5
    # a full transit of the periodic box at speed c = 1
    period = 2 * g.half_width
    ef = np.max(np.abs(evolve(s, kdv, period, 0.005).final.samples
                       - soliton(g, eps, t=period))) / 0.5
    ref = evolve(s, kdv, 1.0, 2.5e-4).final.samples
    dts = np.array([0.04, 0.02, 0.01, 0.005])
    errs = [np.max(np.abs(evolve(s, kdv, 1.0, dt).final.samples - ref)) for dt in dts]
    order = loglog_slope(dts, errs)[0]

    datum = make_sech_datum(1.0)
    t_c = find_catastrophe(datum).t_c
    g2 = PeriodicGrid(20.0, 4096)
    tr = evolve(FieldState(g2, datum(g2.x), 0.1), kdv, t_c, 5e-5, observers=[kdv_invariants],
                observe_every=200)
    a, b = tr.records[0], tr.records[-1]
    dr = {k: abs(b[k] - a[k]) / abs(a[k]) for k in ("mass", "momentum", "hamiltonian")}
    record(4, [
        ("soliton_t1<1e-6", e1 < 1e-6, _g(e1)),
        ("soliton_transit<1e-6", ef < 1e-6, _g(ef)),
        ("dt_order_in[3.7,4.3]", 3.7 <= order <= 4.3, _g(order)),
        ("end_time=t_c", abs(b["t"] - t_c) < 1e-12, _g(b["t"])),
        ("mass<1e-10", dr["mass"] < 1e-10, _g(dr["mass"])),
        ("momentum<1e-9", dr["momentum"] < 1e-9, _g(dr["momentum"])),
        ("hamiltonian<1e-8", dr["hamiltonian"] < 1e-8, _g(dr["hamiltonian"])),
    ])


def test_criterion_05_p12_transcendent():
    t0 = time.perf_counter()
    fam = solve_p12_family([-1.0, 0.0, 1.0], 50.0, 8000)
    res = max(np.max(np.abs(p12_residual(s))) for s in fam)
    # asymptote approach away from the boundary layer, both sides, all three T
    far = solve_p12_family([-1.0, 0.0, 1.0], 200.0, 8000)
    slopes = [asymptote_slope(s, side=sd)[0] for s in far for sd in (+1, -1)]
    worst_slope = max(slopes, key=lambda p: abs(p + 2 / 3))
    dl = 0.02
    f = solve_p12_family([-2 * dl, -dl, dl, 2 * dl, 0.0], 50.0, 8000)
    UT = (f[0].U_samples - 8 * f[1].U_samples + 8 * f[2].U_samples - f[3].U_samples) / (12 * dl)
    s0 = f[4]
    r = UT + s0.U_samples * grid_derivative(s0, 1) + grid_derivative(s0, 3) / 12
    inner = np.abs(s0.X_grid) <= 25
    kdv = np.nanmax(np.abs(r[inner]))
    wall = time.perf_counter() - t0
    record(5, [
        ("residual<1e-8", res < 1e-8, _g(res)),
        ("slope=-2/3+-0.1", abs(worst_slope + 2 / 3) <= 0.1,
         "[" + ",".join(_g(p) for p in slopes) + "]"),
        ("kdv_consistency<1e-4", kdv < 1e-4, _g(kdv)),
        ("runtime_s<120", wall < 120, _g(wall)),
    ])


def test_criterion_06_tritronquee():
    tr = solve_tritronquee(100.0, 1.0, n_samples=4001)
    d100 = abs(trajectory_value(tr, 100.0) + np.sqrt(100 / 6))
    Z = np.linspace(20, 100, 161)
    dev = np.array([abs(trajectory_value(tr, z) + np.sqrt(z / 6)) for z in Z])
    mono = bool(np.all(np.diff(dev) < 0))
    pos = continue_and_detect_poles(tr, 1.0, 99.0, start_index=0)
    neg = continue_and_detect_poles(solve_tritronquee(100.0, 0.05), -1.0, 10.0, start_index=0)
    fit = neg.pole_estimates[0]["fit_quality"] if neg.pole_estimates else float("inf")
    arg = abs(np.angle(neg.pole_estimates[0]["Z"])) if neg.pole_estimates else 0.0
    record(6, [
        ("|Q(100)+sqrt(100/6)|<1e-2", d100 < 1e-2, _g(d100)),
        ("monotone_on[20,100]", mono, mono),
        ("poles_on[1,100]", not pos.pole_estimates, len(pos.pole_estimates)),
        ("poles_found_argZ>=4pi/5", bool(neg.pole_estimates) and arg >= 4 * np.pi / 5,
         len(neg.pole_estimates)),
        ("double_pole_fit<5%", fit < 0.05, _g(fit)),
    ])


def test_criterion_07_phi_exponent():
    datum = make_sech_datum(1.0)
    cp = find_catastrophe(datum)
    w = np.geomspace(1e-4, 1e-1, 13)
    p, c, _, vals = phi_exponent(datum, cp, cp.x_c, cp.t_c, w)
    th = cp.t_c / 2
    ph, ch, _, valsh = phi_exponent(datum, cp, cp.xi_c + 6 * th * cp.u_c, th, w)
    record(7, [
        ("critical_exponent=3.5+-0.05", abs(p - 3.5) <= 0.05, _g(p)),
        ("negative_prefactor", c > 0 and bool(np.all(vals < 0)), _g(-c)),
        ("generic_exponent=1.5+-0.05", abs(ph - 1.5) <= 0.05, _g(ph)),
        ("generic_negative", ch > 0 and bool(np.all(valsh < 0)), _g(-ch)),
    ])


def test_criterion_08_rh_integrity():
    rng = np.random.default_rng(8)
    radii = np.linspace(0.05, 5.0, 200)
    const = max(det_check(builtin_descriptor(n), radii) for n in ("psi_p12", "phi_p1"))
    datum = make_sech_datum(1.0)
    r_wkb = wkb_reflection(datum)
    table = rng.normal(size=200) + 1j * rng.normal(size=200)
    table *= 0.95 / np.max(np.abs(table))

    def r_rand(z, eps, it=iter(np.tile(table, 100))):
        return complex(next(it))

    refl = 0.0
    for name, r0 in (("kdv_M", r_wkb), ("kdv_hierarchy_M", r_wkb), ("ch_M", r_rand),
                     ("nls_defocusing_M", r_rand), ("nls_focusing_M", r_rand)):
        kw = {"m": 2} if name == "kdv_hierarchy_M" else {}
        d = builtin_descriptor(name, r0=r0, eps=0.1, x=-1.5, y=0.3, t=0.2, **kw)
        rr = np.linspace(0.01, 0.99, 200) if d.variable == "lambda" else radii
        refl = max(refl, det_check(d, rr))
    cyc = max(cyclic_consistency(builtin_descriptor(n)) for n in ("psi_p12", "phi_p1"))
    u_c = find_catastrophe(datum).u_c
    jump = max([parametrix_jump_error(l, u_c, 1j * SIGMA1) for l in np.linspace(u_c, 0, 52)[1:-1]]
               + [parametrix_jump_error(l, u_c, SIGMA1) for l in np.geomspace(1e-3, 1e3, 50)])
    record(8, [
        ("det_constant==0", const == 0.0, _g(const)),
        ("det_reflection<1e-14", refl < 1e-14, _g(refl)),
        ("cyclic==identity", cyc == 0.0, _g(cyc)),
        ("parametrix_jumps<1e-12", jump < 1e-12, _g(jump)),
    ])


@pytest.mark.slow
def test_criterion_09_universality():
    t0 = time.perf_counter()
    opts = build_config("universality", {"eps": "0.1,0.07,0.05", "window": "1,1"}).options
    _, diag, _ = cmd_universality(opts)
    wall = time.perf_counter() - t0
    a, c, k = diag["amplitude_exponent"], diag["correction_exponent"], diag["control_exponent"]
    record(9, [
        ("amplitude=2/7+-0.08", abs(a - 2 / 7) <= 0.08, _g(a)),
        ("correction_in[0.40,0.75]", 0.40 <= c <= 0.75, _g(c)),
        ("control@t_c-0.05=2+-0.3", abs(k - 2) <= 0.3, _g(k)),
        ("runtime_s<900", wall < 900, _g(wall)),
    ])


def _defined_tests():
    out = {}
    for f in (ROOT / "tests").glob("test_*.py"):
        tree = ast.parse(f.read_text())
        out[f.name] = {n.name for n in ast.walk(tree)
                       if isinstance(n, ast.FunctionDef) and n.name.startswith("test_")}
    return out


def test_criterion_10_traceability():
    text = (ROOT / "docs" / "traceability.md").read_text()
    rows = [ln for ln in text.splitlines() if ln.startswith("| ") and not ln.startswith("| Item")
            and not set(ln) <= set("|- ")]
    defined = _defined_tests()
    missing, empty = [], []
    for row in rows:
        refs = re.findall(r"`(test_\w+\.py)::(test_\w+)`", row)
        if not refs:
            empty.append(row.split("|")[1].strip())
        missing += [f"{f}::{t}" for f, t in refs if t not in defined.get(f, set())]
    record(10, [
        ("in_scope_rows", len(rows) >= 30, len(rows)),
        ("rows_without_tests", not empty, len(empty)),
        ("unresolved_test_refs", not missing, len(missing)),
    ])
