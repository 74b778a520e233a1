import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from critlab.errors import DomainError, ValidationError
from critlab.painleve import (asymptote_slope, continue_and_detect_poles, cubic_seed,
                              evaluate_U, p12_asymptote, p12_residual, solve_p12,
                              solve_p12_family, solve_tritronquee, trajectory_value,
                              tritronquee_asymptotic, tritronquee_series_coeffs)
from critlab.stencils import loglog_slope


# -- P_I^2 --------------------------------------------------------------------

@given(st.floats(-200, 200), st.floats(-3, 3))
def test_cubic_seed_solves_reduced_equation(X, T):
    U = float(cubic_seed(np.array([X]), T)[0])
    assert abs(T * U - U**3 / 6 - X) < 1e-9 * max(1.0, abs(X))


def test_cubic_seed_branch_choice():
    # T > 0, small |X|: three real roots; the seed follows the large-|X| branch
    X = np.linspace(-5, 5, 1001)
    U = cubic_seed(X, 2.0)
    assert np.all(U[X > 0.5] < 0) and np.all(U[X < -0.5] > 0)


def test_p12_residual_and_boundary(p12_family):
    for T, sol in p12_family.items():
        assert np.max(np.abs(p12_residual(sol))) < 1e-8
        assert np.all(np.isreal(sol.U_samples))
        assert sol.U_samples[-1] == pytest.approx(-np.cbrt(6 * 50.0), abs=1e-12)
        assert sol.U_samples[0] == pytest.approx(np.cbrt(6 * 50.0), abs=1e-12)


def test_p12_domain_checks():
    with pytest.raises(DomainError):
        solve_p12(0.0, X_max=20.0)
    with pytest.raises(DomainError):
        solve_p12(0.0, n=500)


def test_p12_far_probe():
    sol = solve_p12(0.0, 1200.0, 48000)
    assert abs(evaluate_U(sol, -1000.0) - 6000 ** (1 / 3)) < 0.05
    assert abs(6000 ** (1 / 3) - 18.1712) < 1e-4


def test_p12_domain_truncation():
    a = solve_p12(0.0, 50.0, 4000)
    b = solve_p12(0.0, 100.0, 8000)
    assert abs(evaluate_U(a, 0.0) - evaluate_U(b, 0.0)) < 1e-6


def test_p12_grid_convergence_order():
    v = {n: evaluate_U(solve_p12(0.0, 50.0, n), 0.0) for n in (2000, 4000, 8000, 16000)}
    errs = [abs(v[n] - v[16000]) for n in (2000, 4000)]
    ref_h = [100.0 / 2000, 100.0 / 4000]
    assert loglog_slope(ref_h, errs)[0] >= 3.5


def test_evaluate_U(p12_family):
    sol = p12_family[0.0]
    assert evaluate_U(sol, sol.X_grid[1234]) == sol.U_samples[1234]
    assert evaluate_U(sol, 50.0) == sol.U_samples[-1]
    assert evaluate_U(sol, -50.0) == sol.U_samples[0]
    with pytest.raises(DomainError):
        evaluate_U(sol, 50.5)
    fine = solve_p12(0.0, 50.0, 16000)
    mid = sol.X_grid[2000] + sol.h / 2
    assert fine.X_grid[4001] == pytest.approx(mid)
    assert abs(evaluate_U(sol, mid) - fine.U_samples[4001]) < 1e-6


def test_t0_correction_law(p12_family):
    # substituting U = -(6X)^{1/3} + d into the equation at T = 0 gives d = X^{-2}/36
    Xs, d = sp.symbols("X d", positive=True)
    s = (6 * Xs) ** sp.Rational(1, 3)
    U = -s
    lhs = -(U**3 / 6 + (sp.diff(U, Xs) ** 2 + 2 * U * sp.diff(U, Xs, 2)) / 24) - s**2 * d / 2
    sol = sp.solve(sp.simplify(lhs - Xs), d)[0]
    assert sp.simplify(sol - Xs**-2 / 36) == 0
    num = p12_family[0.0]
    for X in (5.0, 10.0, 20.0):
        dev = evaluate_U(num, X) - p12_asymptote(X)
        assert abs(dev / (X**-2 / 36) - 1) < 0.05


def test_asymptote_slope_at_T0_is_minus_two():
    # the O(|X|^{-2/3}) error bound is not attained at T = 0: the deviation is X^{-2}/36
    p, _, res = asymptote_slope(solve_p12(0.0, 200.0, 8000), side=+1)
    assert abs(p + 2) < 0.05 and res < 0.1


def test_kdv_consistency(p12_kdv_check):
    X, r = p12_kdv_check
    inner = np.abs(X) <= 25
    assert np.nanmax(np.abs(r[inner])) < 1e-4


def test_family_continuation_matches_direct_solve():
    direct = solve_p12(-0.5, 50.0, 2000)
    fam = solve_p12_family([-0.5], 50.0, 2000)[0]
    assert np.max(np.abs(direct.U_samples - fam.U_samples)) < 1e-8


@settings(max_examples=6)
@given(st.floats(-2.0, 2.0))
def test_pole_free_real_iterates(T):
    sol = solve_p12_family([T], 50.0, 2000)[0]
    assert np.all(np.isfinite(sol.U_samples))
    assert np.max(np.abs(p12_residual(sol))) < 1e-8


# -- tritronquee ---------------------------------------------------------------

def test_series_coefficients():
    b = tritronquee_series_coeffs(6)
    assert b[0] == pytest.approx(-1 / np.sqrt(6))
    # Q = sqrt(Z) sum b_m Z^{-5m/2} must satisfy Q'' = 6Q^2 - Z order by order
    z = sp.symbols("z", positive=True)
    bs = [sp.nsimplify(float(x), rational=False) for x in b[:4]]
    Q = sum(float(bm) * z ** (sp.Rational(1, 2) - sp.Rational(5 * m, 2)) for m, bm in enumerate(bs))
    res = sp.diff(Q, z, 2) - 6 * Q**2 + z
    for Z in (50.0, 100.0):
        assert abs(float(res.subs(z, Z))) < 1e-9


def test_asymptotic_value_is_principal_branch():
    Q, _ = tritronquee_asymptotic(np.array([100.0 + 0j]))
    assert abs(Q[0] + np.sqrt(100 / 6)) < 1e-3


def test_tritronquee_at_100(tritronquee):
    Q = trajectory_value(tritronquee, 100.0)
    assert abs(Q + np.sqrt(100 / 6)) < 1e-2
    assert abs(Q + 4.0825) < 1e-3


def test_tritronquee_monotone_approach(tritronquee):
    Z = np.linspace(20, 100, 81)
    dev = np.array([abs(trajectory_value(tritronquee, z) + np.sqrt(z / 6)) for z in Z])
    assert np.all(np.diff(dev) < 0)


def test_tritronquee_real_and_pole_free(tritronquee):
    assert np.max(np.abs(tritronquee.Q_samples.imag)) < 1e-10
    assert np.max(np.abs(tritronquee.Q_samples)) < 10
    assert tritronquee.diagnostics["step_doubling"] < 1e-6


def test_tritronquee_endpoint_insensitive():
    vals = [trajectory_value(solve_tritronquee(zf, 1.0, n_samples=4001), 10.0)
            for zf in (50.0, 100.0, 200.0)]
    assert max(abs(v - vals[1]) for v in vals) < 1e-6


def test_tritronquee_anchor_order():
    q = {h: solve_tritronquee(100.0, 1.0, h=h).Q_samples[0] for h in (0.08, 0.04, 0.01)}
    errs = [abs(q[0.08] - q[0.01]), abs(q[0.04] - q[0.01])]
    assert loglog_slope([0.08, 0.04], errs)[0] >= 3.5


def test_tritronquee_complex_start():
    tr = solve_tritronquee(100.0, 3 + 2j)
    Q, _ = tritronquee_asymptotic(np.array([100.0 + 0j]))
    assert abs(tr.Q_samples[-1] - Q[0]) < 1e-6


def test_tritronquee_domain():
    with pytest.raises(DomainError):
        solve_tritronquee(100.0, -1.0)
    with pytest.raises(DomainError):
        solve_tritronquee(20.0, 1.0)


def test_poles_on_negative_axis():
    tr = solve_tritronquee(100.0, 0.05)
    out = continue_and_detect_poles(tr, -1.0, 10.0, start_index=0)
    assert len(out.pole_estimates) == 1
    p = out.pole_estimates[0]
    assert abs(p["Z"] - (-2.384169)) < 1e-4
    assert p["fit_quality"] < 0.05


def test_laurent_behaviour_near_pole():
    tr = solve_tritronquee(100.0, 0.05)
    out = continue_and_detect_poles(tr, -1.0, 10.0, start_index=0)
    Zp = out.pole_estimates[0]["Z"]
    near = np.abs(out.path - Zp)
    sel = (near > 1e-3) & (near < 1e-2)
    ratio = out.Q_samples[sel] * (out.path[sel] - Zp) ** 2
    assert np.max(np.abs(ratio - 1)) < 0.05


def test_no_poles_positive_axis():
    tr = solve_tritronquee(100.0, 1.0)
    out = continue_and_detect_poles(tr, 1.0, 100.0, start_index=0)
    assert out.pole_estimates == []


def test_direction_must_be_unit():
    tr = solve_tritronquee(100.0, 1.0)
    with pytest.raises(ValidationError):
        continue_and_detect_poles(tr, 2.0, 1.0)


def test_subleading_term_for_nonzero_T():
    # dominant balance with X = y^3/6: U = -y + c/y makes the O(y) part T + c/2 vanish,
    # so the deviation from the leading term is -2T/(6X)^{1/3}, of order |X|^{-1/3}
    y, T, c = sp.symbols("y T c")
    Uexp = -y + c / y
    E = sp.expand(y**3 / 6 - T * Uexp + Uexp**3 / 6)
    assert E.coeff(y, 3) == 0
    assert sp.solve(E.coeff(y, 1), c) == [-2 * T]
    for Tv in (-1.0, 1.0):
        sol = solve_p12(Tv, 200.0, 8000)
        for Xv in (50.0, 100.0, -100.0):
            Vv = (6 * abs(Xv)) ** (1 / 3)
            dev = evaluate_U(sol, Xv) + np.sign(Xv) * Vv
            assert abs(dev + 2 * Tv * np.sign(Xv) / Vv) < abs(Xv) ** (-5 / 3)
    p, _, _ = asymptote_slope(solve_p12(1.0, 200.0, 8000), side=+1)
    assert abs(p + 1 / 3) < 0.05
