"""The pole-free P_I^2 solution U(X, T) and the Painleve I tritronquee Q(Z).

P_I^2:   X = T U - (U^3/6 + (U_X^2 + 2 U U_XX)/24 + U_XXXX/240),
         U ~ -+(6|X|)^{1/3} as X -> +-inf.
P_I:     Q_ZZ = 6 Q^2 - Z,  Q ~ -sqrt(Z/6) in |arg Z| < 4 pi/5.

Both are computed as boundary value problems with fourth-order finite
differences and damped Newton iterations.  The tritronquee is anchored on a
vertical segment Re Z = a, where the linearisation around -sqrt(Z/6) has an
exponential dichotomy (growing/decaying modes), and then transported along
the target path by a high-order initial value solve.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError, PoleProximityError, ValidationError
from .stencils import stencil

NEWTON_TOL = 1e-10
MAX_HALVINGS = 30
P12_RESIDUAL_FLOOR = 1e-8


# ---------------------------------------------------------------- P_I^2

@dataclass(frozen=True)
class P12Solution:
    T: float
    X_grid: np.ndarray
    U_samples: np.ndarray
    residual_norm: float
    boundary_error: float
    iterations: int = 0

    @property
    def h(self):
        return float(self.X_grid[1] - self.X_grid[0])

    @property
    def X_max(self):
        return float(self.X_grid[-1])


def p12_asymptote(X):
    """Leading behaviour -sign(X) (6|X|)^{1/3}."""
    X = np.asarray(X, dtype=float)
    return -np.sign(X) * np.cbrt(6.0 * np.abs(X))


def cubic_seed(X, T):
    """Real root of X = T U - U^3/6 on the branch continuous with large |X|.

    For T > 0 and |X| < (2/3) T sqrt(2T) three roots exist; the root on the
    branch coming from X = +inf (negative U) is taken for X > 0 and the one
    from X = -inf for X <= 0 (tie-break at X = 0: the X -> -inf branch).
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    out = np.empty_like(X)
    for i, x in enumerate(X):
        r = np.roots([-1.0 / 6.0, 0.0, T, -x])
        r = np.sort(r[np.abs(r.imag) < 1e-9 * max(1.0, np.max(np.abs(r)))].real)
        out[i] = r[0] if x > 0 else r[-1]
    return out


class _P12Operator:
    """Fourth-order finite differences for the P_I^2 residual on a uniform grid."""

    def __init__(self, X):
        self.X = X
        self.N = len(X) - 1
        self.h = X[1] - X[0]
        N, h = self.N, self.h
        c5 = (-2, -1, 0, 1, 2)
        self.w1 = np.array(stencil(c5, 1)) / h
        self.w2 = np.array(stencil(c5, 2)) / h**2
        self.w4 = np.array(stencil((-3, -2, -1, 0, 1, 2, 3), 4)) / h**4
        # node 2 (and N-2 mirrored) needs an off-centred 4th derivative
        self.w4_left = np.array(stencil(tuple(range(-2, 6)), 4)) / h**4
        self.w4_right = np.array(stencil(tuple(range(-5, 3)), 4)) / h**4
        self.b_left = np.array(stencil((0, 1, 2, 3, 4), 1)) / h
        self.b_right = np.array(stencil((-4, -3, -2, -1, 0), 1)) / h
        self.rows = np.arange(2, N - 1)
        # sparse derivative matrices restricted to residual rows
        self.D1 = self._band(c5, self.w1)
        self.D2 = self._band(c5, self.w2)
        D4 = self._band((-3, -2, -1, 0, 1, 2, 3), self.w4, skip_edges=True)
        D4 = D4.tolil()
        D4[0, :] = 0.0
        D4[0, 0:8] = self.w4_left
        D4[-1, :] = 0.0
        D4[-1, N - 7:N + 1] = self.w4_right
        self.D4 = D4.tocsr()

    def _band(self, offs, w, skip_edges=False):
        N = self.N
        rows, cols, vals = [], [], []
        for r_i, node in enumerate(self.rows):
            for o, wk in zip(offs, w):
                j = node + o
                if 0 <= j <= N:
                    rows.append(r_i)
                    cols.append(j)
                    vals.append(wk)
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(self.rows), N + 1))

    def interior_residual(self, U, T):
        r = self.rows
        U1, U2, U4 = self.D1 @ U, self.D2 @ U, self.D4 @ U
        Ur = U[r]
        return T * Ur - (Ur**3 / 6.0 + (U1**2 + 2.0 * Ur * U2) / 24.0 + U4 / 240.0) - self.X[r]

    def residual(self, U, T, bc):
        (uL, uR, dL, dR) = bc
        res = np.empty(self.N + 1)
        res[0] = U[0] - uL
        res[self.N] = U[self.N] - uR
        res[1] = self.b_left @ U[:5] - dL
        res[self.N - 1] = self.b_right @ U[-5:] - dR
        res[2:self.N - 1] = self.interior_residual(U, T)
        return res

    def jacobian(self, U, T):
        N, r = self.N, self.rows
        U1, U2 = self.D1 @ U, self.D2 @ U
        Ur = U[r]
        n_in = len(r)
        sel = sp.csr_matrix((np.ones(n_in), (np.arange(n_in), r)), shape=(n_in, N + 1))
        J_in = (sp.diags(T - Ur**2 / 2.0 - 2.0 * U2 / 24.0) @ sel
                - sp.diags(2.0 * U1 / 24.0) @ self.D1
                - sp.diags(2.0 * Ur / 24.0) @ self.D2
                - self.D4 / 240.0)
        top = sp.lil_matrix((2, N + 1))
        top[0, 0] = 1.0
        top[1, 0:5] = self.b_left
        bot = sp.lil_matrix((2, N + 1))
        bot[0, N - 4:N + 1] = self.b_right
        bot[1, N] = 1.0
        return sp.vstack([top, J_in, bot]).tocsc()


def _damped_newton(F, J, x0, tol=NEWTON_TOL, maxiter=60, exc=ConvergenceError, floor=None):
    """Newton with step halving; a stall below ``floor`` counts as converged
    (round-off floor of high-order stencils on fine grids)."""
    x = x0.copy()
    r = F(x)
    nr = np.max(np.abs(r))
    for it in range(maxiter):
        if nr < tol:
            return x, nr, it
        dx = spla.spsolve(J(x), -r)
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            xn = x + lam * dx
            rn = F(xn)
            nn = np.max(np.abs(rn))
            if np.isfinite(nn) and nn < nr:
                break
            lam *= 0.5
        else:
            if floor is not None and nr < floor:
                return x, nr, it
            raise exc(f"damped Newton stalled at residual {nr:.3g}", iterate=x, residual=nr)
        x, r, nr = xn, rn, nn
    if nr < tol or (floor is not None and nr < floor):
        return x, nr, maxiter
    raise exc(f"Newton did not converge (residual {nr:.3g})", iterate=x, residual=nr)


def _p12_bc(X_max):
    a = np.cbrt(6.0 * X_max)
    d = -(1.0 / 3.0) * np.cbrt(6.0) * X_max ** (-2.0 / 3.0)
    return (a, -a, d, d)


def solve_p12(T, X_max=200.0, n=8000, seed=None, tol=NEWTON_TOL):
    """Pole-free P_I^2 solution at time T on [-X_max, X_max] with n intervals."""
    if X_max < 50:
        raise DomainError("X_max must be at least 50")
    if n < 2000:
        raise DomainError("n must be at least 2000")
    if not np.isfinite(T):
        raise DomainError("T must be finite")
    X = np.linspace(-X_max, X_max, n + 1)
    op = _P12Operator(X)
    bc = _p12_bc(X_max)
    U0 = cubic_seed(X, T) if seed is None else np.interp(X, seed.X_grid, seed.U_samples)
    try:
        # round-off in U_XXXX/240 grows like eps_mach |U| / h^4
        noise = 4.0 * np.finfo(float).eps * np.max(np.abs(U0)) * np.sum(np.abs(op.w4)) / 240.0
        floor = max(P12_RESIDUAL_FLOOR, noise)
        U, res, its = _damped_newton(lambda U: op.residual(U, T, bc), lambda U: op.jacobian(U, T),
                                     U0, tol=tol, floor=floor)
    except ConvergenceError:
        if seed is not None or T == 0.0:
            raise
        # the three-root cubic seed is discontinuous for T > 0: continue from T = 0
        return solve_p12_family([T], X_max, n)[0]
    interior = float(np.max(np.abs(op.interior_residual(U, T))))
    berr = float(max(abs(U[0] - p12_asymptote(X[0])), abs(U[-1] - p12_asymptote(X[-1]))))
    return P12Solution(T=float(T), X_grid=X, U_samples=U, residual_norm=interior,
                       boundary_error=berr, iterations=its)


def solve_p12_family(T_list, X_max=200.0, n=8000):
    """Continuation in T from T = 0, each solve seeded by its neighbour."""
    T_list = [float(t) for t in T_list]
    if not all(np.isfinite(T_list)):
        raise DomainError("T values must be finite")
    base = solve_p12(0.0, X_max, n)
    done = {0.0: base}
    for sign in (1.0, -1.0):
        ts = sorted((t for t in T_list if sign * t > 0), key=abs)
        prev = base
        for t in ts:
            # march in steps of at most 0.25 so each seed is close
            steps = int(np.ceil(abs(t - prev.T) / 0.25))
            for tt in np.linspace(prev.T, t, steps + 1)[1:]:
                prev = solve_p12(tt, X_max, n, seed=prev)
            done[t] = prev
    return [done[t] for t in T_list]


def evaluate_U(sol, X):
    """Quintic (6-point Lagrange) interpolation of the grid solution, error O(h^6 U^(6))."""
    X = np.asarray(X, dtype=float)
    scalar = X.ndim == 0
    X = np.atleast_1d(X)
    Xg, Ug = sol.X_grid, sol.U_samples
    if np.any(np.abs(X) > sol.X_max * (1 + 1e-14)):
        raise DomainError("X outside [-X_max, X_max]")
    h = sol.h
    N = len(Xg) - 1
    s = (X - Xg[0]) / h
    j = np.clip(np.floor(s).astype(int) - 2, 0, N - 5)
    out = np.empty_like(X)
    for i in range(len(X)):
        t = s[i] - j[i]
        nodes = np.arange(6)
        # compare positions directly: s carries rounding of order N * ulp(h)
        hit = np.abs(Xg[j[i]:j[i] + 6] - X[i]) <= 1e-12 * max(1.0, abs(X[i]))
        if np.any(hit):
            out[i] = Ug[j[i] + int(np.argmax(hit))]
            continue
        w = np.array([np.prod([(t - m) / (k - m) for m in nodes if m != k]) for k in nodes])
        out[i] = w @ Ug[j[i]:j[i] + 6]
    return float(out[0]) if scalar else out


def p12_residual(sol):
    """Pointwise interior residual of the P_I^2 equation on the solution grid."""
    op = _P12Operator(sol.X_grid)
    return op.interior_residual(sol.U_samples, sol.T)


def grid_derivative(sol, order):
    """4th-order centred derivative of U on interior nodes (NaN at the two edge nodes per side)."""
    h = sol.h
    offs = (-3, -2, -1, 0, 1, 2, 3) if order > 2 else (-2, -1, 0, 1, 2)
    w = np.array(stencil(offs, order)) / h**order
    U = sol.U_samples
    out = np.full_like(U, np.nan)
    p = max(offs)
    acc = np.zeros(len(U) - 2 * p)
    for o, wk in zip(offs, w):
        acc += wk * U[p + o:len(U) - p + o]
    out[p:len(U) - p] = acc
    return out


def asymptote_slope(sol, lo_frac=0.25, hi_frac=1.0, side=+1, trim=10):
    """Log-log slope of |U(X) - asymptote| against |X| over [lo, hi] * X_max on one side.

    ``trim`` nodes next to the boundary are skipped (the asymptote is imposed
    there exactly).
    """
    from .stencils import loglog_slope

    X, U = sol.X_grid, sol.U_samples
    sel = (side * X >= lo_frac * sol.X_max) & (side * X <= hi_frac * sol.X_max)
    idx = np.nonzero(sel)[0]
    idx = idx[(idx >= trim) & (idx <= len(X) - 1 - trim)]
    dev = U[idx] - p12_asymptote(X[idx])
    return loglog_slope(X[idx], dev)


# ---------------------------------------------------------------- P_I

def tritronquee_series_coeffs(nmax=40):
    """b_n in Q ~ Z^{1/2} sum_n b_n Z^{-5n/2} for Q_ZZ = 6Q^2 - Z."""
    b = [-1.0 / np.sqrt(6.0)]
    for m in range(1, nmax + 1):
        c = (25.0 * (m - 1) ** 2 - 1.0) / 4.0
        conv = sum(b[i] * b[m - i] for i in range(1, m))
        b.append((c * b[m - 1] - 6.0 * conv) / (12.0 * b[0]))
    return np.array(b)


def tritronquee_asymptotic(Z, nmax=40):
    """Optimally truncated asymptotic series for (Q, Q_Z), principal branch."""
    Z = np.asarray(Z, dtype=complex)
    b = tritronquee_series_coeffs(nmax)
    sq = np.sqrt(Z)
    w = Z ** (-2.5)
    Q = np.zeros_like(Z)
    dQ = np.zeros_like(Z)
    prev = np.full(Z.shape, np.inf)
    active = np.ones(Z.shape, dtype=bool)
    wn = np.ones_like(Z)
    for n, bn in enumerate(b):
        term = bn * sq * wn
        mag = np.abs(term)
        active &= mag < prev  # stop at the smallest term
        Q = Q + np.where(active, term, 0.0)
        dQ = dQ + np.where(active, (0.5 - 2.5 * n) * term / Z, 0.0)
        prev = np.where(active, mag, prev)
        wn = wn * w
    return Q, dQ


@dataclass
class P1Trajectory:
    path: np.ndarray
    Q_samples: np.ndarray
    dQ_samples: np.ndarray
    pole_estimates: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _p1_rhs(s, y, z0, d):
    Z = z0 + s * d
    return np.array([d * y[1], d * (6.0 * y[0] ** 2 - Z)])


def _anchor(a, Z_far, h=0.02, y0=0.0, tol=1e-11):
    """BVP for Q on Re Z = a between the two points of modulus Z_far.

    The uniform grid is shifted so that y0 (= Im Z of interest) is a node.
    """
    H = np.sqrt(Z_far**2 - a**2)
    n_lo = int(np.ceil((y0 + H) / h))
    hy = (y0 + H) / n_lo
    n_hi = int(np.floor((H - y0) / hy))
    y = y0 + hy * np.arange(-n_lo, n_hi + 1)
    n = len(y) - 1
    Z = a + 1j * y
    Qe, _ = tritronquee_asymptotic(Z[[0, -1]])
    w = np.array(stencil((-2, -1, 0, 1, 2), 2)) / hy**2
    wl = np.array(stencil((-1, 0, 1, 2, 3, 4), 2)) / hy**2
    wr = wl[::-1]
    rows, cols, vals = [0, n], [0, n], [1.0, 1.0]
    for i in range(1, n):
        if i == 1:
            offs, ww = range(-1, 5), wl
        elif i == n - 1:
            offs, ww = range(-4, 2), wr
        else:
            offs, ww = range(-2, 3), w
        for o, wk in zip(offs, ww):
            rows.append(i)
            cols.append(i + o)
            vals.append(wk)
    D2 = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    inner = np.ones(n + 1)
    inner[[0, n]] = 0.0
    # Q_ZZ = -Q_yy on a vertical line
    def F(Q):
        r = -(D2 @ Q) - 6.0 * Q**2 + Z
        r[0] = Q[0] - Qe[0]
        r[n] = Q[n] - Qe[1]
        return r

    def J(Q):
        return (-D2 - sp.diags(12.0 * Q * inner)).tocsc()

    seed = tritronquee_asymptotic(Z)[0]
    Q, res, its = _damped_newton(F, J, seed.astype(complex), tol=tol, exc=PoleProximityError,
                                 floor=1e-8)
    return y, Z, Q, hy, res


def _anchor_value(Z, Z_far, h):
    """(Q, Q_Z) at Z from the vertical BVP through Z, by a 6th-order centred stencil."""
    y, Zg, Q, hy, res = _anchor(Z.real, Z_far, h, y0=Z.imag)
    i = int(np.argmin(np.abs(y - Z.imag)))
    dQdy = np.array(stencil(tuple(range(-3, 4)), 1)) @ Q[i - 3:i + 4] / hy
    return Q[i], dQdy / 1j, res


def solve_tritronquee(Z_far=100.0, Z_near=1.0, n_samples=2001, h=0.02, rtol=1e-12):
    """Tritronquee Q on the straight path Z_near -> Z_far.

    Q and Q_Z at Z_near come from a Dirichlet BVP on the vertical segment
    through Z_near with asymptotic-series values at both ends (|Z| = Z_far);
    they are then transported to Z_far by an 8(5,3) Runge-Kutta solve.
    ``diagnostics`` holds the Newton residual, the mismatch against the
    asymptotic series at Z_far and the step-doubling (tolerance-halving)
    change along the path.
    """
    if Z_far < 50:
        raise DomainError("Z_far must be at least 50")
    Z_near = complex(Z_near)
    if not Z_near.real > 0:
        raise DomainError("Z_near needs positive real part (validated region |arg Z| < pi/2)")
    if abs(Z_near.imag) >= Z_far or abs(Z_near) >= Z_far:
        raise DomainError("Z_near must lie well inside |Z| < Z_far")
    Q0, dQ0, res = _anchor_value(Z_near, Z_far, h)
    Zs = Z_near
    traj = _march(Zs, Q0, dQ0, Z_far + 0j, n_samples, rtol)
    traj2 = _march(Zs, Q0, dQ0, Z_far + 0j, n_samples, rtol / 16.0)
    Qe, _ = tritronquee_asymptotic(np.array([Z_far + 0j]))
    scale = np.maximum(np.abs(traj2.Q_samples), 1.0)
    traj.diagnostics.update({
        "anchor_residual": float(res),
        "endpoint_mismatch": float(abs(traj.Q_samples[-1] - Qe[0])),
        "step_doubling": float(np.max(np.abs(traj.Q_samples - traj2.Q_samples) / scale)),
    })
    return traj


def trajectory_value(traj, Z):
    """Q at a point of the trajectory path by cubic Hermite interpolation (uses Q_Z)."""
    path = traj.path
    s = np.abs(path - path[0])
    d = (path[-1] - path[0]) / abs(path[-1] - path[0])
    sz = ((complex(Z) - path[0]) / d).real
    if abs(complex(Z) - (path[0] + sz * d)) > 1e-9 * max(1.0, abs(Z)) or not 0 <= sz <= s[-1]:
        raise DomainError("Z is not on the trajectory path")
    i = int(np.clip(np.searchsorted(s, sz) - 1, 0, len(s) - 2))
    hs = s[i + 1] - s[i]
    t = (sz - s[i]) / hs
    q0, q1 = traj.Q_samples[i], traj.Q_samples[i + 1]
    m0, m1 = traj.dQ_samples[i] * d * hs, traj.dQ_samples[i + 1] * d * hs
    h00, h10 = 2 * t**3 - 3 * t**2 + 1, t**3 - 2 * t**2 + t
    h01, h11 = -2 * t**3 + 3 * t**2, t**3 - t**2
    return complex(h00 * q0 + h10 * m0 + h01 * q1 + h11 * m1)


def _march(Z0, Q0, dQ0, Z1, n_samples, rtol, blow=1e6):
    length = abs(Z1 - Z0)
    d = (Z1 - Z0) / length
    s_eval = np.linspace(0.0, length, n_samples)

    def big(s, y, *args):
        return abs(y[0]) - blow

    big.terminal = True
    sol = solve_ivp(_p1_rhs, (0.0, length), np.array([Q0, dQ0], dtype=complex),
                    method="DOP853", rtol=rtol, atol=rtol * 1e-2, t_eval=s_eval,
                    args=(Z0, d), events=big)
    if sol.status == 1:
        raise PoleProximityError(f"|Q| exceeded {blow:g} at Z = {Z0 + sol.t_events[0][0] * d}",
                                 iterate=sol.y, residual=np.inf)
    if sol.status != 0:
        raise ConvergenceError(sol.message, iterate=sol.y, residual=np.inf)
    return P1Trajectory(path=Z0 + sol.t * d, Q_samples=sol.y[0], dQ_samples=sol.y[1])


def _pole_fit(sol, Z0, d, s_end, Zp):
    """max |Q (Z - Zp)^2 - 1| over the last decade of distance to the pole."""
    dist_end = abs(Z0 + s_end * d - Zp)
    # sample distances between 10 * dist_end and dist_end on the approach
    s_vals = s_end - np.geomspace(9.0 * dist_end, 1e-9, 60)
    s_vals = s_vals[s_vals > 0]
    Q = sol.sol(s_vals)[0]
    Z = Z0 + s_vals * d
    return float(np.max(np.abs(Q * (Z - Zp) ** 2 - 1.0)))


def continue_and_detect_poles(traj, direction, max_len, start_index=-1, rtol=1e-10,
                              blow=1e6, max_poles=1, detour=0.25):
    """March Q_ZZ = 6Q^2 - Z from a trajectory point along ``direction``.

    A pole is flagged when |Q| exceeds ``blow``; its location is Z + 2Q/Q_Z
    (from Q ~ (Z - Z_p)^{-2}) and the fit quality is the worst relative
    deviation of Q (Z - Z_p)^2 from 1 over the last decade of approach.
    With ``max_poles > 1`` the march skirts each pole on a half circle of
    radius ``detour`` and carries on.  Returns a new trajectory.
    """
    d = complex(direction)
    if abs(abs(d) - 1.0) > 1e-12:
        raise ValidationError("direction must be a complex unit")
    if not max_len > 0:
        raise DomainError("max_len must be positive")
    Z0 = complex(traj.path[start_index])
    y0 = np.array([traj.Q_samples[start_index], traj.dQ_samples[start_index]], dtype=complex)
    remaining = float(max_len)
    paths, Qs, dQs, poles = [], [], [], []

    def big(s, y, *args):
        return abs(y[0]) - blow

    big.terminal = True
    while remaining > 0:
        sol = solve_ivp(_p1_rhs, (0.0, remaining), y0, method="RK45", rtol=rtol,
                        atol=rtol * 1e-2, dense_output=True, args=(Z0, d), events=big)
        paths.append(Z0 + sol.t * d)
        Qs.append(sol.y[0])
        dQs.append(sol.y[1])
        if sol.status != 1:
            break
        s_end = sol.t_events[0][0]
        Ze = Z0 + s_end * d
        Qe, dQe = sol.y_events[0][0]
        Zp = Ze + 2.0 * Qe / dQe
        poles.append({"Z": complex(Zp), "fit_quality": _pole_fit(sol, Z0, d, s_end, Zp),
                      "distance_travelled": float(max_len - remaining + s_end)})
        if len(poles) >= max_poles:
            break
        # restart on the far side of the pole via a half circle around it
        s_back = s_end - (detour - abs(Ze - Zp))
        if s_back <= 0:
            break
        Zb = Z0 + s_back * d
        yb = sol.sol(s_back)
        arc = solve_ivp(lambda th, y: _arc_rhs(th, y, Zp, Zb - Zp), (0.0, np.pi), yb,
                        method="RK45", rtol=rtol, atol=rtol * 1e-2)
        Z0 = Zp - (Zb - Zp)
        y0 = arc.y[:, -1]
        remaining -= s_back + 2.0 * abs(Zb - Zp)
    out = P1Trajectory(path=np.concatenate(paths), Q_samples=np.concatenate(Qs),
                       dQ_samples=np.concatenate(dQs), pole_estimates=poles)
    out.diagnostics["poles_found"] = len(poles)
    return out


def _arc_rhs(theta, y, centre, r0):
    # Z = centre + r0 e^{i theta}; dZ/dtheta = i r0 e^{i theta}
    e = np.exp(1j * theta)
    dZ = 1j * r0 * e
    Z = centre + r0 * e
    return np.array([dZ * y[1], dZ * (6.0 * y[0] ** 2 - Z)])
