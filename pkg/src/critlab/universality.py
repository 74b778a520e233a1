"""Double-scaling prediction near the gradient catastrophe and rate fits.

u(x, t, eps) ~ u_c + c1 eps^{2/7} U(X, T) + O(eps^{4/7}),
X = c2 (x - x_c - c3 (t - t_c)) / eps^{6/7},  T = c4 (t - t_c) / eps^{4/7},
with c1 = 2/(8k)^{2/7}, c2 = (8k)^{-1/7}, c3 = 6 u_c, c4 = 12/(8k)^{3/7}.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, GenericityError, ValidationError
from .hopf import CatastrophePoint, hopf_evaluate
from .painleve import evaluate_U, solve_p12_family
from .stencils import loglog_slope


@dataclass(frozen=True)
class ScalingConstants:
    c1: float
    c2: float
    c3: float
    c4: float
    k: float
    cp: CatastrophePoint

    def as_dict(self):
        d = asdict(self)
        d["cp"] = self.cp.as_dict()
        return d


def compute_constants(cp):
    if not cp.k > 0:
        raise GenericityError("k = -f_L'''(u_c) must be positive")
    e = 8.0 * cp.k
    return ScalingConstants(c1=2.0 / e ** (2.0 / 7.0), c2=e ** (-1.0 / 7.0), c3=6.0 * cp.u_c,
                            c4=12.0 / e ** (3.0 / 7.0), k=cp.k, cp=cp)


def double_scaling_coords(x, t, eps, sc):
    if not eps > 0:
        raise DomainError("eps must be positive")
    cp = sc.cp
    x = np.asarray(x, dtype=float)
    X = sc.c2 * (x - cp.x_c - sc.c3 * (t - cp.t_c)) / eps ** (6.0 / 7.0)
    T = sc.c4 * (t - cp.t_c) / eps ** (4.0 / 7.0)
    return X, T


def physical_coords(X, T, eps, sc):
    """Inverse of double_scaling_coords."""
    cp = sc.cp
    t = cp.t_c + np.asarray(T, dtype=float) * eps ** (4.0 / 7.0) / sc.c4
    x = cp.x_c + sc.c3 * (t - cp.t_c) + np.asarray(X, dtype=float) * eps ** (6.0 / 7.0) / sc.c2
    return x, t


class PainleveTable:
    """U(X, T) on |T| <= T_max from a family of P_I^2 solves.

    X uses the solver's quintic interpolation; T uses 6-point Lagrange
    interpolation across the family (quintic in T).
    """

    def __init__(self, T_max=1.0, count=21, X_max=50.0, n=4000, solutions=None):
        self.T_nodes = np.linspace(-T_max, T_max, count)
        self.solutions = solutions or solve_p12_family(self.T_nodes, X_max, n)
        self.T_max = T_max
        self.X_max = self.solutions[0].X_max

    def __call__(self, X, T):
        if abs(T) > self.T_max * (1 + 1e-12):
            raise DomainError(f"|T| = {abs(T):.3g} outside the tabulated range {self.T_max}")
        Tn = self.T_nodes
        h = Tn[1] - Tn[0]
        s = (T - Tn[0]) / h
        hit = np.isclose(s, np.round(s), atol=1e-12)
        if hit:
            return evaluate_U(self.solutions[int(round(s))], X)
        j = int(np.clip(np.floor(s) - 2, 0, len(Tn) - 6))
        tt = s - j
        vals = [evaluate_U(self.solutions[j + m], X) for m in range(6)]
        out = 0.0
        for m in range(6):
            w = np.prod([(tt - q) / (m - q) for q in range(6) if q != m])
            out = out + w * np.asarray(vals[m])
        return out


def predict(x, t, eps, sc, U_eval):
    X, T = double_scaling_coords(x, t, eps, sc)
    return sc.cp.u_c + sc.c1 * eps ** (2.0 / 7.0) * U_eval(X, float(T))


@dataclass
class ErrorReport:
    eps: float
    window: tuple
    sup: float
    rms: float
    count: int
    times: list = field(default_factory=list)
    centre_deviation: float = float("nan")
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def compare_run(traj, sc, U_eval, eps, window=(1.0, 1.0)):
    """u_numeric - prediction on all snapshot grid points with |X| <= wX, |T| <= wT.

    ``centre_deviation`` is |u(x_c, t_c) - u_c| when a snapshot at t_c
    exists (spectrally interpolated to x_c).
    """
    wX, wT = window
    diffs = []
    times = []
    centre = float("nan")
    for snap in traj.snapshots:
        X, T = double_scaling_coords(snap.grid.x, snap.time, eps, sc)
        if abs(T) > wT * (1 + 1e-9):
            continue
        sel = np.abs(X) <= wX
        if not np.any(sel):
            continue
        times.append(snap.time)
        pred = predict(snap.grid.x[sel], snap.time, eps, sc, U_eval)
        diffs.append(snap.samples[sel] - pred)
        if abs(snap.time - sc.cp.t_c) < 1e-12:
            centre = abs(fourier_interpolate(snap, sc.cp.x_c) - sc.cp.u_c)
    if not diffs:
        raise DomainError("trajectory has no snapshot inside the comparison window")
    d = np.concatenate(diffs)
    return ErrorReport(eps=eps, window=tuple(window), sup=float(np.max(np.abs(d))),
                       rms=float(np.sqrt(np.mean(d**2))), count=int(d.size), times=times,
                       centre_deviation=centre)


def fourier_interpolate(state, x):
    """Trigonometric interpolant of a real periodic snapshot at points x."""
    g = state.grid
    uh = np.fft.rfft(state.samples) / g.n
    m = np.arange(len(uh))
    w = np.full(len(uh), 2.0)
    w[0] = 1.0
    if g.n % 2 == 0:
        w[-1] = 1.0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ph = np.exp(1j * np.pi * np.outer(x + g.half_width, m) / g.half_width)
    out = np.real(ph @ (w * uh))
    return float(out[0]) if out.size == 1 else out


def hopf_deviation(state, datum, t_c):
    """sup |u_numeric - u_Hopf| on the grid (t < t_c)."""
    if state.time >= t_c:
        raise DomainError("the Hopf comparison needs t < t_c")
    u = hopf_evaluate(datum, state.grid.x, state.time, t_c=t_c)
    return float(np.max(np.abs(state.samples - u)))


@dataclass
class RateFit:
    amplitude_exponent: float
    correction_exponent: float
    amplitude_residual: float
    correction_residual: float
    monotone: bool
    notes: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def fit_rates(reports):
    """Log-log least squares of the centre deviation and the sup error against eps."""
    if len(reports) < 3:
        raise ValidationError("need at least three eps values")
    eps = np.array([r.eps for r in reports])
    if eps.max() / eps.min() < 2.0 - 1e-12:
        raise ValidationError("eps values must span a factor of at least 2")
    order = np.argsort(eps)
    amp = np.array([r.centre_deviation for r in reports])
    sup = np.array([r.sup for r in reports])
    notes = []
    if not np.all(np.isfinite(amp)):
        notes.append("centre deviation missing for some eps (no snapshot at t_c)")
        a, ar = float("nan"), float("nan")
    else:
        a, _, ar = loglog_slope(eps, amp)
    c, _, cr = loglog_slope(eps, sup)
    mono = bool(np.all(np.diff(sup[order]) > 0))
    if not mono:
        notes.append("sup error is not monotone in eps")
    return RateFit(a, c, ar, cr, mono, notes)


def snapshot_times(eps, sc, T_values):
    return [float(t) for t in physical_coords(0.0, np.asarray(T_values), eps, sc)[1]]
