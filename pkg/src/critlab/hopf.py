"""Characteristic solution of u_t + 6 u u_x = 0 and its gradient catastrophe."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DiagnosticError, DomainError, GenericityError, MultivaluedError
from .initial_data import fl_derivatives
from .stencils import loglog_slope

ROOT_TOL = 1e-13


@dataclass(frozen=True)
class CatastrophePoint:
    x_c: float
    t_c: float
    u_c: float
    xi_c: float
    k: float

    def as_dict(self):
        return asdict(self)


def _characteristic_roots(datum, x, t, samples=20001):
    """All roots of xi + 6 t u0(xi) - x in the a priori bracket."""
    lo, hi = x, x - 6.0 * t * datum.minimum_value
    xs = np.linspace(lo, hi, samples)
    g = xs + 6.0 * t * datum(xs) - x
    roots = []
    from scipy.optimize import brentq

    for i in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]:
        if g[i] == 0.0:
            roots.append(float(xs[i]))
        elif g[i + 1] != 0.0:
            roots.append(brentq(lambda s: s + 6.0 * t * float(datum(np.array(s))) - x,
                                xs[i], xs[i + 1], xtol=1e-15))
    if g[-1] == 0.0:
        roots.append(float(xs[-1]))
    return sorted(set(roots))


def characteristic_foot(datum, x, t):
    """Foot point xi of the characteristic through (x, t), vectorised in x.

    Valid while xi -> xi + 6 t u0(xi) is monotone, i.e. t <= t_c.  The root
    lies in [x, x - 6 t u_min]; safeguarded Newton with bisection fallback.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    lo = x.copy()
    hi = x - 6.0 * t * datum.minimum_value
    xi = datum.minimum_location + np.zeros_like(x)
    xi = np.clip(xi, lo, hi)
    for _ in range(300):
        g = xi + 6.0 * t * datum(xi) - x
        done = np.abs(g) < ROOT_TOL
        if np.all(done | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(xi)))):
            break
        lo = np.where(g < 0, xi, lo)
        hi = np.where(g >= 0, xi, hi)
        dg = 1.0 + 6.0 * t * datum.derivative(xi, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xi - g / dg
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi) | (dg <= 0)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xi = np.where(done, xi, xn)
    return float(xi[0]) if scalar else xi


def hopf_evaluate(datum, x, t, t_c=None):
    """u(x, t) = u0(xi) with x = 6 t u0(xi) + xi.

    For ``t > t_c`` the characteristic equation is scanned for several
    roots; if more than one exists ``MultivaluedError`` carries them all.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    if t_c is None:
        t_c = find_catastrophe(datum).t_c
    if t > t_c:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = []
        for xv in xs:
            roots = _characteristic_roots(datum, xv, t)
            if len(roots) > 1:
                raise MultivaluedError(f"{len(roots)} characteristics reach x={xv} at t={t}", roots)
            out.append(float(datum(np.array(roots[0]))))
        out = np.array(out)
        return float(out[0]) if np.ndim(x) == 0 else out
    return datum(characteristic_foot(datum, x, t))


def find_catastrophe(datum, tie_rtol=1e-9):
    """Breaking point: maximise -6 u0' over the decreasing branch."""
    xm, D = datum.minimum_location, datum.decay_scale
    xs = np.linspace(xm - D, xm, 4096)
    s = -6.0 * datum.derivative(xs, 1)
    i = int(np.argmax(s))
    if i == 0 or i == len(xs) - 1:
        raise GenericityError("maximum of -u0' sits at the end of the decreasing branch")
    # reject a second, separated local maximum of (nearly) equal height
    interior = (s[1:-1] >= s[:-2]) & (s[1:-1] >= s[2:])
    peaks = np.nonzero(interior)[0] + 1
    for p in peaks:
        if abs(p - i) > 2 and s[p] >= s[i] * (1 - tie_rtol) - 1e-12:
            raise GenericityError("several equal maxima of -u0' (not single-hump generic)")
    res = minimize_scalar(lambda v: 6.0 * float(datum.derivative(np.array(v), 1)),
                          bracket=(xs[i - 1], xs[i], xs[i + 1]), method="golden",
                          tol=1e-10)
    xi = float(res.x)
    # Newton polish on u0'' = 0
    for _ in range(20):
        d2 = float(datum.derivative(np.array(xi), 2))
        d3 = float(datum.derivative(np.array(xi), 3))
        if d3 == 0.0:
            break
        step = d2 / d3
        xi -= step
        if abs(step) < 1e-15 * max(1.0, abs(xi)):
            break
    slope = -6.0 * float(datum.derivative(np.array(xi), 1))
    if not slope > 0:
        raise GenericityError("datum has no decreasing part")
    t_c = 1.0 / slope
    u_c = float(datum(np.array(xi)))
    # k = u0'''/u0'^4 at xi_c; degenerate when u0''' is negligible on the branch scale
    d3 = float(datum.derivative(np.array(xi), 3))
    if d3 <= 1e-6 * float(np.max(np.abs(datum.derivative(xs, 3)))):
        raise GenericityError("degenerate maximum of -u0' (f_L'''(u_c) = 0)")
    k = -float(fl_derivatives(datum, u_c, 3))
    return CatastrophePoint(x_c=6.0 * t_c * u_c + xi, t_c=t_c, u_c=u_c, xi_c=xi, k=k)


def local_exponent(datum, cp, offsets, max_residual=0.05):
    """Slope of log|u(x_c + d, t_c) - u_c| against log|d|."""
    d = np.asarray(offsets, dtype=float)
    if np.any(np.abs(d) < 1e-8):
        raise DomainError("offsets must stay at least 1e-8 away from zero")
    u = datum(characteristic_foot(datum, cp.x_c + d, cp.t_c))
    slope, _, resid = loglog_slope(d, u - cp.u_c)
    if resid > max_residual:
        raise DiagnosticError(f"log-log fit residual {resid:.3g} exceeds {max_residual}")
    return slope


def critical_residual(datum, x, t, lam):
    """F(lam; x, t) = -x + 6 lam t + f_L(lam) and its first two lam-derivatives."""
    F = -x + 6.0 * lam * t + datum.branch(lam)
    F1 = 6.0 * t + fl_derivatives(datum, lam, 1)
    F2 = fl_derivatives(datum, lam, 2)
    return F, F1, F2
