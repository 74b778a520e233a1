"""Admissible initial data and the inverse of their decreasing branch.

A datum is a negative, rapidly decaying profile with a single local minimum.
Everything downstream (characteristics, the catastrophe point, the WKB
phase) needs ``f_L``, the inverse of the part of the profile to the left of
the minimum, together with its first three derivatives.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, SingularityError, ValidationError
from .stencils import central_derivative

DECAY_LEVEL = 1e-12
TABLE_SIZE = 4096
INVERT_TOL = 1e-15  # relative to |u|


def _sech2(x):
    # overflow-free sech^2
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


@dataclass(frozen=True)
class InitialDatum:
    """Single-hump negative profile u0 with derivative evaluators.

    ``derivatives[j-1]`` evaluates the j-th derivative, j = 1..5.  All
    evaluators are vectorised over numpy arrays.
    """

    profile: Callable
    derivatives: tuple
    minimum_location: float
    minimum_value: float
    decay_scale: float
    spec: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.profile(x)

    def derivative(self, x, order):
        if order == 0:
            return self.profile(x)
        if not 1 <= order <= len(self.derivatives):
            raise ValueError(f"derivative order {order} not available")
        return self.derivatives[order - 1](x)

    @cached_property
    def branch(self):
        return BranchInverse(self)

    def translated(self, shift):
        """The datum x -> u0(x - shift)."""
        p, ds = self.profile, self.derivatives
        return InitialDatum(
            profile=lambda x: p(np.asarray(x) - shift),
            derivatives=tuple((lambda d: lambda x: d(np.asarray(x) - shift))(d) for d in ds),
            minimum_location=self.minimum_location + shift,
            minimum_value=self.minimum_value,
            decay_scale=self.decay_scale + abs(shift),
            spec={**self.spec, "shift": self.spec.get("shift", 0.0) + shift},
        )


def make_sech_datum(amplitude=1.0):
    """u0(x) = -amplitude * sech^2(x) with closed-form derivatives to order 5."""
    if not np.isfinite(amplitude) or amplitude <= 0:
        raise ValidationError(f"amplitude must be positive, got {amplitude}")
    A = float(amplitude)

    # derivatives of s = sech^2 are polynomials in s times (tanh)^{0 or 1}
    def d1(x):
        s = _sech2(x)
        return A * 2.0 * s * np.tanh(x)

    def d2(x):
        s = _sech2(x)
        return -A * (4.0 * s - 6.0 * s**2)

    def d3(x):
        s = _sech2(x)
        return A * s * np.tanh(x) * (8.0 - 24.0 * s)

    def d4(x):
        s = _sech2(x)
        return -A * (16.0 * s - 120.0 * s**2 + 120.0 * s**3)

    def d5(x):
        s = _sech2(x)
        return A * 2.0 * s * np.tanh(x) * (16.0 - 240.0 * s + 360.0 * s**2)

    datum = InitialDatum(
        profile=lambda x: -A * _sech2(x),
        derivatives=(d1, d2, d3, d4, d5),
        minimum_location=0.0,
        minimum_value=-A,
        decay_scale=float(np.arccosh(np.sqrt(A / DECAY_LEVEL))),
        spec={"kind": "sech2", "amplitude": A},
    )
    validate_datum(datum)
    return datum


def make_datum(profile, derivatives: Optional[Sequence[Callable]] = None,
               search_width=60.0, spec=None):
    """Build a datum from a vectorised callable.

    Missing derivatives are supplied by 8th-order central differences with
    step ``1e-3 * decay_scale``.  The minimum and decay scale are located on
    a sampling grid over ``[-search_width, search_width]``.
    """
    xs = np.linspace(-search_width, search_width, 200001)
    us = np.asarray(profile(xs), dtype=float)
    if not np.all(np.isfinite(us)):
        raise ValidationError("profile is not finite on the search window")
    big = np.nonzero(np.abs(us) >= DECAY_LEVEL)[0]
    if len(big) == 0:
        raise ValidationError("profile is identically below the decay level")
    if big[0] == 0 or big[-1] == len(xs) - 1:
        raise ValidationError("profile does not decay inside the search window")
    decay = float(max(abs(xs[big[0] - 1]), abs(xs[big[-1] + 1])))

    derivs = list(derivatives or [])
    h = 1e-3 * decay
    for order in range(len(derivs) + 1, 6):
        derivs.append((lambda k: lambda x: central_derivative(profile, x, k, h))(order))

    i = int(np.argmin(us))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    xm = _refine_minimum(derivs[0], derivs[1], lo, hi)
    datum = InitialDatum(
        profile=profile,
        derivatives=tuple(derivs),
        minimum_location=xm,
        minimum_value=float(profile(np.array(xm))),
        decay_scale=decay,
        spec=dict(spec or {"kind": "callable"}),
    )
    validate_datum(datum)
    return datum


def make_table_datum(x, u, spec=None):
    """Cubic-spline interpolant of tabulated samples (zero outside the table)."""
    from scipy.interpolate import CubicSpline

    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.ndim != 1 or x.shape != u.shape or len(x) < 8:
        raise ValidationError("table needs matching 1-d x and u columns (>= 8 rows)")
    if np.any(np.diff(x) <= 0):
        raise ValidationError("table x column must be strictly increasing")
    cs = CubicSpline(x, u, bc_type="clamped")
    a, b = x[0], x[-1]

    def wrap(fn):
        def ev(t):
            t = np.asarray(t, dtype=float)
            return np.where((t < a) | (t > b), 0.0, fn(np.clip(t, a, b)))
        return ev

    derivs = [wrap(cs.derivative(k)) for k in (1, 2, 3)]
    width = 1.5 * max(abs(a), abs(b))
    return make_datum(wrap(cs), derivs, search_width=width,
                      spec=dict(spec or {"kind": "table"}))


def load_table(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return make_table_datum(data[:, 0], data[:, 1], spec={"kind": "table", "samples": str(path)})


def _refine_minimum(d1, d2, lo, hi):
    from scipy.optimize import brentq

    f_lo, f_hi = float(d1(np.array(lo))), float(d1(np.array(hi)))
    if f_lo < 0 < f_hi:
        x = brentq(lambda t: float(d1(np.array(t))), lo, hi, xtol=1e-15)
    else:
        x = 0.5 * (lo + hi)
    for _ in range(5):
        g2 = float(d2(np.array(x)))
        if g2 <= 0:
            break
        step = float(d1(np.array(x))) / g2
        if abs(step) > hi - lo:
            break
        x -= step
    return float(x)


def validate_datum(datum, n=TABLE_SIZE):
    """Check negativity and the single-minimum shape on a sampling grid."""
    xm, D = datum.minimum_location, datum.decay_scale
    um = float(datum(np.array(xm)))
    if abs(um - datum.minimum_value) > 1e-10:
        raise ValidationError("stored minimum value does not match the profile")
    if abs(float(datum.derivative(np.array(xm), 1))) > 1e-10 * max(1.0, abs(um)):
        raise ValidationError("u0' does not vanish at the stated minimum")
    if um >= 0:
        raise ValidationError("datum must be negative (minimum value >= 0)")
    left = np.linspace(xm - D, xm, n)
    right = np.linspace(xm, xm + D, n)
    for side, xs, sign in (("left", left, -1.0), ("right", right, 1.0)):
        us = datum(xs)
        big = np.abs(us) > DECAY_LEVEL
        if np.any(us[big] >= 0):
            raise ValidationError(f"datum is not negative on the {side} of its minimum")
        du = sign * np.diff(us)
        both = big[1:] | big[:-1]
        # decreasing on the left means diff < 0; increasing on the right
        if np.any(du[both] <= 0):
            raise ValidationError(f"datum is not monotone on the {side} of its minimum "
                                  "(more than one local minimum?)")
    for xs in (left[:1], right[-1:]):
        if abs(float(datum(xs)[0])) > 10 * DECAY_LEVEL:
            raise ValidationError("datum does not decay at +-decay_scale")


class BranchInverse:
    """Inverse f_L of the decreasing branch of a datum on (u_min, 0).

    Inversion is a vectorised safeguarded Newton iteration seeded by a
    monotone lookup table; each step falls back to bisection when Newton
    leaves the current bracket.
    """

    def __init__(self, datum: InitialDatum, table_size=TABLE_SIZE):
        self.datum = datum
        self.u_min = datum.minimum_value
        self.x_min = datum.minimum_location
        self.domain = (self.u_min, 0.0)
        xs = np.linspace(self.x_min - datum.decay_scale, self.x_min, table_size)
        self._x = xs
        self._u = datum(xs)  # decreasing

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~(u > self.u_min)) or np.any(~(u < 0.0)):
            raise DomainError(f"u must lie in ({self.u_min}, 0)")
        return u

    def __call__(self, u):
        u = self._check(u)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        # bracket [lo, hi] with u0(lo) >= u > u0(hi) on the decreasing branch
        neg_tab = -self._u
        idx = np.searchsorted(neg_tab, -u, side="left")
        idx = np.clip(idx, 1, len(self._x) - 1)
        lo = self._x[idx - 1].copy()
        hi = self._x[idx].copy()
        outside = u > self._u[0]
        if np.any(outside):
            step = self.datum.decay_scale
            lo[outside] = self._x[0]
            hi[outside] = self._x[0]
            for _ in range(200):
                pending = outside & (self.datum(lo) < u)
                if not np.any(pending):
                    break
                hi[pending] = lo[pending]
                lo[pending] -= step
                step *= 2.0
        # seed by linear interpolation inside the bracket
        ulo, uhi = self.datum(lo), self.datum(hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(ulo != uhi, (ulo - u) / (ulo - uhi), 0.5)
        x = lo + np.clip(w, 0.0, 1.0) * (hi - lo)
        for _ in range(200):
            g = self.datum(x) - u
            done = np.abs(g) <= INVERT_TOL * np.abs(u)
            if np.all(done | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(x)))):
                break
            lo = np.where(g > 0, x, lo)
            hi = np.where(g <= 0, x, hi)
            d = self.datum.derivative(x, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - g / d
            bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            x = np.where(done, x, xn)
        return float(x[0]) if scalar else x

    def derivative(self, u, order):
        """f_L^{(order)}(u) for order 0..3 from the inverse-function identities."""
        if order == 0:
            return self(u)
        if order not in (1, 2, 3):
            raise ValueError("order must be 0..3")
        xi = self(u)
        f1 = self.datum.derivative(xi, 1)
        if np.any(f1 == 0.0) or np.any(np.abs(f1) < 1e-300):
            raise SingularityError("u0' vanishes at f_L(u): u is at the minimum value")
        if order == 1:
            return 1.0 / f1
        f2 = self.datum.derivative(xi, 2)
        if order == 2:
            return -f2 / f1**3
        f3 = self.datum.derivative(xi, 3)
        return (3.0 * f2**2 - f1 * f3) / f1**5


def invert_decreasing(datum, u):
    """The foot point xi <= x_min with u0(xi) = u."""
    return datum.branch(u)


def fl_derivatives(datum, u, order):
    """f_L^{(order)}(u), order in 1..3."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return datum.branch.derivative(u, order)
