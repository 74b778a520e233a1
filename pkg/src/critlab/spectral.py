"""Periodic pseudospectral evolution of small-dispersion PDEs.

Fourier convention: u(x) = sum_m u_m exp(i k_m x) with k_m = pi m / L on
[-L, L).  A linear symbol is the multiplier ``sigma(k, eps)`` such that the
linear part of the equation reads u_t = sigma(k) u in Fourier space; e.g.
KdV's -eps^2 u_xxx has sigma = i eps^2 k^3.

Real equations are stepped with ETDRK4 (Cox-Matthews, coefficients by the
Kassam-Trefethen contour average), NLS with a fourth-order (Yoshida)
composition of Strang splittings in which the nonlinear phase is exact.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import diffpoly
from .errors import BlowUpError, DomainError, ValidationError


@dataclass(frozen=True)
class PeriodicGrid:
    half_width: float
    n: int
    dealias: bool = True

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValidationError("n must be a power of two >= 8")
        if not self.half_width > 0:
            raise ValidationError("half_width must be positive")

    @cached_property
    def x(self):
        return -self.half_width + 2.0 * self.half_width * np.arange(self.n) / self.n

    @property
    def dx(self):
        return 2.0 * self.half_width / self.n

    @cached_property
    def k(self):
        """Wavenumbers in numpy fft order."""
        return np.pi / self.half_width * np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def kr(self):
        return np.pi / self.half_width * np.arange(self.n // 2 + 1)

    def wavenumbers(self, real):
        return self.kr if real else self.k

    def mask(self, real):
        """Keep |m| <= n/3 when de-aliasing is on."""
        m = np.abs(self.wavenumbers(real)) * self.half_width / np.pi
        if not self.dealias:
            return np.ones_like(m)
        return (m <= self.n / 3.0).astype(float)

    def _ik_power(self, real, order):
        k = self.wavenumbers(real).copy()
        if order % 2 == 1:
            k[np.abs(k * self.half_width / np.pi) == self.n // 2] = 0.0  # drop Nyquist
        return (1j * k) ** order

    def fft(self, u):
        return np.fft.rfft(u) if np.isrealobj(u) else np.fft.fft(u)

    def ifft(self, uh, real):
        return np.fft.irfft(uh, self.n) if real else np.fft.ifft(uh)

    def derivative(self, u, order=1):
        real = np.isrealobj(u)
        return self.ifft(self._ik_power(real, order) * self.fft(u), real)

    def integrate(self, u):
        return 2.0 * self.half_width * np.mean(u)


@dataclass(frozen=True)
class FieldState:
    grid: PeriodicGrid
    samples: np.ndarray
    eps: float
    time: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if np.shape(self.samples) != (self.grid.n,):
            raise ValidationError("samples must match the grid size")

    @property
    def is_real(self):
        return np.isrealobj(self.samples)

    def resolution_tail(self):
        """|coefficient| at the top retained wavenumber relative to the largest one."""
        uh = np.abs(self.grid.fft(self.samples))
        keep = self.grid.mask(self.is_real) > 0
        kept = uh[keep]
        m = np.abs(self.grid.wavenumbers(self.is_real))[keep]
        top = kept[m >= m.max() * 0.95]
        return float(top.max() / max(kept.max(), 1e-300))


@dataclass(frozen=True)
class EvolutionSpec:
    """Linear/nonlinear split of an evolution equation.

    ``nonlinear_rhs(u, grid, eps)`` returns grid samples of the nonlinear
    part of u_t.  For ``scheme="split"`` (NLS) ``phase_sign`` selects the
    exact nonlinear phase exp(i * phase_sign * |psi|^2 dt / eps).
    """

    label: str
    linear_symbol: Callable
    nonlinear_rhs: Optional[Callable] = None
    scheme: str = "etdrk4"
    complex_field: bool = False
    phase_sign: float = 0.0
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = np.linspace(-50.0, 50.0, 101)
        s = np.asarray(self.linear_symbol(k, 0.3), dtype=complex)
        if np.max(np.abs(s.real)) > 1e-12 * max(1.0, np.max(np.abs(s))):
            raise ValidationError(f"{self.label}: linear symbol must be purely imaginary")

    def rhs(self, state):
        """Full u_t on the grid (linear + nonlinear), for diagnostics."""
        g = state.grid
        real = state.is_real
        lin = g.ifft(self.linear_symbol(g.wavenumbers(real), state.eps) * g.fft(state.samples), real)
        if self.scheme == "split":
            return lin + 1j * self.phase_sign / state.eps * np.abs(state.samples) ** 2 * state.samples
        if self.nonlinear_rhs is None:
            return lin
        return lin + self.nonlinear_rhs(state.samples, g, state.eps)


class _ETDRK4:
    def __init__(self, grid, spec, dt, eps, real, contour_points=32):
        self.grid, self.spec, self.real, self.eps = grid, spec, real, eps
        L = np.asarray(spec.linear_symbol(grid.wavenumbers(real), eps), dtype=complex)
        self.mask = grid.mask(real)
        self.E = np.exp(dt * L)
        self.E2 = np.exp(dt * L / 2.0)
        r = np.exp(2j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
        LR = dt * L[:, None] + r[None, :]
        # full-circle contour means: L is imaginary, so no real-part shortcut
        self.Q = dt * np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1)
        self.f1 = dt * np.mean((-4.0 - LR + np.exp(LR) * (4.0 - 3.0 * LR + LR**2)) / LR**3, axis=1)
        self.f2 = dt * np.mean((2.0 + LR + np.exp(LR) * (-2.0 + LR)) / LR**3, axis=1)
        self.f3 = dt * np.mean((-4.0 - 3.0 * LR - LR**2 + np.exp(LR) * (4.0 - LR)) / LR**3, axis=1)

    def N(self, vh):
        if self.spec.nonlinear_rhs is None:
            return np.zeros_like(vh)
        u = self.grid.ifft(vh, self.real)
        return self.mask * self.grid.fft(self.spec.nonlinear_rhs(u, self.grid, self.eps))

    def __call__(self, vh):
        Nv = self.N(vh)
        a = self.E2 * vh + self.Q * Nv
        Na = self.N(a)
        b = self.E2 * vh + self.Q * Na
        Nb = self.N(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = self.N(c)
        return self.E * vh + self.f1 * Nv + 2.0 * self.f2 * (Na + Nb) + self.f3 * Nc


_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) * _W1


class _SplitStep:
    """Yoshida composition S(w1 dt) S(w0 dt) S(w1 dt) of Strang steps."""

    def __init__(self, grid, spec, dt, eps):
        self.grid, self.eps, self.sign = grid, eps, spec.phase_sign
        L = np.asarray(spec.linear_symbol(grid.k, eps), dtype=complex)
        self.subs = []
        for w in (_W1, _W0, _W1):
            self.subs.append((w * dt, np.exp(w * dt * L)))

    def _phase(self, psi, h):
        return psi * np.exp(1j * self.sign * np.abs(psi) ** 2 * h / self.eps)

    def __call__(self, psi):
        for h, E in self.subs:
            psi = self._phase(psi, h / 2.0)
            psi = np.fft.ifft(E * np.fft.fft(psi))
            psi = self._phase(psi, h / 2.0)
        return psi


_INTEGRATORS = {}


def _integrator(grid, spec, dt, eps, real):
    key = (grid, id(spec), float(dt), float(eps), real)
    it = _INTEGRATORS.get(key)
    if it is None or it[0] is not spec:
        if len(_INTEGRATORS) > 64:
            _INTEGRATORS.clear()
        obj = _SplitStep(grid, spec, dt, eps) if spec.scheme == "split" else _ETDRK4(grid, spec, dt, eps, real)
        _INTEGRATORS[key] = it = (spec, obj)
    return it[1]


def _check_dt(state, dt):
    if not dt > 0:
        raise DomainError("dt must be positive")
    amp = float(np.max(np.abs(state.samples)))
    if dt * amp > 1.0:
        raise DomainError(f"dt * max|u| = {dt * amp:.3g} exceeds 1")


def _advance(state, spec, dt):
    g = state.grid
    it = _integrator(g, spec, dt, state.eps, state.is_real)
    if spec.scheme == "split":
        new = it(state.samples.astype(complex))
    else:
        new = g.ifft(it(g.fft(state.samples)), state.is_real)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite samples after t = {state.time:g}", last_time=state.time)
    return replace(state, samples=new, time=state.time + dt)


def step(state, spec, dt):
    """One fourth-order step of size dt."""
    _check_dt(state, dt)
    return _advance(state, spec, dt)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    final: Optional[FieldState] = None

    def snapshot_at(self, t, tol=1e-12):
        for s in self.snapshots:
            if abs(s.time - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(t)


def _time_grid(t0, t_end, dt, marks):
    """Step end points: multiples of dt from t0, plus the requested marks."""
    nfull = int(np.floor((t_end - t0) / dt + 1e-9))
    pts = [t0 + i * dt for i in range(1, nfull + 1)]
    pts += [m for m in marks if t0 < m < t_end]
    pts.append(t_end)
    pts = np.unique(np.round(np.array(pts), 14))
    out = [pts[0]]
    for p in pts[1:]:
        if p - out[-1] > 1e-12:
            out.append(p)
    return out


def evolve(state, spec, t_end, dt, observers=(), snap_times=(), observe_every=1):
    """Fixed-step integration to ``t_end`` hitting every ``snap_times`` exactly.

    Each observer is called as ``obs(state)`` (returning a dict) every
    ``observe_every`` steps and at the snapshot and final times; results are
    collected in ``trajectory.records`` with the time added.
    """
    if not t_end > state.time:
        raise DomainError("t_end must exceed the current time")
    _check_dt(state, dt)
    traj = Trajectory()
    snaps = sorted(float(s) for s in snap_times)

    def observe(s):
        rec = {"t": s.time}
        for obs in observers:
            rec.update(obs(s))
        traj.records.append(rec)

    if observers:
        observe(state)
    if snaps and abs(snaps[0] - state.time) < 1e-12:
        traj.snapshots.append(state)
    current = state
    steps = _time_grid(state.time, t_end, dt, snaps)
    for i, t_next in enumerate(steps):
        h = t_next - current.time
        try:
            current = _advance(current, spec, h)
        except BlowUpError as exc:
            exc.trajectory = traj
            traj.final = current
            raise
        current = replace(current, time=float(t_next))
        is_snap = any(abs(t_next - s) < 1e-12 for s in snaps)
        if is_snap:
            traj.snapshots.append(current)
        if observers and ((i + 1) % observe_every == 0 or is_snap or i == len(steps) - 1):
            observe(current)
        traj.times.append(current.time)
    traj.final = current
    return traj


# conserved functionals

def kdv_invariants(state):
    g, u = state.grid, state.samples
    ux = g.derivative(u, 1)
    return {
        "mass": g.integrate(u),
        "momentum": g.integrate(u**2),
        "hamiltonian": g.integrate(u**3 - 0.5 * state.eps**2 * ux**2),
    }


def nls_invariants(state):
    return {"mass": state.grid.integrate(np.abs(state.samples) ** 2),
            "max_modulus": float(np.max(np.abs(state.samples)))}


def max_slope(state):
    return {"max_slope": float(np.max(np.abs(state.grid.derivative(state.samples, 1))))}


# equations

def _smooth(f, n):
    """Normalise a (value, d1, d2, ...) callback tuple or a constant."""
    if callable(f):
        raise ValidationError("pass a tuple of callables (f, f', f'', ...) or a constant")
    if np.isscalar(f):
        c = float(f)
        return [lambda u, c=c: c + 0.0 * u] + [lambda u: 0.0 * u] * (n - 1)
    f = list(f)
    if len(f) < n:
        raise ValidationError(f"need {n} callbacks (value and derivatives)")
    return f[:n]


def hampert_rhs(state, c, p, eps=None):
    """u_t for the general fourth-order Hamiltonian perturbation of Hopf.

    ``c`` is (c, c', c'') and ``p`` is (p, p', p'', p''') as callables of u,
    or plain constants.
    """
    g = state.grid
    u = state.samples
    eps = state.eps if eps is None else eps
    c0, c1, c2 = (f(u) for f in _smooth(c, 3))
    p0, p1, p2, p3 = (f(u) for f in _smooth(p, 4))
    d = {j: g.derivative(u, j) for j in range(1, 6)}
    u1, u2, u3, u4, u5 = d[1], d[2], d[3], d[4], d[5]
    bracket = (6.0 * u * u1
               + eps**2 / 24.0 * (2.0 * c0 * u3 + 4.0 * c1 * u1 * u2 + c2 * u1**3)
               + eps**4 * (2.0 * p0 * u5
                           + 2.0 * p1 * (5.0 * u2 * u3 + 3.0 * u1 * u4)
                           + p2 * (7.0 * u1 * u2**2 + 6.0 * u1**2 * u3)
                           + 2.0 * p3 * u1**3 * u2))
    return -bracket


def _poly_symbol(linear_part):
    terms = [(float(cf), e, f[0]) for (e, f), cf in linear_part]

    def symbol(k, eps):
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        for cf, e, j in terms:
            out = out + cf * eps**e * (1j * k) ** j
        return out

    return symbol


def _kdv_nl(u, grid, eps):
    return -3.0 * grid.derivative(u * u, 1)


def _parse(name, params):
    params = dict(params)
    for base, key in (("kdv_hierarchy", "m"), ("gkdv", "n")):
        if name.startswith(base + "_") and name[len(base) + 1:].isdigit():
            params.setdefault(key, int(name[len(base) + 1:]))
            name = base
    return name, params


def builtin_specs(name, **params):
    """EvolutionSpec for kdv, kdv_hierarchy(_m), kawahara, gkdv(_n),
    nls_focusing, nls_defocusing, hampert (c=..., p=...)."""
    name, params = _parse(name, params)
    if name == "kdv":
        return EvolutionSpec("kdv", lambda k, eps: 1j * eps**2 * np.asarray(k) ** 3, _kdv_nl,
                             params=params)
    if name == "kawahara":
        # u_t + 6uu_x + eps^2 u_xxx = eps^4 u_5x
        return EvolutionSpec("kawahara",
                             lambda k, eps: 1j * eps**2 * np.asarray(k) ** 3
                             + 1j * eps**4 * np.asarray(k) ** 5,
                             _kdv_nl, params=params)
    if name == "gkdv":
        n = int(params.get("n", 1))
        if n < 1:
            raise ValidationError("gkdv exponent must be >= 1")

        def nl(u, grid, eps, n=n):
            return -6.0 / (n + 1) * grid.derivative(u ** (n + 1), 1)

        return EvolutionSpec(f"gkdv_{n}", lambda k, eps: 1j * eps**2 * np.asarray(k) ** 3, nl,
                             params={"n": n})
    if name == "kdv_hierarchy":
        m = int(params.get("m", 1))
        flow = diffpoly.hierarchy_flow(m)
        lin, rest = flow.split_linear()
        ev = diffpoly.compile_evaluator(rest)
        return EvolutionSpec(f"kdv_hierarchy_{m}", _poly_symbol(lin),
                             lambda u, grid, eps: ev(u, grid.derivative, eps),
                             params={"m": m})
    if name == "hampert":
        c = params.get("c", 12.0)
        p = params.get("p", 0.0)
        c0 = float(_smooth(c, 3)[0](np.zeros(1))[0])
        p0 = float(_smooth(p, 4)[0](np.zeros(1))[0])

        def symbol(k, eps):
            k = np.asarray(k, dtype=float)
            # -(eps^2/12) c(0) (ik)^3 - 2 eps^4 p(0) (ik)^5
            return -(eps**2 / 12.0) * c0 * (1j * k) ** 3 - 2.0 * eps**4 * p0 * (1j * k) ** 5

        def nl(u, grid, eps):
            st = FieldState(grid, u, eps)
            lin = grid.ifft(symbol(grid.kr, eps) * grid.fft(u), True)
            return hampert_rhs(st, c, p) - lin

        return EvolutionSpec("hampert", symbol, nl, params={"c0": c0, "p0": p0})
    if name in ("nls_focusing", "nls_defocusing"):
        sign = 1.0 if name == "nls_focusing" else -1.0
        return EvolutionSpec(name, lambda k, eps: -0.5j * eps * np.asarray(k) ** 2,
                             scheme="split", complex_field=True, phase_sign=sign)
    raise ValidationError(f"unknown equation {name!r}")


@dataclass(frozen=True)
class MadelungFields:
    defocusing: FieldState  # u = -|psi|^2
    focusing: FieldState  # u = +|psi|^2
    velocity: FieldState


def madelung(state, vacuum=1e-8):
    """(u, v) with v = (eps / 2i)(psi_x/psi - conj(psi_x)/conj(psi)) = eps Im(psi_x/psi)."""
    psi = np.asarray(state.samples, dtype=complex)
    if np.min(np.abs(psi)) < vacuum:
        raise DomainError("|psi| falls below the vacuum threshold")
    psix = state.grid.derivative(psi, 1)
    v = state.eps * np.imag(psix / psi)
    rho = np.abs(psi) ** 2
    mk = lambda s: FieldState(state.grid, s, state.eps, state.time)  # noqa: E731
    return MadelungFields(mk(-rho), mk(rho), mk(v))


def classify_system(u, v):
    """Type of the dispersionless NLS system at (u, v) with its eigenvalues."""
    if u < 0:
        r = np.sqrt(-u)
        return "hyperbolic", (v - r, v + r)
    if u > 0:
        r = np.sqrt(u)
        return "elliptic", (complex(v, -r), complex(v, r))
    return "degenerate", (v, v)


def soliton(grid, eps, c=1.0, x0=0.0, t=0.0):
    """KdV travelling wave (c/2) sech^2(sqrt(c) (x - x0 - c t) / (2 eps)), periodised."""
    P = 2.0 * grid.half_width
    xi = grid.x - x0 - c * t
    xi = (xi + grid.half_width) % P - grid.half_width
    return 0.5 * c / np.cosh(np.sqrt(c) * xi / (2.0 * eps)) ** 2
