"""Jump data of the Riemann-Hilbert problems, WKB phases and the global parametrix.

Nothing here solves a RH problem.  The module stores contours and jump
matrices as closures, checks their algebraic consistency (unimodularity,
cyclic product around the node), evaluates the scalar phases and checks the
explicit outer parametrix.

Orientation convention: a ray is either ``"out"`` (pointing away from the
origin) or ``"in"``.  The + side is on the left of the orientation.  Going
counterclockwise around the origin one crosses an outgoing ray from its -
side to its + side (factor J) and an incoming ray from + to - (factor J^-1).
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre

from .errors import DomainError, ValidationError

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class RayContour:
    """Rays from the origin: tuple of (angle, orientation) with orientation 'in' | 'out'."""

    rays: tuple
    nodes: tuple = (0.0,)

    def __post_init__(self):
        angs = [float(np.mod(a, 2 * np.pi)) for a, _ in self.rays]
        for i in range(len(angs)):
            for j in range(i):
                d = abs(angs[i] - angs[j])
                if min(d, 2 * np.pi - d) < 1e-12:
                    raise ValidationError("ray angles must be distinct mod 2 pi")
        if any(o not in ("in", "out") for _, o in self.rays):
            raise ValidationError("orientation must be 'in' or 'out'")

    def point(self, ray, radius):
        return radius * np.exp(1j * self.rays[ray][0])

    def counterclockwise(self):
        """Ray indices sorted by angle in [0, 2 pi)."""
        return sorted(range(len(self.rays)), key=lambda i: np.mod(self.rays[i][0], 2 * np.pi))


@dataclass(frozen=True)
class JumpDescriptor:
    """Jump data J(ray, zeta, params) on a ray contour.

    ``expected_det[i]`` is the determinant of the jump on ray i (1 for the
    unimodular problems; -1 on the sigma_1 half-line of the KdV problems).
    ``constant_near_node`` marks descriptors whose jumps do not depend on
    the position (so the cyclic product at the node makes sense).
    """

    name: str
    contour: RayContour
    jump: Callable
    params: dict = field(default_factory=dict)
    expected_det: tuple = ()
    constant_near_node: bool = False
    exponent: Optional[float] = None
    matrix_problem: bool = True
    variable: str = "zeta"

    def matrix(self, ray, zeta, **params):
        p = {**self.params, **params}
        return np.asarray(self.jump(ray, zeta, p), dtype=complex)


def _const(*mats):
    mats = [np.array(m, dtype=complex) for m in mats]
    return lambda ray, zeta, p: mats[ray]


# reflection-type jumps -------------------------------------------------------

def _need_r0(p, name):
    r0 = p.get("r0")
    if r0 is None:
        raise ValidationError(f"{name} needs a reflection function r0(spectral, eps)")
    return r0


def _kdv_family_jump(power, factor):
    """Jump for the Schrodinger-based problems with r = r0 exp(i factor t (-lam)^power / eps)."""

    def jump(ray, lam, p):
        if ray == 1:  # lam > 0
            return SIGMA1
        r0 = _need_r0(p, "KdV-type descriptor")
        x, t, eps = p.get("x", 0.0), p.get("t", 0.0), p["eps"]
        lam = float(np.real(lam))
        s = np.sqrt(-lam)
        r = complex(r0(lam, eps)) * np.exp(1j * factor * t * s ** (2 * power) / eps)
        e = np.exp(2j * x * s / eps)
        return np.array([[1.0, r * e], [-np.conj(r) / e, 1.0 - abs(r) ** 2]])

    return jump


def _ch_jump(ray, z, p):
    r0 = _need_r0(p, "ch_M")
    y, t, eps = p.get("y", 0.0), p.get("t", 0.0), p["eps"]
    z = float(np.real(z))
    r = complex(r0(z, eps)) * np.exp(4j * t * z / (eps * (1.0 + 4.0 * z * z)))
    e = np.exp(-2j * y * z)
    return np.array([[1.0 - abs(r) ** 2, r * e], [-np.conj(r) / e, 1.0]])


def _nls_jump(focusing):
    def jump(ray, z, p):
        r0 = _need_r0(p, "NLS descriptor")
        x, t, eps = p.get("x", 0.0), p.get("t", 0.0), p["eps"]
        z = float(np.real(z))
        r = complex(r0(z, eps)) * np.exp(4j * t * z * z / eps)
        e = np.exp(2j * x * z / eps)
        if focusing:
            return np.array([[1.0 + abs(r) ** 2, np.conj(r) / e], [r * e, 1.0]])
        return np.array([[1.0 - abs(r) ** 2, -np.conj(r) / e], [r * e, 1.0]])

    return jump


_REAL_LINE = RayContour(rays=((np.pi, "in"), (0.0, "out")))


def builtin_descriptor(name, m=None, **params):
    """Descriptor for psi_p12, phi_p1, kdv_M, kdv_hierarchy_M (m), ch_M,
    nls_defocusing_M, nls_focusing_M.  Reflection descriptors read ``r0``,
    ``eps`` and the space/time parameters from ``params``."""
    if name == "psi_p12":
        a = 6 * np.pi / 7
        c = RayContour(rays=((0.0, "out"), (a, "in"), (np.pi, "in"), (-a, "in")))
        J = _const([[1, 1], [0, 1]], [[1, 0], [1, 1]], [[0, 1], [-1, 0]], [[1, 0], [1, 1]])
        return JumpDescriptor(name, c, J, params, (1, 1, 1, 1), True, exponent=3.5)
    if name == "phi_p1":
        a = 2 * np.pi / 5
        c = RayContour(rays=((0.0, "out"), (a, "out"), (np.pi, "in"), (-a, "out")))
        J = _const([[1, 0], [1j, 1]], [[1, 1j], [0, 1]], [[0, 1j], [1j, 0]], [[1, 1j], [0, 1]])
        return JumpDescriptor(name, c, J, params, (1, 1, 1, 1), True, exponent=2.5)
    if name == "kdv_M":
        return JumpDescriptor(name, _REAL_LINE, _kdv_family_jump(1.5, 8.0), params, (1, -1),
                              exponent=3.5, variable="lambda")
    if name.startswith("kdv_hierarchy_M"):
        if m is None and name[len("kdv_hierarchy_M"):].lstrip("_").isdigit():
            m = int(name[len("kdv_hierarchy_M"):].lstrip("_"))
        if m is None or m < 1:
            raise ValidationError("kdv_hierarchy_M needs m >= 1")
        return JumpDescriptor(f"kdv_hierarchy_M_{m}", _REAL_LINE,
                              _kdv_family_jump((2 * m + 1) / 2.0, 2.0 * 4**m),
                              {**params, "m": m}, (1, -1), exponent=3.5, variable="lambda")
    if name == "ch_M":
        return JumpDescriptor(name, _REAL_LINE, _ch_jump, params, (1, 1), exponent=3.5,
                              matrix_problem=False, variable="z")
    if name == "nls_defocusing_M":
        return JumpDescriptor(name, _REAL_LINE, _nls_jump(False), params, (1, 1), variable="z")
    if name == "nls_focusing_M":
        return JumpDescriptor(name, _REAL_LINE, _nls_jump(True), params, (1, 1), exponent=2.5,
                              variable="z")
    raise ValidationError(f"unknown RH problem {name!r}")


def det_check(d, samples, **params):
    """Worst |det J - expected| over radii ``samples`` on every ray."""
    worst = 0.0
    for ray in range(len(d.contour.rays)):
        for rad in np.atleast_1d(samples):
            z = d.contour.point(ray, float(rad))
            if d.variable != "zeta":
                z = z.real
            M = d.matrix(ray, z, **params)
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            worst = max(worst, abs(det - d.expected_det[ray]))
    return float(worst)


def _cyclic_product(d, inversions):
    P = np.eye(2, dtype=complex)
    for i in d.contour.counterclockwise():
        J = d.matrix(i, d.contour.point(i, 1.0))
        if inversions[i]:
            # adjugate-based inverse keeps integer/Gaussian-integer entries exact
            det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            J = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / det
        P = P @ J
    return P


def orientation_pattern(d):
    """Inversion flags implied by the orientation convention (incoming rays inverted)."""
    return tuple(o == "in" for _, o in d.contour.rays)


def cyclic_consistency(d, inversions=None):
    """max |prod J^{+-1} - I| counterclockwise around the origin."""
    if not d.constant_near_node:
        raise ValidationError(f"{d.name}: jumps are not constant near the node")
    inv = orientation_pattern(d) if inversions is None else tuple(inversions)
    return float(np.max(np.abs(_cyclic_product(d, inv) - np.eye(2))))


def brute_force_conventions(d):
    """All inversion patterns (one flag per ray) whose cyclic product is exactly I."""
    n = len(d.contour.rays)
    return [pat for pat in product((False, True), repeat=n)
            if cyclic_consistency(d, pat) == 0.0]


# phases ----------------------------------------------------------------------

def _off_negative_axis(z):
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (z.real < 0)):
        raise DomainError("argument lies on the branch cut (-inf, 0]")
    return z


def phase_eval(kind, arg, **p):
    """theta(zeta; X, T), tilde_alpha(zeta; Z), alpha(lam; x, t) or beta(z; y, t).

    zeta^{k/2} and lam -> (-lam)^{k/2} use principal branches: theta and
    tilde_alpha are cut along the negative zeta axis, alpha along lam > 0.
    """
    if kind == "theta":
        z = _off_negative_axis(arg)
        s = np.sqrt(z)
        return s**7 / 105.0 - p.get("T", 0.0) / 3.0 * s**3 + p.get("X", 0.0) * s
    if kind == "tilde_alpha":
        z = _off_negative_axis(arg)
        s = np.sqrt(z)
        return 0.8 * s**5 - p.get("Z", 0.0) * s
    if kind == "alpha":
        lam = np.asarray(arg, dtype=complex)
        if np.any((lam.imag == 0) & (lam.real > 0)):
            raise DomainError("argument lies on the branch cut [0, inf)")
        s = np.sqrt(-lam)
        return p.get("x", 0.0) * s + 4.0 * p.get("t", 0.0) * s**3
    if kind == "beta":
        z = np.asarray(arg, dtype=complex)
        if np.any(np.abs(1.0 + 4.0 * z * z) == 0):
            raise DomainError("beta has poles at z = +-i/2")
        return -z * (p.get("y", 0.0) - 2.0 * p.get("t", 0.0) / (1.0 + 4.0 * z * z))
    raise ValidationError(f"unknown phase {kind!r}")


N_MATRIX = (np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2.0)
            @ np.diag(np.exp(np.array([-1j, 1j]) * np.pi / 4)))


# rho ---------------------------------------------------------------------------

RHO_NODES = 24
RHO_LEVELS = 40


@lru_cache(maxsize=None)
def _graded_rule(nodes, levels, ratio=0.5):
    """Gauss-Legendre on [0, 1] with panels graded geometrically toward both ends."""
    xg, wg = roots_legendre(nodes)
    edges = [0.5 * ratio**j for j in range(levels)] + [0.0]
    left = np.array(sorted(set(edges)))  # 0, tiny, ..., 0.5
    bps = np.concatenate([left, 1.0 - left[::-1][1:]])
    xs, ws = [], []
    for a, b in zip(bps[:-1], bps[1:]):
        xs.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wg)
    return np.concatenate(xs), np.concatenate(ws)


def rho_wkb(datum, lam, nodes=RHO_NODES, levels=RHO_LEVELS):
    """rho(lam) = (1/2) int_lam^0 f_L(xi) / sqrt(xi - lam) dxi.

    With xi = lam + s^2 this is int_0^{sqrt(-lam)} f_L(lam + s^2) ds; the
    remaining log singularity (xi -> 0) and the square-root behaviour of f_L
    near u_min are handled by panels graded geometrically toward both ends
    (``levels`` halvings, ``nodes`` Gauss points per panel).
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(~(lam_arr > datum.minimum_value)) or np.any(~(lam_arr < 0)):
        raise DomainError(f"lambda must lie in ({datum.minimum_value}, 0)")
    xs, ws = _graded_rule(nodes, levels)
    out = np.empty_like(lam_arr)
    for i, l in enumerate(lam_arr):
        S = np.sqrt(-l)
        xi = l + (S * xs) ** 2
        xi = np.clip(xi, np.nextafter(datum.minimum_value, 0.0), -np.finfo(float).tiny)
        out[i] = S * np.dot(ws, datum.branch(xi))
    return float(out[0]) if np.ndim(lam) == 0 else out


def wkb_reflection(datum):
    """r0(lam, eps) = i exp(-2 i rho(lam) / eps) on (u_min, 0), 0 for lam <= u_min."""

    def r0(lam, eps):
        if lam <= datum.minimum_value:
            return 0.0
        if lam >= 0:
            raise DomainError("the WKB reflection coefficient is defined for lam < 0")
        return 1j * np.exp(-2j * rho_wkb(datum, lam) / eps)

    return r0


# phi -----------------------------------------------------------------------------

def _minus_pow(w, p):
    """w^p for real w, taking the + boundary value (arg -pi) when w < 0."""
    if w >= 0:
        return w**p
    return abs(w) ** p * np.exp(-1j * np.pi * p)


def phi_eval(datum, cp, lam, x, t, epsrel=1e-12):
    """phi(lam; x, t) from the explicit four-term representation around u_c.

    Real for lam <= u_c; for lam > u_c the + boundary value (from Im lam > 0)
    is returned, which is complex.
    """
    from .hopf import critical_residual
    from .initial_data import fl_derivatives

    lam = float(lam)
    u_min = datum.minimum_value
    if not u_min < lam < 0:
        raise DomainError(f"lambda must lie in ({u_min}, 0)")
    uc = cp.u_c
    F, F1, F2 = critical_residual(datum, x, t, uc)
    w = uc - lam
    val = (-_minus_pow(w, 0.5) * F + (2.0 / 3.0) * _minus_pow(w, 1.5) * F1
           - (4.0 / 15.0) * _minus_pow(w, 2.5) * F2)
    if lam != uc:
        f3 = lambda xi: float(fl_derivatives(datum, xi, 3))  # noqa: E731
        a, b = sorted((uc, lam))
        # (xi - lam)^{5/2}: real on [lam, u_c]; on [u_c, lam] xi - lam <= 0 -> + boundary value
        I, _ = quad(lambda xi: f3(xi) * abs(xi - lam) ** 2.5, a, b, epsabs=0.0,
                    epsrel=epsrel, limit=200)
        if lam < uc:
            integral = -I  # int_{u_c}^{lam} = -int_lam^{u_c}
        else:
            integral = I * np.exp(-2.5j * np.pi)
        val = val - (4.0 / 15.0) * integral
    return val


def phi_exponent(datum, cp, x, t, offsets):
    """Fit phi ~ -c (u_c - lam)^p on lam = u_c - offsets; returns (p, c, residual)."""
    from .stencils import loglog_slope

    offsets = np.asarray(offsets, dtype=float)
    vals = np.array([np.real(phi_eval(datum, cp, cp.u_c - w, x, t)) for w in offsets])
    p, icpt, res = loglog_slope(offsets, vals)
    c = -np.sign(vals[0]) * np.exp(icpt)
    return p, float(c), res, vals


# global parametrix -------------------------------------------------------------

def _quarter(w, side):
    """w^{1/4} principal, or its boundary value on the cut w < 0 (side '+': arg -pi)."""
    if side is None:
        return np.power(complex(w), 0.25)
    w = complex(w)
    if w.imag != 0 or w.real >= 0:
        return np.power(w, 0.25)
    return abs(w) ** 0.25 * np.exp((-1j if side == "+" else 1j) * np.pi / 4)


def global_parametrix(lam, u_c, side=None):
    """P(lam) = (-lam)^{1/4} (u_c - lam)^{-sigma_3/4} [[1, 1], [i, -i]].

    Off the cut [u_c, inf) pass ``side=None``.  On the cut, ``side`` in
    {'+', '-'} returns the exact boundary value from above / below (the
    + side is the upper half plane for the left-to-right orientation).
    """
    lam = complex(lam)
    on_cut = lam.imag == 0 and lam.real >= u_c
    if on_cut and side is None:
        raise DomainError("lambda lies on the cut [u_c, inf); pass side='+' or '-'")
    if side is not None and not on_cut:
        side = None
    a = _quarter(-lam, side)
    b = _quarter(u_c - lam, side)
    E = np.array([[1, 1], [1j, -1j]], dtype=complex)
    return a * np.diag([1.0 / b, b]) @ E


def parametrix_jump_error(lam, u_c, expected, offset=None):
    """|P_+ - P_- J| at a point of the cut, relative to |P|.

    With ``offset`` the boundary values are approximated by lam +- i offset.
    """
    if offset is None:
        Pp = global_parametrix(lam, u_c, "+")
        Pm = global_parametrix(lam, u_c, "-")
    else:
        Pp = global_parametrix(lam + 1j * offset, u_c)
        Pm = global_parametrix(lam - 1j * offset, u_c)
    return float(np.max(np.abs(Pp - Pm @ expected)) / np.max(np.abs(Pp)))
