"""Exact differential polynomials in u, u_x, u_xx, ... with an epsilon grading.

A monomial is ``coeff * eps**eps_power * prod(u_{j x} for j in factors)``;
coefficients are ``fractions.Fraction``.  This is enough to run the
Lenard-Magri recursion for the KdV hierarchy and to compile the resulting
flows into grid evaluators.
"""

import json
from collections import Counter
from fractions import Fraction

import numpy as np

from .errors import NotExactError


def _key(eps_power, factors):
    return (int(eps_power), tuple(sorted(factors)))


class DiffPoly:
    """Immutable sum of monomials keyed by ``(eps_power, sorted factor orders)``."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for (e, f), c in (terms or {}).items():
            k = _key(e, f)
            c = Fraction(c) + clean.get(k, 0)
            if c:
                clean[k] = c
            else:
                clean.pop(k, None)
        self._terms = dict(sorted(clean.items()))

    # construction
    @classmethod
    def u(cls, order=0, coeff=1, eps_power=0):
        return cls({(eps_power, (order,)): coeff})

    @classmethod
    def const(cls, c, eps_power=0):
        return cls({(eps_power, ()): c})

    @property
    def terms(self):
        return dict(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = DiffPoly.const(other) if other else DiffPoly()
        return isinstance(other, DiffPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    # ring operations
    def __add__(self, other):
        if not isinstance(other, DiffPoly):
            other = DiffPoly.const(other)
        t = dict(self._terms)
        for k, c in other._terms.items():
            t[k] = t.get(k, 0) + c
        return DiffPoly(t)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            c = Fraction(other)
            return DiffPoly({k: c * v for k, v in self._terms.items()})
        out = {}
        for (e1, f1), c1 in self._terms.items():
            for (e2, f2), c2 in other._terms.items():
                k = _key(e1 + e2, f1 + f2)
                out[k] = out.get(k, 0) + c1 * c2
        return DiffPoly(out)

    __rmul__ = __mul__

    # structure
    def max_order(self):
        return max((max(f) for (_, f) in self._terms if f), default=-1)

    def has_constant_term(self):
        return any(not f for (_, f) in self._terms)

    def is_graded(self, parity=0):
        """True if eps_power + sum(orders) has the given parity in every monomial."""
        return all((e + sum(f)) % 2 == parity for (e, f) in self._terms)

    def split_linear(self):
        """(linear part, remainder): monomials with exactly one factor vs the rest."""
        lin = {k: c for k, c in self._terms.items() if len(k[1]) == 1}
        rest = {k: c for k, c in self._terms.items() if len(k[1]) != 1}
        return DiffPoly(lin), DiffPoly(rest)

    def evaluate_zero(self):
        """Value at u == 0 (only factor-free monomials survive)."""
        return DiffPoly({k: c for k, c in self._terms.items() if not k[1]})

    # text forms
    def to_text(self):
        if not self._terms:
            return "0"
        parts = []
        for (e, f), c in self._terms.items():
            bits = [str(c)]
            if e:
                bits.append(f"eps^{e}")
            for j, p in sorted(Counter(f).items()):
                name = "u" if j == 0 else f"u_{{{j}x}}"
                bits.append(name if p == 1 else f"{name}^{p}")
            parts.append(" * ".join(bits))
        return " + ".join(parts).replace("+ -", "- ")

    __str__ = to_text

    def __repr__(self):
        return f"DiffPoly({self.to_text()!r})"

    def to_json_terms(self):
        return [{"coeff": str(c), "eps_power": e, "factors": list(f)}
                for (e, f), c in self._terms.items()]

    @classmethod
    def from_json_terms(cls, items):
        return cls({(it["eps_power"], tuple(it["factors"])): Fraction(it["coeff"])
                    for it in items})

    def to_json(self):
        return json.dumps(self.to_json_terms(), sort_keys=True)


U = DiffPoly.u


def total_x_derivative(p):
    """Leibniz rule: raise each factor's order in turn."""
    out = {}
    for (e, f), c in p:
        for i in range(len(f)):
            g = list(f)
            g[i] += 1
            k = _key(e, g)
            out[k] = out.get(k, 0) + c
    return DiffPoly(out)


def dx(p, n=1):
    for _ in range(n):
        p = total_x_derivative(p)
    return p


def lenard_apply(p):
    """(eps^2 d^3 + 4 u d + 2 u_x) p."""
    d1 = total_x_derivative(p)
    return (DiffPoly.const(1, eps_power=2) * dx(d1, 2)
            + 4 * U(0) * d1 + 2 * U(1) * p)


def formal_antiderivative(p):
    """q with dq/dx = p and no constant term.

    Strips, at the highest derivative order n present, each monomial that is
    linear in u_{nx}: ``c u_{nx} u_{(n-1)x}^q S`` has antiderivative candidate
    ``c/(q+1) u_{(n-1)x}^{q+1} S``, and subtracting its derivative leaves only
    terms of order < n.  A top-order monomial that is nonlinear in its
    highest factor (or a factor-free / u-only monomial) certifies that p is
    not exact.
    """
    rest = p
    q = DiffPoly()
    for _ in range(10000):
        if not rest:
            return q
        n = rest.max_order()
        if n <= 0:
            raise NotExactError("remainder has no x-derivative factor", residual=rest)
        cand = None
        for (e, f), c in rest:
            cnt = Counter(f)
            if cnt.get(n, 0) == 1:
                cand = (e, f, c)
                break
        if cand is None:
            raise NotExactError(f"top-order factor u_{{{n}x}} appears nonlinearly",
                                residual=rest)
        e, f, c = cand
        cnt = Counter(f)
        del cnt[n]
        qpow = cnt.pop(n - 1, 0)
        others = list(cnt.elements())
        term = DiffPoly({(e, tuple(others + [n - 1] * (qpow + 1))): c / (qpow + 1)})
        q = q + term
        rest = rest - total_x_derivative(term)
    raise NotExactError("antiderivative did not terminate", residual=rest)


_LENARD_CACHE = {0: U(0)}


def lenard(m):
    """L_m from dL_m/dx = (eps^2 d^3 + 4u d + 2u_x) L_{m-1}, L_0 = u, L_m(0) = 0."""
    if m < 0 or m > 6:
        raise ValueError("lenard(m) supported for 0 <= m <= 6")
    if m not in _LENARD_CACHE:
        _LENARD_CACHE[m] = formal_antiderivative(lenard_apply(lenard(m - 1)))
    return _LENARD_CACHE[m]


def hierarchy_flow(m):
    """R_m with u_t = R_m = (-1)^m d/dx L_m (m = 1 is KdV)."""
    if not 1 <= m <= 6:
        raise ValueError("hierarchy_flow(m) supported for 1 <= m <= 6")
    return (-1) ** m * total_x_derivative(lenard(m))


def compile_evaluator(p):
    """Grid evaluator for ``p``.

    The returned function takes ``(state, derivative=None, eps=None)``.
    ``state`` is either an object with ``samples``/``eps``/``grid`` (the
    grid supplying ``derivative(samples, order)``) or a raw sample array, in
    which case ``derivative`` and ``eps`` are required.  Each derivative
    order is computed once; products are pointwise.
    """
    terms = [(float(c), e, tuple(sorted(Counter(f).items()))) for (e, f), c in p]
    orders = sorted({j for _, _, fs in terms for j, _ in fs})

    def evaluate(state, derivative=None, eps=None):
        if hasattr(state, "samples"):
            u = state.samples
            derivative = derivative or state.grid.derivative
            eps = state.eps if eps is None else eps
        else:
            u = np.asarray(state)
            if derivative is None or eps is None:
                raise ValueError("raw samples need an explicit derivative provider and eps")
        cache = {j: (u if j == 0 else derivative(u, j)) for j in orders}
        out = np.zeros_like(u)
        for c, e, fs in terms:
            term = c * eps**e
            for j, pw in fs:
                term = term * cache[j] ** pw
            out = out + term
        return out

    evaluate.poly = p
    return evaluate
