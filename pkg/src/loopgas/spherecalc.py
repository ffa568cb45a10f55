"""Exact integration of dot-product polynomials over unit spheres.

A ``DotPoly`` is a polynomial in formal dot products ``Omega_a . Omega_b`` of
unit vectors.  Variables are integers: non-negative ids are sphere variables
that may be integrated, while -1, -2, -3 are the fixed axes x, y, z (used to
express symbols and fixed boundary vectors).  Because every vector is a unit
vector, ``Omega_a . Omega_a = 1`` is simplified away, and distinct axes are
orthogonal.
"""

from __future__ import annotations

import math
import random
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .lattice import Vertex
from .polymer import LOOP, Polymer

AXES = (-1, -2, -3)
X_AXIS, Y_AXIS, Z_AXIS = AXES

_OFF = 1 << 11


def var_id(v: Vertex) -> int:
    """Injective non-negative integer label for a lattice site."""
    k, l, t, e, p = v
    return ((((k + _OFF) * (2 * _OFF) + (l + _OFF)) * 2 + t) * 3 + e) * 64 + p


def vertex_of(i: int) -> Vertex:
    i, p = divmod(i, 64)
    i, e = divmod(i, 3)
    i, t = divmod(i, 2)
    k, l = divmod(i, 2 * _OFF)
    return Vertex(k - _OFF, l - _OFF, t, e, p)


def _norm_pair(a: int, b: int):
    """Canonical pair, or 1 for a self-pair, or 0 for two different axes."""
    if a == b:
        return 1
    if a < 0 and b < 0:
        return 0
    return (a, b) if a < b else (b, a)


class DotPoly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms: dict = {}
        if terms:
            for mono, c in terms.items():
                if c:
                    self.terms[mono] = Fraction(c)

    @classmethod
    def const(cls, c) -> "DotPoly":
        return cls({(): Fraction(c)})

    @classmethod
    def dot(cls, a: int, b: int, coeff=1) -> "DotPoly":
        pair = _norm_pair(a, b)
        if pair == 0:
            return cls()
        if pair == 1:
            return cls.const(coeff)
        return cls({(pair,): Fraction(coeff)})

    @classmethod
    def from_pairs(cls, pairs: Iterable, coeff=1) -> "DotPoly":
        mono = _monomial(pairs)
        return cls() if mono is None else cls({mono: Fraction(coeff)})

    def copy(self) -> "DotPoly":
        out = DotPoly()
        out.terms = dict(self.terms)
        return out

    @property
    def free_vars(self) -> frozenset:
        return frozenset(x for mono in self.terms for pair in mono for x in pair if x >= 0)

    def is_const(self) -> bool:
        return all(not m for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, DotPoly):
            other = DotPoly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        if not isinstance(other, DotPoly):
            other = DotPoly.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        res = DotPoly()
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = DotPoly()
        res.terms = {m: -c for m, c in self.terms.items()}
        return res

    def __sub__(self, other):
        return self + (-other if isinstance(other, DotPoly) else DotPoly.const(-Fraction(other)))

    def __rsub__(self, other):
        return DotPoly.const(other) - self

    def scale(self, c) -> "DotPoly":
        c = Fraction(c)
        res = DotPoly()
        if c:
            res.terms = {m: v * c for m, v in self.terms.items()}
        return res

    def __mul__(self, other):
        if not isinstance(other, DotPoly):
            return self.scale(other)
        out: dict = defaultdict(Fraction)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out[_merge(m1, m2)] += c1 * c2
        res = DotPoly()
        res.terms = {m: c for m, c in out.items() if c}
        return res

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = DotPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        return f"DotPoly({self.dump()})"

    def dump(self) -> str:
        """Sorted term list, one monomial per entry."""
        parts = []
        for mono, c in sorted(self.terms.items()):
            body = "*".join(f"<{_name(a)},{_name(b)}>" for a, b in mono) or "1"
            parts.append(f"{c} {body}")
        return " + ".join(parts) or "0"

    def integrate_out(self, v: int) -> "DotPoly":
        return integrate_out(self, v)

    def integrate(self, variables: Iterable[int]) -> "DotPoly":
        p = self
        for v in variables:
            p = integrate_out(p, v)
        return p

    def evaluate(self, assignment: Mapping) -> Fraction:
        return evaluate(self, assignment)


def _name(a: int) -> str:
    return "xyz"[-a - 1] if a < 0 else str(a)


def _monomial(pairs: Iterable):
    out = []
    for a, b in pairs:
        p = _norm_pair(a, b)
        if p == 0:
            return None
        if p != 1:
            out.append(p)
    return tuple(sorted(out))


def _merge(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    return tuple(sorted(m1 + m2))


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


@lru_cache(maxsize=None)
def _matchings(n: int) -> tuple:
    """Perfect matchings of range(n) as tuples of index pairs."""
    if n == 0:
        return ((),)
    out = []
    for j in range(1, n):
        rest = [i for i in range(1, n) if i != j]
        for sub in _matchings(n - 2):
            out.append(((0, j),) + tuple((rest[a], rest[b]) for a, b in sub))
    return tuple(out)


def moment_contraction(partners: list) -> DotPoly:
    """Integral over one sphere of prod_i (Omega . b_i) as a polynomial in the b_i."""
    n = len(partners)
    if n % 2:
        return DotPoly()
    weight = Fraction(1, double_factorial(n + 1))
    out: dict = defaultdict(Fraction)
    for match in _matchings(n):
        mono = _monomial((partners[i], partners[j]) for i, j in match)
        if mono is not None:
            out[mono] += weight
    return DotPoly({m: c for m, c in out.items() if c})


def integrate_out(p: DotPoly, v: int) -> DotPoly:
    """Average ``p`` over the unit sphere carried by variable ``v``."""
    if v < 0:
        raise ValueError("fixed axes cannot be integrated")
    out: dict = defaultdict(Fraction)
    cache: dict = {}
    for mono, c in p.terms.items():
        rest = []
        partners = []
        for a, b in mono:
            if a == v:
                partners.append(b)
            elif b == v:
                partners.append(a)
            else:
                rest.append((a, b))
        if len(partners) % 2:
            continue
        if not partners:
            out[mono] += c
            continue
        key = tuple(sorted(partners))
        if key not in cache:
            cache[key] = moment_contraction(list(key))
        rest_t = tuple(rest)
        for m2, c2 in cache[key].terms.items():
            out[_merge(rest_t, m2)] += c * c2
    return DotPoly({m: c for m, c in out.items() if c})


def integrate_product(factors: list, variables: Iterable[int]) -> DotPoly:
    """Integrate a product of DotPolys over ``variables`` by elimination.

    Each variable is integrated as soon as all factors mentioning it have been
    multiplied together, which keeps intermediate polynomials small.
    """
    pending = [f for f in factors]
    for v in variables:
        hit = [f for f in pending if v in f.free_vars]
        pending = [f for f in pending if v not in f.free_vars]
        prod = DotPoly.const(1)
        for f in hit:
            prod = prod * f
        pending.append(integrate_out(prod, v))
    out = DotPoly.const(1)
    for f in pending:
        out = out * f
    return out


class UnassignedVariable(KeyError):
    pass


class NotUnitVector(ValueError):
    pass


AXIS_VECTORS = {
    X_AXIS: (Fraction(1), Fraction(0), Fraction(0)),
    Y_AXIS: (Fraction(0), Fraction(1), Fraction(0)),
    Z_AXIS: (Fraction(0), Fraction(0), Fraction(1)),
}


def _check_unit(vec) -> tuple:
    vec = tuple(Fraction(x) for x in vec)
    if len(vec) != 3 or sum(x * x for x in vec) != 1:
        raise NotUnitVector(f"{vec} is not a rational unit vector")
    return vec


def evaluate(p: DotPoly, assignment: Mapping) -> Fraction:
    vecs = dict(AXIS_VECTORS)
    for k, vec in assignment.items():
        vecs[k] = _check_unit(vec)
    missing = p.free_vars - vecs.keys()
    if missing:
        raise UnassignedVariable(sorted(missing))
    dots: dict = {}
    total = Fraction(0)
    for mono, c in p.terms.items():
        val = c
        for pair in mono:
            if pair not in dots:
                a, b = vecs[pair[0]], vecs[pair[1]]
                dots[pair] = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
            val *= dots[pair]
        total += val
    return total


def substitute(p: DotPoly, assignment: Mapping) -> DotPoly:
    """Fix some sphere variables to rational unit vectors, leaving the rest formal.

    A fixed vector b enters through its coordinates: Omega_a . b becomes
    sum_c b_c (Omega_a . e_c).
    """
    vecs = {k: _check_unit(v) for k, v in assignment.items()}
    out = DotPoly.const(0)
    cache: dict = {}
    for mono, c in p.terms.items():
        term = DotPoly.const(c)
        for a, b in mono:
            key = (a, b)
            if key not in cache:
                cache[key] = _fixed_dot(a, b, vecs)
            term = term * cache[key]
        out = out + term
    return out


def _fixed_dot(a: int, b: int, vecs: dict) -> DotPoly:
    fa, fb = a in vecs, b in vecs
    if fa and fb:
        x, y = vecs[a], vecs[b]
        return DotPoly.const(sum(i * j for i, j in zip(x, y)))
    if not fa and not fb:
        return DotPoly.dot(a, b)
    free, vec = (b, vecs[a]) if fa else (a, vecs[b])
    out = DotPoly()
    for axis, coord in zip(AXES, vec):
        if coord:
            out = out + DotPoly.dot(free, axis, coord)
    return out


def weight(p: Polymer, d: int | None = None) -> DotPoly:
    """Closed-form weight of a polymer."""
    d = p.d if d is None else d
    edges = (d + 1) * p.length
    if p.kind == LOOP:
        return DotPoly.const(Fraction(1, 3) ** (edges - 1))
    a, b = p.endpoints
    return DotPoly.dot(var_id(a), var_id(b), -(Fraction(-1, 3) ** (edges - 1)))


def integral_weight(p: Polymer) -> DotPoly:
    """The defining integral: prod over edges of -(Omega_i . Omega_j), interior sites averaged."""
    factors = [DotPoly.dot(var_id(a), var_id(b), -1) for a, b in p.edges]
    return integrate_product(factors, [var_id(v) for v in p.interior_vertices])


def pythagorean_vector(rng: random.Random, size: int = 6) -> tuple:
    """Random rational point on the unit sphere from a quaternion-type quadruple."""
    while True:
        m, n, p, q = (rng.randint(-size, size) for _ in range(4))
        s = m * m + n * n + p * p + q * q
        if s:
            break
    x = m * m + n * n - p * p - q * q
    y = 2 * (m * q + n * p)
    z = 2 * (n * q - m * p)
    return (Fraction(x, s), Fraction(y, s), Fraction(z, s))


def evaluate_many(p: DotPoly, vectors: Mapping) -> np.ndarray:
    """Evaluate at many points at once; ``vectors`` maps variables to (n, 3) float arrays."""
    vecs = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
    n = next(iter(vecs.values())).shape[0] if vecs else 1
    for axis, unit in AXIS_VECTORS.items():
        vecs[axis] = np.broadcast_to(np.array([float(x) for x in unit]), (n, 3))
    missing = p.free_vars - vecs.keys()
    if missing:
        raise UnassignedVariable(sorted(missing))
    dots: dict = {}
    total = np.zeros(n)
    for mono, c in p.terms.items():
        val = np.full(n, float(c))
        for pair in mono:
            if pair not in dots:
                dots[pair] = np.einsum("ij,ij->i", vecs[pair[0]], vecs[pair[1]])
            val = val * dots[pair]
        total += val
    return total


def random_unit_vectors(rng, n: int):
    """n uniform points on the sphere from a numpy Generator."""
    x = rng.standard_normal((n, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
