"""Single-site operators on homogeneous polynomials, their symbols and norms.

Operators on H^(m) (degree-m polynomials in u, v) are kept in the Weyl
algebra as normal-ordered sums of d_u^k d_v^l u^p v^q (derivatives left of
multiplications).  Matrices use the monomial basis e_a = u^a v^(m-a), which is
orthogonal with ||e_a||^2 = a! (m-a)! / (m+1)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import sympy as sp

from .lattice import ORIGIN, boundary_size, build_volume
from .spherecalc import X_AXIS, Y_AXIS, Z_AXIS, DotPoly

X, Y, Z = sp.symbols("x y z", real=True)
TOKENS = ("u", "v", "du", "dv")


class NotHomogeneous(ValueError):
    pass


def _falling(n: int, k: int) -> int:
    return math.prod(range(n - k + 1, n + 1)) if k else 1


def _commute(p: int, k: int):
    """x^p d^k as sum of c d^(k-i) x^(p-i)."""
    return [((-1) ** i * math.comb(p, i) * math.comb(k, i) * math.factorial(i), i)
            for i in range(min(p, k) + 1)]


class PolyOperator:
    """Normal-ordered differential operator acting on H^(m)."""

    def __init__(self, m: int, terms: dict | None = None):
        if m < 0:
            raise ValueError("degree must be non-negative")
        self.m = m
        self.terms = {}
        for key, c in (terms or {}).items():
            k, l, p, q = key
            if p + q != k + l:
                raise NotHomogeneous(f"term {key} changes the degree")
            c = sp.nsimplify(c) if not isinstance(c, sp.Basic) else c
            if c != 0:
                self.terms[key] = c

    @classmethod
    def identity(cls, m: int) -> "PolyOperator":
        return cls(m, {(0, 0, 0, 0): sp.Integer(1)})

    def __add__(self, other: "PolyOperator") -> "PolyOperator":
        self._same(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = sp.expand(out.get(key, 0) + c)
        return PolyOperator(self.m, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "PolyOperator":
        c = sp.sympify(c)
        return PolyOperator(self.m, {key: sp.expand(v * c) for key, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __matmul__(self, other: "PolyOperator") -> "PolyOperator":
        """Composition: apply ``other`` first."""
        self._same(other)
        out: dict = {}
        for (k1, l1, p1, q1), c1 in self.terms.items():
            for (k2, l2, p2, q2), c2 in other.terms.items():
                # d^k1 x^p1 d^k2 x^p2: move x^p1 past d^k2 in each variable
                for cu, iu in _commute(p1, k2):
                    for cv, iv in _commute(q1, l2):
                        key = (k1 + k2 - iu, l1 + l2 - iv, p1 - iu + p2, q1 - iv + q2)
                        out[key] = sp.expand(out.get(key, 0) + c1 * c2 * cu * cv)
        return PolyOperator(self.m, out)

    def _same(self, other):
        if self.m != other.m:
            raise ValueError("operators act on different spaces")

    def apply(self, a: int) -> dict:
        """Image of e_a as {basis index: coefficient}."""
        out: dict = {}
        for (k, l, p, q), c in self.terms.items():
            pu, pv = a + p, self.m - a + q
            if pu < k or pv < l:
                continue
            coef = c * _falling(pu, k) * _falling(pv, l)
            idx = pu - k
            out[idx] = sp.expand(out.get(idx, 0) + coef)
        return {i: c for i, c in out.items() if c != 0}

    @property
    def matrix(self) -> sp.Matrix:
        n = self.m + 1
        M = sp.zeros(n, n)
        for b in range(n):
            for a, c in self.apply(b).items():
                M[a, b] = c
        return M

    @property
    def normal_form(self) -> list[tuple]:
        """(k, l, j, a_klj) with the operator equal to sum a d_u^k d_v^l u^(k+j) v^(l-j)."""
        return sorted((k, l, p - k, c) for (k, l, p, q), c in self.terms.items())

    def __eq__(self, other):
        return isinstance(other, PolyOperator) and self.m == other.m and self.matrix == other.matrix

    def __repr__(self):
        return f"PolyOperator(m={self.m}, normal_form={self.normal_form})"


def normal_order(word, m: int, coeff=1) -> PolyOperator:
    """Normal form of a product of letters u, v, du, dv (leftmost acts last)."""
    tokens = word.split() if isinstance(word, str) else list(word)
    for t in tokens:
        if t not in TOKENS:
            raise ValueError(f"unknown letter {t!r}")
    if tokens.count("u") + tokens.count("v") != tokens.count("du") + tokens.count("dv"):
        raise NotHomogeneous("word does not preserve the degree")
    letters = {"u": (0, 0, 1, 0), "v": (0, 0, 0, 1), "du": (1, 0, 0, 0), "dv": (0, 1, 0, 0)}
    # build without the homogeneity check, which only holds for the full word
    out = {(0, 0, 0, 0): sp.sympify(coeff)}
    for t in tokens:
        k2, l2, p2, q2 = letters[t]
        new: dict = {}
        for (k1, l1, p1, q1), c1 in out.items():
            for cu, iu in _commute(p1, k2):
                for cv, iv in _commute(q1, l2):
                    key = (k1 + k2 - iu, l1 + l2 - iv, p1 - iu + p2, q1 - iv + q2)
                    new[key] = sp.expand(new.get(key, 0) + c1 * cu * cv)
        out = {key: c for key, c in new.items() if c != 0}
    return PolyOperator(m, out)


def pi(generator: str, m: int) -> PolyOperator:
    """Weyl representation of the su(2) generators 3, + and -."""
    if generator == "3":
        return normal_order("v dv", m) - normal_order("u du", m)
    if generator == "-":
        return normal_order("u dv", m)
    if generator == "+":
        return normal_order("v du", m)
    raise ValueError(f"unknown generator {generator!r}")


def coordinate_operator(axis: str, m: int) -> PolyOperator:
    """The operator whose symbol is the given coordinate of Omega."""
    c = sp.Rational(1, m + 2)
    if axis == "z":
        return pi("3", m).scale(-c)
    if axis == "x":
        return (pi("-", m) + pi("+", m)).scale(c)
    if axis == "y":
        return (pi("-", m) - pi("+", m)).scale(-sp.I * c)
    raise ValueError(f"unknown axis {axis!r}")


def from_matrix(M, m: int) -> PolyOperator:
    """Normal-ordered operator with the given matrix."""
    M = sp.Matrix(M)
    n = m + 1
    if M.shape != (n, n):
        raise ValueError("matrix has the wrong shape")
    keys = [(k, m - k, p, m - p) for k in range(n) for p in range(n)]
    cols = [PolyOperator(m, {key: 1}).matrix for key in keys]
    unknowns = sp.symbols(f"c0:{len(keys)}")
    eqs = []
    for i in range(n):
        for j in range(n):
            eqs.append(sum(c[i, j] * s for c, s in zip(cols, unknowns)) - M[i, j])
    sol = sp.solve(eqs, unknowns, dict=True)
    if not sol:
        raise ValueError("matrix not representable")
    sol = sol[0]
    return PolyOperator(m, {key: sol.get(s, 0) for key, s in zip(keys, unknowns)})


# ---------------------------------------------------------------------------
# symbols


def C(m: int, k: int, l: int) -> int:
    return math.factorial(m + k + l + 1) // math.factorial(m + 1)


def balanced_to_xyz(p: int, pb: int, q: int, qb: int) -> sp.Expr:
    """u^p conj(u)^pb v^q conj(v)^qb as a polynomial in the coordinates of Omega."""
    if p + q != pb + qb:
        raise ValueError("monomial is not invariant under the common phase")
    uu, vv = (1 + Z) / 2, (1 - Z) / 2
    r = p - pb
    if r >= 0:
        return sp.expand(uu ** pb * vv ** q * ((X + sp.I * Y) / 2) ** r)
    return sp.expand(uu ** p * vv ** qb * ((X - sp.I * Y) / 2) ** (-r))


@dataclass
class Symbol:
    m: int
    expr: sp.Expr

    def evaluate(self, vec) -> complex:
        return complex(self.expr.subs({X: vec[0], Y: vec[1], Z: vec[2]}))

    @property
    def is_real(self) -> bool:
        return sp.expand(sp.im(self.expr)) == 0

    def parts(self, var: int) -> tuple[DotPoly, DotPoly]:
        """Real and imaginary parts as DotPolys in the sphere variable ``var``."""
        return _to_dotpoly(sp.expand(sp.re(self.expr)), var), _to_dotpoly(sp.expand(sp.im(self.expr)), var)

    def dotpoly(self, var: int) -> DotPoly:
        re, im = self.parts(var)
        if im:
            raise ValueError("symbol is not real")
        return re


def _to_dotpoly(expr: sp.Expr, var: int) -> DotPoly:
    from fractions import Fraction

    poly = sp.Poly(expr, X, Y, Z)
    out = DotPoly()
    axes = (DotPoly.dot(var, X_AXIS), DotPoly.dot(var, Y_AXIS), DotPoly.dot(var, Z_AXIS))
    for (i, j, k), c in poly.terms():
        c = sp.Rational(c)
        out = out + (axes[0] ** i * axes[1] ** j * axes[2] ** k).scale(Fraction(int(c.p), int(c.q)))
    return out


def symbol(op: PolyOperator) -> Symbol:
    """sum C_kl a_klj conj(u^k v^l) u^(k+j) v^(l-j) as a function of Omega."""
    expr = sp.Integer(0)
    for (k, l, p, q), c in op.terms.items():
        expr += C(op.m, k, l) * c * balanced_to_xyz(p, k, q, l)
    return Symbol(op.m, sp.expand(expr))


def basis_norm_sq(m: int, a: int) -> sp.Rational:
    return sp.Rational(math.factorial(a) * math.factorial(m - a), math.factorial(m + 1))


def gram(m: int) -> sp.Matrix:
    return sp.diag(*[basis_norm_sq(m, a) for a in range(m + 1)])


def moment(p: int, q: int) -> sp.Rational:
    """Sphere average of |u|^(2p) |v|^(2q)."""
    return sp.Rational(math.factorial(p) * math.factorial(q), math.factorial(p + q + 1))


def matrix_element(op: PolyOperator, a: int, b: int) -> sp.Expr:
    """<e_a, A e_b> from the matrix."""
    return sp.expand(op.matrix[a, b] * basis_norm_sq(op.m, a))


def symbol_matrix_element(op: PolyOperator, a: int, b: int) -> sp.Expr:
    """Integral of conj(e_a) e_b A(Omega), term by term with sphere moments."""
    m = op.m
    total = sp.Integer(0)
    for (k, l, p, q), c in op.terms.items():
        # conj(u^(a+k) v^(m-a+l)) u^(b+p) v^(m-b+q)
        if a + k == b + p and m - a + l == m - b + q:
            total += C(m, k, l) * c * moment(a + k, m - a + l)
    return sp.expand(total)


def symbol_matrix_element_spherecalc(op: PolyOperator, a: int, b: int, var: int = 0) -> sp.Expr:
    """Same integral through spherecalc, with conj(e_a) e_b rewritten in Omega."""
    from .spherecalc import integrate_out

    m = op.m
    weight = Symbol(m, balanced_to_xyz(b, a, m - b, m - a))
    integrand = sp.expand(weight.expr * symbol(op).expr)
    re, im = Symbol(m, integrand).parts(var)
    r = integrate_out(re, var).constant()
    i = integrate_out(im, var).constant()
    return sp.Rational(r.numerator, r.denominator) + sp.I * sp.Rational(i.numerator, i.denominator)


# ---------------------------------------------------------------------------
# norms


def tensor(*ops: PolyOperator) -> tuple[sp.Matrix, sp.Matrix]:
    """(matrix, Gram matrix) of a tensor product of single-site operators."""
    mats = [o.matrix for o in ops]
    grams = [gram(o.m) for o in ops]
    return reduce(sp.kronecker_product, mats), reduce(sp.kronecker_product, grams)


EXACT_LIMIT = 16


def matrix_norm(M: sp.Matrix, G: sp.Matrix, exact: bool | None = None):
    """Spectral norm of M in the inner product with diagonal Gram matrix G.

    ||M||^2 is the top eigenvalue of G^-1 M^H G M.  Exact (sympy) up to
    ``EXACT_LIMIT`` dimensions, floating point above.
    """
    n = M.shape[0]
    exact = n <= EXACT_LIMIT if exact is None else exact
    T = G.inv() * M.H * G * M
    if exact:
        lam = sp.Symbol("lam")
        poly = sp.Poly(sp.expand((T - lam * sp.eye(n)).det(method="berkowitz")), lam)
        roots = sp.real_roots(poly)
        top = max(roots, key=lambda r: float(r))
        return sp.sqrt(sp.nsimplify(top) if top.is_Rational else top)
    import numpy as np

    g = np.sqrt(np.array([float(G[i, i]) for i in range(n)]))
    Mn = np.array(M.evalf(), dtype=complex)
    H = (g[:, None] * Mn) / g[None, :]
    return float(np.linalg.norm(H, 2))


def operator_norm(op: PolyOperator, exact: bool | None = None):
    return matrix_norm(op.matrix, gram(op.m), exact)


def edge_operator(m1: int, m2: int) -> tuple[sp.Matrix, sp.Matrix]:
    """Matrix and Gram of the two-site operator with symbol Omega_1 . Omega_2."""
    M, G = None, None
    for axis in "xyz":
        Mi, G = tensor(coordinate_operator(axis, m1), coordinate_operator(axis, m2))
        M = Mi if M is None else M + Mi
    return sp.simplify(M), G


def edge_operator_norm(m1: int = 3, m2: int = 3):
    return matrix_norm(*edge_operator(m1, m2))


# ---------------------------------------------------------------------------
# sup norms


def symbol_sup(sym: Symbol) -> tuple[object, str]:
    """sup over the sphere of |A(Omega)|, exact when the symbol depends on z only."""
    expr = sym.expr
    if expr.free_symbols <= {Z}:
        f = sp.Poly(expr, Z) if expr.free_symbols else None
        if f is None:
            return sp.Abs(expr), "exact"
        candidates = [sp.Integer(-1), sp.Integer(1)]
        candidates += [r for r in sp.real_roots(f.diff(Z)) if -1 <= r <= 1]
        return max((sp.Abs(f.as_expr().subs(Z, c)) for c in candidates), key=float), "exact"
    import numpy as np

    n = 40000
    i = np.arange(n) + 0.5
    zz = 1 - 2 * i / n
    rr = np.sqrt(1 - zz * zz)
    th = np.pi * (1 + 5 ** 0.5) * i
    fn = sp.lambdify((X, Y, Z), expr, "numpy")
    vals = np.abs(fn(rr * np.cos(th), rr * np.sin(th), zz))
    return float(np.max(vals)), "float"


def tensor_power_sup(sym: Symbol, n: int):
    """sup of the product symbol over n independent sites."""
    s, method = symbol_sup(sym)
    return s ** n, method


def ground_space_dimension(N: int, d: int) -> int:
    if N < 1:
        raise ValueError("need N >= 1")
    return 2 ** boundary_size(build_volume(ORIGIN, N, d))


def commutator(a: PolyOperator, b: PolyOperator) -> PolyOperator:
    return a @ b - b @ a
