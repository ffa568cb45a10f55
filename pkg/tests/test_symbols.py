import random

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

import oracles
from loopgas.symbols import (
    X,
    Y,
    Z,
    NotHomogeneous,
    PolyOperator,
    commutator,
    coordinate_operator,
    edge_operator_norm,
    from_matrix,
    gram,
    ground_space_dimension,
    matrix_element,
    normal_order,
    operator_norm,
    pi,
    symbol,
    symbol_matrix_element,
    symbol_matrix_element_spherecalc,
    symbol_sup,
    tensor_power_sup,
)

@st.composite
def balanced_words(draw):
    """Words with as many derivatives as multiplications, so the degree is preserved."""
    n = draw(st.integers(0, 2))
    ups = [draw(st.sampled_from(["u", "v"])) for _ in range(n)]
    downs = [draw(st.sampled_from(["du", "dv"])) for _ in range(n)]
    word = ups + downs
    return draw(st.permutations(word))


def _random_matrix(rng, m, hermitian=False):
    M = sp.Matrix(m + 1, m + 1, lambda i, j: sp.Rational(rng.randint(-4, 4), rng.randint(1, 3)))
    if hermitian:
        G = gram(m)
        # self-adjoint in the Gram inner product: G M is Hermitian
        H = G * M
        M = G.inv() * (H + H.H) / 2
    return M


def test_commutator_of_derivative_and_multiplication():
    m = 3
    assert normal_order("du u", m) == normal_order("u du", m) + PolyOperator.identity(m)


@settings(max_examples=40)
@given(balanced_words(), balanced_words(), st.integers(1, 3))
def test_composition_is_matrix_product(w1, w2, m):
    a, b = normal_order(" ".join(w1), m), normal_order(" ".join(w2), m)
    assert (a @ b).matrix == a.matrix * b.matrix


@given(st.lists(st.sampled_from(["u", "du"]), min_size=1, max_size=3).filter(lambda w: w.count("u") != w.count("du")))
def test_degree_changing_words_rejected(word):
    with pytest.raises(NotHomogeneous):
        normal_order(" ".join(word), 2)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_from_matrix_roundtrip(seed, m):
    M = _random_matrix(random.Random(seed), m)
    assert from_matrix(M, m).matrix == M


def test_identity_and_coordinate_symbols():
    assert symbol(PolyOperator.identity(2)).expr == 1
    for axis, var in zip("xyz", (X, Y, Z)):
        assert symbol(coordinate_operator(axis, 3)).expr == var


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_su2_relations(m):
    x, y, z = (coordinate_operator(a, m) for a in "xyz")
    c = sp.Rational(2, m + 2) * sp.I
    assert commutator(x, y) == z.scale(c)
    assert commutator(y, z) == x.scale(c)
    assert commutator(z, x) == y.scale(c)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_raising_lowering_from_generators(m):
    assert pi("3", m).matrix.is_diagonal()
    assert not pi("+", m).matrix.is_diagonal()


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.sampled_from([1, 2, 3]))
def test_matrix_elements_against_quadrature(seed, m):
    op = from_matrix(_random_matrix(random.Random(seed), m), m)
    fn = sp.lambdify((X, Y, Z), symbol(op).expr, "numpy")
    for a in range(m + 1):
        for b in range(m + 1):
            exact = complex(matrix_element(op, a, b))
            numeric = oracles.quadrature_matrix_element(lambda x, y, z: fn(x, y, z) + 0 * x, m, a, b, order=16)
            assert abs(exact - numeric) < 1e-10


@pytest.mark.parametrize("m", [1, 2])
def test_two_symbol_integrators_agree(m):
    op = coordinate_operator("x", m) @ coordinate_operator("z", m)
    for a in range(m + 1):
        for b in range(m + 1):
            assert sp.simplify(symbol_matrix_element(op, a, b) - symbol_matrix_element_spherecalc(op, a, b)) == 0


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_norm_bounded_by_symbol_sup(seed, m):
    op = from_matrix(_random_matrix(random.Random(seed), m, hermitian=True), m)
    sup, _ = symbol_sup(symbol(op))
    assert float(operator_norm(op)) <= float(sup) + 1e-9


def test_example_operator():
    op = normal_order("du u", 2, sp.Rational(1, 3))
    sym = symbol(op)
    assert sp.expand(sym.expr - (2 * Z / 3 + sp.Rational(2, 3))) == 0
    assert operator_norm(op) == 1
    assert symbol_sup(sym) == (sp.Rational(4, 3), "exact")
    assert tensor_power_sup(sym, 3)[0] == sp.Rational(64, 27)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_edge_operator_norm(m):
    assert edge_operator_norm(m, m) == sp.Rational(m, m + 2)
    assert operator_norm(coordinate_operator("z", m)) == sp.Rational(m, m + 2)


def test_numeric_norm_matches_exact():
    op = coordinate_operator("x", 3) @ coordinate_operator("y", 3)
    assert abs(float(operator_norm(op, exact=False)) - float(operator_norm(op, exact=True))) < 1e-10


def test_ground_space_dimension():
    assert ground_space_dimension(1, 0) == 64
    assert ground_space_dimension(2, 3) == 2**12
    with pytest.raises(ValueError):
        ground_space_dimension(0, 0)


def test_symbol_is_real_for_self_adjoint():
    assert symbol(coordinate_operator("y", 2)).is_real
    assert not symbol(pi("+", 2)).is_real
    vals = [symbol(coordinate_operator("z", 2)).evaluate(v) for v in np.eye(3)]
    assert vals == [0, 0, 1]
