import pytest
from hypothesis import given, strategies as st

import oracles
from loopgas.lattice import ORIGIN, A, B, build_volume, corners
from loopgas.polymer import (
    BULK,
    INTERIOR,
    LOOP,
    WALK,
    MalformedPolymer,
    Polymer,
    connectivity,
    decorate,
    enumerate_family,
    family_terminals,
    lemma_bound,
    local_polymers,
    make_loop,
    make_walk,
    undecorate,
)

HEX = list(corners(ORIGIN))


@pytest.fixture(scope="module")
def honeycomb():
    return oracles.hex_window(7)


@pytest.mark.parametrize("k", range(1, 7))
def test_local_counts_match_networkx(honeycomb, k):
    centre = (8, 16)
    expected = oracles.simple_paths_through(honeycomb, centre, k)
    assert len(local_polymers(A(0, 0), k)) == expected
    assert len(local_polymers(B(0, 0), k)) == expected


@pytest.mark.parametrize("k", range(1, 9))
def test_lemma_bound_dominates_lattice_counts(k):
    assert len(local_polymers(A(0, 0), k)) <= lemma_bound(k)


@given(st.integers(0, 5), st.booleans())
def test_loop_canonical_form_ignores_rotation_and_direction(shift, flip):
    path = HEX[shift:] + HEX[:shift]
    if flip:
        path = path[::-1]
    assert make_loop(path) == make_loop(HEX)


def test_walk_canonical_form_ignores_direction():
    assert make_walk(HEX[:4]) == make_walk(HEX[:4][::-1])


@pytest.mark.parametrize("d", [0, 1, 2, 4])
def test_decorate_roundtrip(d):
    for p in (make_loop(HEX), make_walk(HEX[:3])):
        q = decorate(p, d)
        assert len(q.edges) == (d + 1) * len(p.edges)
        assert q.length == p.length
        assert undecorate(q) == p


def test_undecorate_rejects_walk_ending_on_decoration():
    q = decorate(make_walk(HEX[:3]), 2)
    broken = Polymer(WALK, q.path[:-1], 2)
    with pytest.raises(MalformedPolymer):
        undecorate(broken)


def test_decorate_requires_plain_polymer():
    with pytest.raises(MalformedPolymer):
        decorate(decorate(make_loop(HEX), 1), 1)


def test_connectivity_is_site_sharing():
    p = make_walk(HEX[:3])
    assert connectivity(p, make_walk(HEX[2:5]))
    assert not connectivity(p, make_walk(HEX[3:6]))


def test_loop_has_no_endpoints():
    p = make_loop(HEX)
    assert p.kind == LOOP and p.endpoints == () and p.length == 6


@pytest.mark.parametrize("N,K,d,variant", [(2, 0, 0, BULK), (2, 1, 0, INTERIOR), (3, 1, 1, INTERIOR), (2, 1, 0, BULK)])
def test_family_members_lie_in_annulus(N, K, d, variant):
    fam = enumerate_family(N, K, d, variant, max_length=6)
    outer = build_volume(ORIGIN, N, d)
    inner_edges = build_volume(ORIGIN, K, d).edges if K else frozenset()
    ends = family_terminals(N, K, d, variant)
    for p in fam:
        assert set(p.edges) <= outer.edges
        assert not set(p.edges) & inner_edges
        assert p.length <= 6
        assert all(e in ends for e in p.endpoints)


def test_family_has_no_duplicates():
    fam = enumerate_family(2, 1, 0, INTERIOR)
    assert len(set(fam)) == len(fam)


def test_bulk_family_without_inner_volume_has_only_loops():
    assert all(p.kind == LOOP for p in enumerate_family(2, 0, 0, BULK))


def test_single_hexagon_family():
    fam = enumerate_family(1, 0, 0, BULK)
    assert [p.length for p in fam] == [6]


def test_family_rejects_bad_volumes():
    with pytest.raises(ValueError):
        enumerate_family(1, 1, 0)
    with pytest.raises(ValueError):
        enumerate_family(1, 0, 0, INTERIOR)


def test_family_jsonl_lines():
    fam = enumerate_family(2, 1, 0, INTERIOR, max_length=2)
    assert len(fam.to_jsonl().splitlines()) == len(fam)
