import networkx as nx
import pytest
from hypothesis import given, strategies as st

from loopgas.lattice import (
    ORIGIN,
    A,
    B,
    DualSite,
    PatchTooSmall,
    ball_size,
    boundary_size,
    build_gap_volume,
    build_volume,
    chain,
    degree,
    distance_relation,
    dual_ball,
    dual_distance,
    graph_distance,
    neighbors,
    parse_vertex,
    separating_partition,
    volume_size,
)

coords = st.integers(-20, 20)
sites = st.builds(DualSite, coords, coords)


def _as_nx(region):
    g = nx.Graph()
    g.add_nodes_from(region.vertices)
    g.add_edges_from(region.edges)
    return g


@given(sites, sites)
def test_dual_distance_is_symmetric(a, b):
    assert dual_distance(a, b) == dual_distance(b, a)


@given(sites, sites, sites)
def test_dual_distance_triangle_inequality(a, b, c):
    assert dual_distance(a, c) <= dual_distance(a, b) + dual_distance(b, c)


@given(sites)
def test_dual_distance_unit_steps(a):
    for step in ((1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)):
        assert dual_distance(a, a + step) == 1
    assert dual_distance(a, a + (1, -1)) == 2


def test_dual_distance_matches_triangular_lattice_bfs():
    g = nx.Graph()
    pts = dual_ball(ORIGIN, 8)
    g.add_nodes_from(pts)
    for p in pts:
        for step in ((1, 0), (1, 1), (0, 1)):
            q = p + step
            if q in g:
                g.add_edge(p, q)
    lengths = nx.single_source_shortest_path_length(g, ORIGIN)
    for p in dual_ball(ORIGIN, 4):
        assert lengths[p] == dual_distance(ORIGIN, p)


@pytest.mark.parametrize("r", range(6))
def test_ball_size(r):
    assert len(dual_ball(ORIGIN, r)) == ball_size(r) == 1 + 3 * r * (r + 1)


@pytest.mark.parametrize("n,d", [(1, 0), (2, 0), (3, 1), (4, 2), (2, 4)])
def test_volume_counts(n, d):
    region = build_volume(ORIGIN, n, d)
    assert len(region.vertices) == volume_size(n, d)
    assert boundary_size(region) == 6 * n


def test_single_hexagon_is_a_cycle():
    g = _as_nx(build_volume(ORIGIN, 1, 0))
    assert g.number_of_nodes() == 6 and g.number_of_edges() == 6
    assert all(v == 2 for _, v in g.degree())
    assert len(nx.cycle_basis(g)) == 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_volume_is_planar_honeycomb_patch(n):
    g = _as_nx(build_volume(ORIGIN, n, 0))
    assert nx.is_connected(g)
    assert max(d for _, d in g.degree()) == 3
    # Euler: faces = E - V + 2 counts the hexagons plus the outer face
    assert g.number_of_edges() - g.number_of_nodes() + 1 == ball_size(n - 1)
    assert nx.is_bipartite(g)


@pytest.mark.parametrize("d", [0, 1, 2, 3])
def test_decorated_degrees(d):
    region = build_volume(ORIGIN, 2, d)
    for v in region.vertices:
        assert degree(v, d) == (3 if v.pos == 0 else 2)
        assert len(neighbors(v, d)) == degree(v, d)


@pytest.mark.parametrize("d", [0, 1, 3])
def test_chain_has_d_interior_sites(d):
    path = chain(A(0, 0), B(0, 0), d)
    assert path[0] == A(0, 0) and path[-1] == B(0, 0)
    assert len(path) == d + 2


def test_interior_of_single_hexagon_is_empty():
    assert not build_volume(ORIGIN, 1, 0).interior_region.vertices


def test_parse_vertex_roundtrip():
    for v in (A(0, 0), B(-2, 3), *chain(A(1, 1), B(1, 1), 2)):
        assert parse_vertex(str(v)) == v


def test_graph_distance_matches_networkx():
    window = build_volume(ORIGIN, 6, 1)
    g = _as_nx(window)
    for y in (B(0, 0), A(2, 1), B(-1, 2)):
        assert graph_distance(A(0, 0), y, 1) == nx.shortest_path_length(g, A(0, 0), y)


def test_graph_distance_rejects_small_window():
    with pytest.raises(PatchTooSmall):
        graph_distance(A(0, 0), A(5, 0), 0, window=build_volume(ORIGIN, 2, 0))


@pytest.mark.parametrize("y", [A(3, 1), B(-2, 2), A(-4, -1)])
def test_distance_relation_lower_bound(y):
    for d in (0, 1, 2):
        assert distance_relation(A(0, 0), y, d).lower_ok


@pytest.mark.parametrize("d", [2, 3])
def test_distance_relation_upper_bound_fails_between_decorations(d):
    # two decoration sites on nearby parallel edges: closer in the lattice than 2(d+1) dual steps
    x, y = parse_vertex("A(-2,-2)>1:1"), parse_vertex("A(-1,-2)>1:2")
    rel = distance_relation(x, y, d)
    assert rel.lower_ok and not rel.upper_ok
    assert rel.lattice_distance == 2 * d + 1 and rel.dual_min == 1


def test_separating_partition_covers_window():
    part = separating_partition(2, 12)
    members = [s for group in part.parts.values() for s in group]
    assert sorted(members) == sorted(dual_ball(ORIGIN, 12))
    for key, group in part.parts.items():
        assert all(part.part_of(s) == key for s in group)


def test_gap_volume_contains_volume():
    vol = build_volume(ORIGIN, 2, 0)
    gap = build_gap_volume(ORIGIN, 2, 0)
    assert vol.vertices <= gap.vertices


@pytest.mark.parametrize("bad", [(0, 0), (1, -1)])
def test_build_volume_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        build_volume(ORIGIN, *bad)
