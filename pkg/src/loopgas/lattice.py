"""Decorated hexagonal lattice, its triangular dual, and finite volumes.

Coordinates
-----------
Dual sites (hexagon centres) are integer pairs ``(k, l)`` standing for
``k*v_plus + l*v_minus`` with ``v_plus = (sqrt(3)/2, 1/2)`` and
``v_minus = (-sqrt(3)/2, 1/2)``.  The six dual neighbours of ``(0, 0)`` are
``(+-1, 0)``, ``(0, +-1)`` and ``+-(1, 1)``.

Every degree-3 site is the meeting point of three mutually adjacent
hexagons, i.e. a triangle of the dual lattice.  Triangles come in two
orientations, so a degree-3 site is stored once as ``(k, l, t)``:

* ``t = 0`` ("A"): hexagons ``(k,l), (k+1,l), (k+1,l+1)``
* ``t = 1`` ("B"): hexagons ``(k,l), (k+1,l+1), (k,l+1)``

Every edge joins an A site to a B site.  The edge leaving ``A(k,l)`` in
direction ``e`` ends at ``B(k,l-1)``, ``B(k,l)``, ``B(k+1,l)`` for
``e = 0, 1, 2``.  Decoration sites on that edge are ``(k, l, 0, e, p)`` with
``p = 1..d`` counted from the A end.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple


class DualSite(NamedTuple):
    k: int
    l: int

    def __add__(self, other):  # type: ignore[override]
        return DualSite(self.k + other[0], self.l + other[1])

    def position(self) -> tuple[float, float]:
        return ((self.k - self.l) * math.sqrt(3) / 2, (self.k + self.l) / 2)


ORIGIN = DualSite(0, 0)
DUAL_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1))


class Vertex(NamedTuple):
    """A site of the decorated lattice; ``pos == 0`` marks a degree-3 site."""

    k: int
    l: int
    t: int
    edge: int = 0
    pos: int = 0

    @property
    def decoration(self) -> int:
        return self.pos

    @property
    def is_spin32(self) -> bool:
        return self.pos == 0

    def __str__(self) -> str:
        head = f"{'AB'[self.t]}({self.k},{self.l})"
        return head if self.pos == 0 else f"{head}>{self.edge}:{self.pos}"


def A(k: int, l: int) -> Vertex:
    return Vertex(k, l, 0)


def B(k: int, l: int) -> Vertex:
    return Vertex(k, l, 1)


def parse_vertex(text: str) -> Vertex:
    head, _, tail = text.partition(">")
    t = "AB".index(head[0])
    k, l = (int(s) for s in head[2:-1].split(","))
    if not tail:
        return Vertex(k, l, t)
    e, p = (int(s) for s in tail.split(":"))
    return Vertex(k, l, t, e, p)


_B_END = ((0, -1), (0, 0), (1, 0))


def edge_far_end(a: Vertex, e: int) -> Vertex:
    dk, dl = _B_END[e]
    return B(a.k + dk, a.l + dl)


def b_edges(b: Vertex) -> tuple[tuple[Vertex, int], ...]:
    """The three (A site, direction) pairs whose edge ends at the B site ``b``."""
    return ((A(b.k, b.l), 1), (A(b.k - 1, b.l), 2), (A(b.k, b.l + 1), 0))


def spin32_neighbors(v: Vertex) -> tuple[Vertex, ...]:
    if v.pos:
        raise ValueError(f"{v} is not a degree-3 site")
    if v.t == 0:
        return tuple(edge_far_end(v, e) for e in range(3))
    return tuple(a for a, _ in b_edges(v))


def edge_key(v: Vertex, w: Vertex) -> tuple[Vertex, int]:
    """(A site, direction) naming the undecorated edge between spin-3/2 sites v, w."""
    a, b = (v, w) if v.t == 0 else (w, v)
    for e in range(3):
        if edge_far_end(a, e) == b:
            return a, e
    raise ValueError(f"{v} and {w} are not adjacent")


def chain(v: Vertex, w: Vertex, d: int) -> list[Vertex]:
    """Sites from ``v`` to ``w`` along their decorated edge, endpoints included."""
    a, e = edge_key(v, w)
    inner = [Vertex(a.k, a.l, 0, e, p) for p in range(1, d + 1)]
    path = [a, *inner, edge_far_end(a, e)]
    return path if v == a else path[::-1]


def neighbors(v: Vertex, d: int) -> tuple[Vertex, ...]:
    """Neighbours of ``v`` in the d-decorated lattice."""
    if v.pos > d:
        raise ValueError(f"{v} does not exist for d={d}")
    if v.pos == 0:
        if d == 0:
            return spin32_neighbors(v)
        if v.t == 0:
            return tuple(Vertex(v.k, v.l, 0, e, 1) for e in range(3))
        return tuple(Vertex(a.k, a.l, 0, e, d) for a, e in b_edges(v))
    before = A(v.k, v.l) if v.pos == 1 else v._replace(pos=v.pos - 1)
    after = edge_far_end(A(v.k, v.l), v.edge) if v.pos == d else v._replace(pos=v.pos + 1)
    return (before, after)


def degree(v: Vertex, d: int = 0) -> int:
    return len(neighbors(v, d)) if v.pos <= d else 0


def corners(site: DualSite) -> tuple[Vertex, ...]:
    """Six corners of a hexagon in cyclic order."""
    k, l = site
    return (B(k, l - 1), A(k, l), B(k, l), A(k - 1, l), B(k - 1, l - 1), A(k - 1, l - 1))


def plaquettes_of(v: Vertex) -> tuple[DualSite, ...]:
    """Dual sites whose hexagon contains ``v`` (three, or two for decoration sites)."""
    k, l = v.k, v.l
    if v.pos == 0:
        if v.t == 0:
            return (DualSite(k, l), DualSite(k + 1, l), DualSite(k + 1, l + 1))
        return (DualSite(k, l), DualSite(k + 1, l + 1), DualSite(k, l + 1))
    return {
        0: (DualSite(k, l), DualSite(k + 1, l)),
        1: (DualSite(k, l), DualSite(k + 1, l + 1)),
        2: (DualSite(k + 1, l), DualSite(k + 1, l + 1)),
    }[v.edge]


def vertex_position(v: Vertex, d: int = 0) -> tuple[float, float]:
    """Planar embedding (hexagon centres at unit spacing)."""
    if v.pos == 0:
        pts = [p.position() for p in plaquettes_of(v)]
        return (sum(x for x, _ in pts) / 3, sum(y for _, y in pts) / 3)
    a = vertex_position(A(v.k, v.l))
    b = vertex_position(edge_far_end(A(v.k, v.l), v.edge))
    s = v.pos / (d + 1) if d else 0.5
    return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))


def dual_distance(a: DualSite, b: DualSite) -> int:
    """Graph distance on the triangular dual lattice."""
    dk, dl = b[0] - a[0], b[1] - a[1]
    if dk * dl >= 0:
        return max(abs(dk), abs(dl))
    return abs(dk) + abs(dl)


def dual_ball(center: DualSite, radius: int) -> list[DualSite]:
    if radius < 0:
        return []
    c = DualSite(*center)
    return [
        c + (dk, dl)
        for dk in range(-radius, radius + 1)
        for dl in range(-radius, radius + 1)
        if dual_distance(ORIGIN, DualSite(dk, dl)) <= radius
    ]


def volume_size(n: int, d: int) -> int:
    return 3 * (3 * d + 2) * n * n - 3 * d * n


def ball_size(radius: int) -> int:
    return 1 + 3 * radius * (radius + 1)


Edge = tuple[Vertex, Vertex]


def _pair(v: Vertex, w: Vertex) -> Edge:
    return (v, w) if v < w else (w, v)


@dataclass(frozen=True)
class Region:
    """Finite subgraph of the d-decorated lattice."""

    d: int
    vertices: frozenset
    edges: frozenset
    n: int | None = field(default=None, compare=False)
    center: DualSite | None = field(default=None, compare=False)

    @cached_property
    def adjacency(self) -> dict[Vertex, list[Vertex]]:
        adj: dict[Vertex, list[Vertex]] = {v: [] for v in self.vertices}
        for v, w in self.edges:
            adj[v].append(w)
            adj[w].append(v)
        return adj

    def degree(self, v: Vertex) -> int:
        return len(self.adjacency[v])

    @cached_property
    def boundary(self) -> frozenset:
        return frozenset(
            v for v in self.vertices
            if any(_pair(v, w) not in self.edges for w in neighbors(v, self.d))
        )

    @cached_property
    def interior_region(self) -> "Region":
        bd = self.boundary
        return Region(
            self.d,
            self.vertices - bd,
            frozenset(e for e in self.edges if e[0] not in bd and e[1] not in bd),
        )

    def union(self, other: "Region") -> "Region":
        if other.d != self.d:
            raise ValueError("cannot join regions of different decoration")
        return Region(self.d, self.vertices | other.vertices, self.edges | other.edges)

    def sorted_vertices(self) -> list[Vertex]:
        return sorted(self.vertices)

    def to_json(self) -> str:
        doc = {
            "d": self.d,
            "n": self.n,
            "center": list(self.center) if self.center is not None else None,
            "vertices": sorted(str(v) for v in self.vertices),
            "edges": sorted([str(v), str(w)] for v, w in self.edges),
            "boundary": sorted(str(v) for v in self.boundary),
        }
        return json.dumps(doc, sort_keys=True)


def hexagon(site: DualSite, d: int) -> tuple[set, set]:
    cs = corners(site)
    verts: set = set()
    edges: set = set()
    for i in range(6):
        path = chain(cs[i], cs[(i + 1) % 6], d)
        verts.update(path)
        edges.update(_pair(a, b) for a, b in zip(path, path[1:]))
    return verts, edges


def region_from_plaquettes(sites: Iterable[DualSite], d: int, **meta) -> Region:
    verts: set = set()
    edges: set = set()
    for s in sites:
        vs, es = hexagon(DualSite(*s), d)
        verts |= vs
        edges |= es
    return Region(d, frozenset(verts), frozenset(edges), **meta)


def build_volume(center: DualSite = ORIGIN, n: int = 1, d: int = 0) -> Region:
    """Union of the decorated hexagons within dual distance n-1 of ``center``."""
    if n < 1 or d < 0:
        raise ValueError("need n >= 1 and d >= 0")
    center = DualSite(*center)
    return region_from_plaquettes(dual_ball(center, n - 1), d, n=n, center=center)


def boundary_size(region: Region) -> int:
    return len(region.boundary)


def star(v: Vertex, d: int) -> tuple[set, set]:
    """A spin-3/2 site with its three decoration chains (3d+1 sites)."""
    verts = {v}
    edges = set()
    for w in spin32_neighbors(v):
        path = chain(v, w, d)[:-1]
        verts.update(path)
        edges.update(_pair(a, b) for a, b in zip(path, path[1:]))
    return verts, edges


def build_gap_volume(center: DualSite = ORIGIN, n: int = 1, d: int = 0) -> Region:
    """Union of the stars of all spin-3/2 sites of the undecorated volume.

    The region carries every lattice edge between two of its sites, so for
    d = 0 it coincides with the undecorated volume.
    """
    base = build_volume(center, n, 0)
    verts: set = set()
    for v in base.vertices:
        verts |= star(v, d)[0]
    edges = {
        _pair(v, w) for v in verts for w in neighbors(v, d) if w in verts
    }
    return Region(d, frozenset(verts), frozenset(edges), n=n, center=DualSite(*center))


class PatchTooSmall(RuntimeError):
    pass


def _bfs(adj, source) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def graph_distance(x: Vertex, y: Vertex, d: int, window: Region | None = None) -> int:
    """Distance on the infinite decorated lattice, certified from a finite window.

    A path leaving the window must cross its boundary twice, so the window
    answer is exact when it does not exceed the two boundary distances.
    """
    if window is None:
        cx = plaquettes_of(x)[0]
        cy = plaquettes_of(y)[0]
        radius = dual_distance(cx, cy) + 3
        mid = DualSite(cx.k, cx.l)
        window = build_volume(mid, radius + 1, d)
    if x not in window.vertices or y not in window.vertices:
        raise PatchTooSmall("endpoints outside the window")
    dx = _bfs(window.adjacency, x)
    dy = _bfs(window.adjacency, y)
    if y not in dx:
        raise PatchTooSmall("window disconnects the endpoints")
    escape = min(dx[b] for b in window.boundary) + min(dy[b] for b in window.boundary)
    if dx[y] > escape:
        raise PatchTooSmall("a shorter path may leave the window")
    return dx[y]


@dataclass(frozen=True)
class DistanceRelation:
    lattice_distance: int
    dual_min: int
    dual_max: int
    lower_ok: bool
    upper_ok: bool

    @property
    def holds(self) -> bool:
        return self.lower_ok and self.upper_ok


def distance_relation(x: Vertex, y: Vertex, d: int, window: Region | None = None) -> DistanceRelation:
    dist = graph_distance(x, y, d, window)
    duals = [dual_distance(a, b) for a in plaquettes_of(x) for b in plaquettes_of(y)]
    scale = 2 * (d + 1)
    # compare 2(d+1)*D~ against D_d - 3(d+1) and D_d in integers
    lower_ok = all(scale * t >= dist - 3 * (d + 1) for t in duals)
    upper_ok = scale * min(duals) <= dist
    return DistanceRelation(dist, min(duals), max(duals), lower_ok, upper_ok)


def distance_relation_check(x: Vertex, y: Vertex, d: int, window: Region | None = None) -> bool:
    """Lower bound for every plaquette choice, upper bound for the closest choice."""
    return distance_relation(x, y, d, window).holds


@dataclass(frozen=True)
class Partition:
    n: int
    index_set: tuple[DualSite, ...]
    parts: dict

    def part_of(self, site: DualSite) -> DualSite:
        m = 2 * self.n
        return DualSite(site[0] % m, site[1] % m)


def separating_partition(n: int, window_radius: int, center: DualSite = ORIGIN) -> Partition:
    """Split the dual window into 4n^2 classes of sites spaced by 2n lattice steps."""
    if n < 1:
        raise ValueError("n must be positive")
    m = 2 * n
    index = tuple(DualSite(k, l) for k in range(m) for l in range(m))
    parts: dict = {i: [] for i in index}
    for s in dual_ball(center, window_radius):
        parts[DualSite(s.k % m, s.l % m)].append(s)
    return Partition(n, index, {i: tuple(sorted(v)) for i, v in parts.items()})


def partition_disjoint(partition: Partition, d: int) -> bool:
    """Gap volumes of distinct sites within one part share no vertex."""
    cache: dict = {}
    for members in partition.parts.values():
        seen: set = set()
        for s in members:
            if s not in cache:
                cache[s] = build_gap_volume(s, partition.n, d).vertices
            if seen & cache[s]:
                return False
            seen |= cache[s]
    return True
