"""Loops and self-avoiding walks on the decorated lattice, and their families."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .lattice import (
    ORIGIN,
    DualSite,
    Region,
    Vertex,
    build_volume,
    chain,
    spin32_neighbors,
)


class MalformedPolymer(ValueError):
    pass


class ResourceLimit(RuntimeError):
    def __init__(self, message: str, progress: dict):
        super().__init__(message)
        self.progress = progress


LOOP, WALK = "loop", "walk"
BULK, INTERIOR = "bulk", "interior"


def _canonical(path: tuple, kind: str) -> tuple:
    if kind == WALK:
        rev = path[::-1]
        return min(path, rev)
    i = path.index(min(path))
    fwd = path[i:] + path[:i]
    bwd = (fwd[0],) + fwd[1:][::-1]
    return min(fwd, bwd)


@dataclass(frozen=True, order=True)
class Polymer:
    """A loop (closed vertex sequence, first vertex not repeated) or a walk."""

    kind: str
    path: tuple
    d: int = 0

    def __post_init__(self):
        object.__setattr__(self, "path", _canonical(tuple(self.path), self.kind))

    @cached_property
    def edges(self) -> tuple:
        p = self.path
        pairs = list(zip(p, p[1:]))
        if self.kind == LOOP:
            pairs.append((p[-1], p[0]))
        return tuple((a, b) if a < b else (b, a) for a, b in pairs)

    @property
    def endpoints(self) -> tuple:
        return () if self.kind == LOOP else (self.path[0], self.path[-1])

    @property
    def length(self) -> int:
        return len(self.edges) // (self.d + 1)

    @cached_property
    def vertex_set(self) -> frozenset:
        return frozenset(self.path)

    @property
    def interior_vertices(self) -> tuple:
        return self.path if self.kind == LOOP else self.path[1:-1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "edges": [[str(a), str(b)] for a, b in self.edges],
            "len": self.length,
        }


def make_loop(path, d: int = 0) -> Polymer:
    return Polymer(LOOP, tuple(path), d)


def make_walk(path, d: int = 0) -> Polymer:
    return Polymer(WALK, tuple(path), d)


def decorate(p: Polymer, d: int) -> Polymer:
    """Insert d decoration sites on every edge of an undecorated polymer."""
    if p.d != 0:
        raise MalformedPolymer("decorate expects an undecorated polymer")
    if d == 0:
        return p
    seq = list(p.path) + ([p.path[0]] if p.kind == LOOP else [])
    out = [seq[0]]
    for a, b in zip(seq, seq[1:]):
        out.extend(chain(a, b, d)[1:])
    if p.kind == LOOP:
        out.pop()
    return Polymer(p.kind, tuple(out), d)


def undecorate(p: Polymer) -> Polymer:
    """Contract each decorated chain of ``p`` back to a single edge."""
    core = tuple(v for v in p.path if v.pos == 0)
    if p.kind == WALK and (p.path[0].pos or p.path[-1].pos):
        raise MalformedPolymer("walk endpoints must be degree-3 sites")
    if any(v.pos > p.d for v in p.path):
        raise MalformedPolymer("decoration index exceeds d")
    if len(p.edges) % (p.d + 1):
        raise MalformedPolymer("edge count is not a multiple of d+1")
    q = Polymer(p.kind, core, 0)
    if decorate(q, p.d) != p:
        raise MalformedPolymer("not the image of an undecorated polymer")
    return q


def connectivity(p: Polymer, q: Polymer) -> bool:
    """Two polymers are connected exactly when they share a site."""
    return not p.vertex_set.isdisjoint(q.vertex_set)


class IndexedGraph:
    """Max-degree-3 graph with integer vertex labels, for the DFS kernels."""

    def __init__(self, region: Region, allowed_edges=None):
        self.region = region
        self.order = sorted(region.vertices)
        self.index = {v: i for i, v in enumerate(self.order)}
        allowed = region.edges if allowed_edges is None else allowed_edges
        nv = len(self.order)
        self.adj = np.full((nv, 3), -1, dtype=np.int64)
        self.ok = np.zeros((nv, 3), dtype=np.bool_)
        for i, v in enumerate(self.order):
            for j, w in enumerate(sorted(region.adjacency[v])):
                self.adj[i, j] = self.index[w]
                self.ok[i, j] = ((v, w) if v < w else (w, v)) in allowed

    def flags(self, vertices) -> np.ndarray:
        out = np.zeros(len(self.order), dtype=np.bool_)
        for v in vertices:
            if v in self.index:
                out[self.index[v]] = True
        return out

    def paths(self, starts, ends, loops: bool, max_len: int, budget: int) -> list[tuple]:
        rows, count, nodes, overflow = _kernels.path_dfs(
            self.adj, self.ok, self.flags(starts), self.flags(ends),
            loops, max_len, budget,
        )
        if overflow:
            raise ResourceLimit(
                f"path enumeration exceeded {budget} extensions",
                {"found": int(count), "nodes": int(nodes)},
            )
        return [tuple(self.order[i] for i in row if i >= 0) for row in rows]


@dataclass(frozen=True)
class PolymerFamily:
    N: int
    K: int
    d: int
    variant: str
    members: tuple
    max_length: int | None = None

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @cached_property
    def outer(self) -> Region:
        return build_volume(ORIGIN, self.N, self.d)

    @cached_property
    def inner(self) -> Region | None:
        return build_volume(ORIGIN, self.K, self.d) if self.K else None

    def terminals(self) -> frozenset:
        """Sites allowed as walk endpoints."""
        return family_terminals(self.N, self.K, self.d, self.variant)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(p.to_dict(), sort_keys=True) for p in self.members)


def family_terminals(N: int, K: int, d: int, variant: str) -> frozenset:
    out = set()
    if K:
        out |= build_volume(ORIGIN, K, d).boundary
    if variant == INTERIOR:
        out |= build_volume(ORIGIN, N, d).boundary
    return frozenset(out)


def enumerate_family(
    N: int,
    K: int,
    d: int = 0,
    variant: str = BULK,
    max_length: int | None = None,
    budget: int | None = None,
) -> PolymerFamily:
    """All polymers of the bulk or interior family, longest at most ``max_length``.

    Enumeration runs on the undecorated lattice and the results are decorated
    afterwards; lengths are undecorated edge counts throughout.
    """
    if not 0 <= K < N:
        raise ValueError("need 0 <= K < N")
    if variant not in (BULK, INTERIOR):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == INTERIOR and N < 2:
        raise ValueError("interior families need N >= 2")
    budget = _kernels.node_budget() if budget is None else budget
    outer = build_volume(ORIGIN, N, 0)
    inner_edges = build_volume(ORIGIN, K, 0).edges if K else frozenset()
    inner_verts = build_volume(ORIGIN, K, 0).vertices if K else frozenset()
    graph = IndexedGraph(outer, outer.edges - inner_edges)
    cap = len(outer.edges) if max_length is None else min(max_length, len(outer.edges))

    loop_graph = graph
    if K:
        keep = frozenset(e for e in outer.edges if e[0] not in inner_verts and e[1] not in inner_verts)
        loop_graph = IndexedGraph(outer, keep)
    members = [make_loop(p) for p in loop_graph.paths((), (), True, cap, budget)]
    ends = family_terminals(N, K, 0, variant)
    if ends:
        members += [make_walk(p) for p in graph.paths(ends, ends, False, cap, budget)]
    if d:
        members = [decorate(p, d) for p in members]
    return PolymerFamily(N, K, d, variant, tuple(sorted(members)), max_length)


def local_polymers(v: Vertex, k: int) -> list[Polymer]:
    """Every undecorated polymer of length k through ``v`` on the infinite lattice."""
    radius = k // 2 + 2
    plaq = DualSite(v.k, v.l)
    window = build_volume(plaq, radius + 1, 0)
    graph = IndexedGraph(window)
    everything = window.vertices
    found = set()
    for p in graph.paths(everything, everything, False, k, _kernels.node_budget()):
        if len(p) == k + 1 and v in p:
            found.add(make_walk(p))
    if k % 2 == 0:
        for p in graph.paths((), (), True, k, _kernels.node_budget()):
            if len(p) == k and v in p:
                found.add(make_loop(p))
    return sorted(found)


def count_through_vertex(v: Vertex, k: int, family) -> int:
    return sum(1 for p in family if p.length == k and v in p.vertex_set)


def count_intersecting(p: Polymer, k: int, family) -> int:
    return sum(1 for q in family if q.length == k and connectivity(p, q))


def lemma_bound(k: int) -> float:
    """Per-site bound 3(k+1)2^(k-2) on polymers of length k."""
    return 3 * (k + 1) * 2.0 ** (k - 2)


SMALL_WALK_BOUND = {1: 1, 2: 4, 3: 5, 4: 10}


def vertex_class(v: Vertex, N: int, K: int) -> str:
    """interior, inner-boundary, outer-boundary or bridge (an end of an edge leaving the inner boundary)."""
    outer_bd = build_volume(ORIGIN, N, 0).boundary
    inner = build_volume(ORIGIN, K, 0) if K else None
    if inner is not None and v in inner.boundary:
        return "inner-boundary"
    if v in outer_bd:
        return "outer-boundary"
    if inner is not None and any(w in inner.boundary for w in spin32_neighbors(v)):
        return "bridge"
    return "interior"


def verify_counts(N: int = 3, K: int = 1, k_max: int = 8, small_max: int = 4) -> dict:
    """Exhaustive check of the per-site polymer count bounds.

    Lattice-wide counts through one site of each sublattice are compared with
    3(k+1)2^(k-2); inside the interior family of the (N, K) annulus the
    per-class maxima are compared with the small-length constants.
    """
    lattice_counts = {}
    ok = True
    for v in (Vertex(0, 0, 0, 0, 0), Vertex(0, 0, 1, 0, 0)):
        for k in range(1, k_max + 1):
            c = len(local_polymers(v, k))
            lattice_counts[f"{v}:{k}"] = {"count": c, "bound": lemma_bound(k)}
            ok &= c <= lemma_bound(k)
    fam = enumerate_family(N, K, 0, INTERIOR, max_length=small_max)
    maxima: dict = {}
    for v in build_volume(ORIGIN, N, 0).vertices:
        cls = vertex_class(v, N, K)
        for k in range(1, small_max + 1):
            key = f"{cls}:{k}"
            maxima[key] = max(maxima.get(key, 0), count_through_vertex(v, k, fam))
    small_ok = all(maxima[f"{c}:{k}"] <= SMALL_WALK_BOUND[k]
                   for c in {key.split(":")[0] for key in maxima} for k in range(1, min(small_max, 4) + 1))
    return {"lattice_counts": lattice_counts, "class_maxima": maxima,
            "lattice_bound_holds": bool(ok), "small_bound_holds": bool(small_ok)}
