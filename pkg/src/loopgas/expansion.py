"""Hard-core polymer sums, partition functions and bulk/boundary expectations.

Conventions: all sums here omit the normalisation 2^(-#edges) of the product
density; it is tracked separately as ``prefactor_log2`` and cancels in every
expectation value.  Fixed boundary vectors enter through ``substitute``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .lattice import ORIGIN, Region, Vertex, build_volume, vertex_position
from .polymer import (
    BULK,
    INTERIOR,
    LOOP,
    Polymer,
    PolymerFamily,
    ResourceLimit,
    enumerate_family,
    family_terminals,
)
from .spherecalc import DotPoly, integrate_product, substitute, var_id, weight

THIRD = Fraction(1, 3)


class ConsistencyError(RuntimeError):
    pass


class UnsupportedSymbol(ValueError):
    pass


@dataclass(frozen=True)
class HardCoreSum:
    N: int
    K: int
    d: int
    variant: str
    value: DotPoly
    prefactor_log2: int
    truncation: int | None = None
    tail_bound: float | None = None
    method: str = "exact"
    stats: dict = field(default_factory=dict, compare=False)

    def normalized(self) -> DotPoly:
        return self.value.scale(Fraction(1, 2**self.prefactor_log2))


def annulus_edge_count(N: int, K: int, d: int) -> int:
    outer = build_volume(ORIGIN, N, d)
    inner = build_volume(ORIGIN, K, d).edges if K else frozenset()
    return len(outer.edges - inner)


# ---------------------------------------------------------------------------
# hard-core sums by independent-set enumeration


def _weight_sup(w: DotPoly) -> Fraction:
    return sum((abs(c) for c in w.terms.values()), Fraction(0))


def rankin_tail(weights_abs: Sequence[float], lengths: Sequence[int], cutoff: int) -> float:
    """Bound on the mass of hard-core subsets with total length above ``cutoff``.

    For every delta >= 0 the discarded mass is at most
    exp(-delta (cutoff+1)) * prod (1 + |w| exp(delta l)); the best delta on a
    grid is used.
    """
    best = math.inf
    for delta in np.linspace(0.0, 6.0, 121):
        logs = sum(math.log1p(w * math.exp(delta * l)) for w, l in zip(weights_abs, lengths))
        best = min(best, logs - delta * (cutoff + 1))
    return math.exp(best) if best < 700 else math.inf


def _hardcore_generic(polymers: Sequence[Polymer], weights: Sequence, max_total: int | None):
    """Plain recursive sum for arbitrary weights (small families)."""
    order = sorted(range(len(polymers)), key=lambda i: min(polymers[i].vertex_set))
    polys = [polymers[i] for i in order]
    ws = [weights[i] if isinstance(weights[i], DotPoly) else DotPoly.const(weights[i]) for i in order]
    cap = math.inf if max_total is None else max_total

    def rec(start, used, total, acc):
        out = acc
        for i in range(start, len(polys)):
            p = polys[i]
            if total + p.length > cap or not used.isdisjoint(p.vertex_set):
                continue
            out = out + rec(i + 1, used | p.vertex_set, total + p.length, acc * ws[i])
        return out

    return rec(0, frozenset(), 0, DotPoly.const(1))


def hardcore_sum(
    family,
    weights: Sequence | None = None,
    max_total_length: int | None = None,
    budget: int | None = None,
) -> HardCoreSum:
    """Sum over vertex-disjoint subsets of the family of the product of weights.

    With the closed-form weights the enumeration runs in the integer kernel and
    the result is assembled from a histogram over (subset size, total length,
    walk endpoint matching).  Custom weights use a direct recursion.
    """
    members = list(family)
    d = family.d if isinstance(family, PolymerFamily) else (members[0].d if members else 0)
    meta = (
        (family.N, family.K, family.variant)
        if isinstance(family, PolymerFamily) else (0, 0, "custom")
    )
    prefactor = annulus_edge_count(meta[0], meta[1], d) if meta[0] else 0
    if weights is not None:
        value = _hardcore_generic(members, list(weights), max_total_length)
        tail = None
        if max_total_length is not None:
            ws = [float(_weight_sup(w if isinstance(w, DotPoly) else DotPoly.const(w))) for w in weights]
            tail = rankin_tail(ws, [p.length for p in members], max_total_length)
        return HardCoreSum(*meta[:2], d, meta[2], value, prefactor, max_total_length, tail,
                           "exact" if tail is None else "truncated+tail")
    budget = _kernels.node_budget() if budget is None else budget
    table, rows = _enumerate(members, d, max_total_length, budget)
    value = _assemble(table, rows, d)
    tail = None
    if max_total_length is not None:
        ws = [float(_weight_sup(weight(p))) for p in members]
        tail = rankin_tail(ws, [p.length for p in members], max_total_length)
    return HardCoreSum(
        meta[0], meta[1], d, meta[2], value, prefactor, max_total_length, tail,
        "exact" if tail is None else "truncated+tail",
        {"polymers": len(members), "subsets": int(table[1].sum()) if rows is None else len(rows)},
    )


MAX_TERMINALS = 40


def _code_slot(x: int) -> tuple[int, int]:
    # ten 6-bit partner fields per int64 word, four words
    slot, field_ = divmod(x, 10)
    return slot, 6 * field_


def _walk_layout(members):
    ends = sorted({v for p in members if p.kind != LOOP for v in p.endpoints})
    if len(ends) > MAX_TERMINALS:
        raise ResourceLimit("too many distinct walk endpoints for the kernel encoding", {"endpoints": len(ends)})
    return ends, {v: i for i, v in enumerate(ends)}


def _enumerate(members, d, max_total, budget, force_aggregate=False):
    """Hard-core subsets of ``members``; ``force_aggregate`` ignores walk endpoints and returns the (size, length) histogram."""
    verts = sorted({v for p in members for v in p.vertex_set if v.pos == 0})
    index = {v: i for i, v in enumerate(verts)}
    nw = max(1, (len(verts) + 63) // 64)
    order = sorted(range(len(members)), key=lambda i: (index[min(v for v in members[i].vertex_set if v.pos == 0)], i))
    ends, end_index = ((), {}) if force_aggregate else _walk_layout(members)
    has_walks = bool(ends)
    masks = np.zeros((len(members), nw), dtype=np.uint64)
    lengths = np.zeros(len(members), dtype=np.int64)
    codes = np.zeros((len(members), 4), dtype=np.int64)
    group_vertex: list[int] = []
    group_start: list[int] = []
    for row, i in enumerate(order):
        p = members[i]
        for v in p.vertex_set:
            if v.pos == 0:
                j = index[v]
                masks[row, j >> 6] |= np.uint64(1) << np.uint64(j & 63)
        lengths[row] = p.length
        if p.kind != LOOP and has_walks:
            a, b = (end_index[x] for x in p.endpoints)
            for x, y in ((a, b), (b, a)):
                slot, bit = _code_slot(x)
                codes[row, slot] |= (y + 1) << bit
        mv = index[min(v for v in p.vertex_set if v.pos == 0)]
        if not group_vertex or group_vertex[-1] != mv:
            group_vertex.append(mv)
            group_start.append(row)
    group_start.append(len(members))
    # disjoint polymers cover distinct sites, so the total length never exceeds the site count
    total = min(int(lengths.sum()), len(verts)) if max_total is None else max_total
    table, rows, nodes, overflow = _kernels.hardcore_enumerate(
        masks, lengths, codes,
        np.array(group_start, dtype=np.int64), np.array(group_vertex, dtype=np.int64),
        total, budget, not has_walks,
    )
    if overflow:
        raise ResourceLimit(f"hard-core enumeration exceeded {budget} nodes", {"subsets": int(rows), "nodes": int(nodes)})
    if not has_walks:
        return ("hist", table, ends), None
    return ("rows", table[:rows], ends), table[:rows]


def _assemble(table, rows, d) -> DotPoly:
    kind, data, ends = table
    out: dict = defaultdict(Fraction)
    scale = d + 1

    def coeff(n, total):
        sign = -1 if (scale * total) % 2 else 1
        return sign * Fraction(3) ** (n - scale * total)

    if kind == "hist":
        nz = np.nonzero(data)
        for n, total in zip(*nz):
            out[()] += int(data[n, total]) * coeff(int(n), int(total))
    else:
        keys, counts = np.unique(data, axis=0, return_counts=True)
        ids = [var_id(v) for v in ends]
        for key, cnt in zip(keys, counts):
            n, total = int(key[0]), int(key[1])
            pairs = []
            for x in range(len(ends)):
                slot, bit = _code_slot(x)
                y = ((int(key[2 + slot]) >> bit) & 63) - 1
                if y > x:
                    pairs.append((ids[x], ids[y]))
            mono = tuple(sorted((a, b) if a < b else (b, a) for a, b in pairs))
            out[mono] += int(cnt) * coeff(n, total)
    return DotPoly({m: c for m, c in out.items() if c})


# ---------------------------------------------------------------------------
# transfer (frontier) evaluation of the same sums


def _edge_order(region: Region, edges) -> list:
    def key(e):
        (x1, y1), (x2, y2) = vertex_position(e[0]), vertex_position(e[1])
        return (math.atan2((y1 + y2) / 2, (x1 + x2) / 2 + 1e-9), e)

    return sorted(edges, key=key)


def frontier_sum(
    N: int,
    K: int,
    d: int = 0,
    variant: str = BULK,
    fixed: Mapping | None = None,
    split_boundary: bool = False,
) -> DotPoly:
    """Hard-core sum evaluated by sweeping the edges of the annulus.

    The state records, for every site on the sweep frontier, whether it is
    unused, saturated, or the open end of a strand (and where that strand
    started).  Loops pick up a factor 3, completed walks 3 times the dot
    product of their end vectors, and each undecorated edge (-1/3)^(d+1).
    Sites listed in ``fixed`` are replaced by the given rational unit vectors.

    With ``split_boundary`` every outer boundary site is cut into one terminal
    per incident edge, so strands may meet there.  That is the exact expansion
    when the outer boundary is held fixed rather than integrated.
    """
    if split_boundary and variant != INTERIOR:
        raise ValueError("boundary splitting applies to the interior variant")
    outer = build_volume(ORIGIN, N, 0)
    inner = build_volume(ORIGIN, K, 0) if K else None
    edges = list(outer.edges - (inner.edges if inner else frozenset()))
    if inner is not None:
        # walks may not pass through the inner volume; its boundary only ends walks
        edges = [e for e in edges if not (e[0] in inner.vertices and e[1] in inner.vertices)]
    edges = _edge_order(outer, edges)
    terminals = family_terminals(N, K, 0, variant)
    # node labels are (site, copy); copy -1 unless the site was split
    if split_boundary:
        outer_bd = outer.boundary
        labelled = []
        for j, (a, b) in enumerate(edges):
            labelled.append(tuple((v, j) if v in outer_bd else (v, -1) for v in (a, b)))
    else:
        labelled = [((a, -1), (b, -1)) for a, b in edges]
    order = sorted({v for e in labelled for v in e})
    gid = {v: i for i, v in enumerate(order)}
    is_term = [v in terminals for v, _ in order]
    fixed = dict(fixed or {})
    edge_factor = Fraction(-1, 3) ** (d + 1)
    dot_cache: dict = {}

    def dot(i, j):
        key = (min(i, j), max(i, j))
        if key not in dot_cache:
            a, b = order[key[0]][0], order[key[1]][0]
            base = DotPoly.dot(var_id(a), var_id(b), 3)
            vec = {var_id(v): fixed[v] for v in (a, b) if v in fixed}
            dot_cache[key] = substitute(base, vec) if vec else base
        return dot_cache[key]

    algebra = _DotAlgebra(edge_factor, dot)
    return _sweep(labelled, gid, is_term, algebra)


class _DotAlgebra:
    """Symbolic values: DotPoly with the loop factor 3 and walk factor 3 (a . b)."""

    def __init__(self, edge_factor, dot):
        self.edge_factor = edge_factor
        self.dot = dot

    def one(self):
        return DotPoly.const(1)

    def zero(self):
        return DotPoly()

    def add(self, a, b):
        return a + b

    def edge(self, val):
        return val.scale(self.edge_factor)

    def loop(self, val):
        return val.scale(3)

    def walk(self, val, i, j):
        return val * self.dot(i, j)

    def alive(self, val):
        return bool(val)


class LengthSeries:
    """Scalar values: truncated power series in u, each polymer weighted by ``sign`` u^length."""

    def __init__(self, cutoff: int, sign: int = -1):
        self.cutoff = cutoff
        self.sign = sign

    def one(self):
        return (1,) + (0,) * self.cutoff

    def zero(self):
        return (0,) * (self.cutoff + 1)

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def edge(self, val):
        return (0,) + val[:-1]

    def loop(self, val):
        return tuple(self.sign * x for x in val)

    def walk(self, val, i, j):
        return self.loop(val)

    def alive(self, val):
        return any(val)


def _sweep(labelled, gid, is_term, algebra):
    FREE, FULL = 0, 1
    remaining = defaultdict(int)
    for a, b in labelled:
        remaining[a] += 1
        remaining[b] += 1
    frontier: list[int] = []
    states: dict = {(): algebra.one()}

    def add(dst, key, val):
        cur = dst.get(key)
        dst[key] = val if cur is None else algebra.add(cur, val)

    for a, b in labelled:
        ia, ib = gid[a], gid[b]
        for v in (ia, ib):
            if v not in frontier:
                frontier.append(v)
                states = {k + (FREE,): val for k, val in states.items()}
        pos = {v: i for i, v in enumerate(frontier)}
        pa, pb = pos[ia], pos[ib]
        new: dict = {}
        for key, val in states.items():
            add(new, key, val)
            ca, cb = key[pa], key[pb]
            if ca == FULL or cb == FULL:
                continue
            codes = list(key)
            closes_loop = False
            walk = None
            if ca == FREE and cb == FREE:
                codes[pa] = 2 + 2 * ib
                codes[pb] = 2 + 2 * ia
            elif ca == FREE or cb == FREE:
                (pf, idx_f), (po, co) = ((pa, ia), (pb, cb)) if ca == FREE else ((pb, ib), (pa, ca))
                codes[po] = FULL
                codes[pf] = co
                if co % 2 == 0:
                    codes[pos[(co - 2) // 2]] = 2 + 2 * idx_f
            else:
                codes[pa] = codes[pb] = FULL
                if ca == 2 + 2 * ib:
                    closes_loop = True
                elif ca % 2 == 0 and cb % 2 == 0:
                    g, h = (ca - 2) // 2, (cb - 2) // 2
                    codes[pos[g]] = 2 + 2 * h
                    codes[pos[h]] = 2 + 2 * g
                elif ca % 2 == 0 or cb % 2 == 0:
                    open_c, term_c = (ca, cb) if ca % 2 == 0 else (cb, ca)
                    codes[pos[(open_c - 2) // 2]] = term_c
                else:
                    walk = ((ca - 3) // 2, (cb - 3) // 2)
            nv = algebra.edge(val)
            if closes_loop:
                nv = algebra.loop(nv)
            if walk is not None:
                nv = algebra.walk(nv, *walk)
            if algebra.alive(nv):
                add(new, tuple(codes), nv)
        states = new
        remaining[a] -= 1
        remaining[b] -= 1
        for v, idx in ((a, ia), (b, ib)):
            if remaining[v] == 0 and idx in frontier:
                states = _retire(states, frontier, idx, is_term[idx], algebra)
                frontier.remove(idx)
    if frontier:
        raise ConsistencyError("sweep ended with a non-empty frontier")
    return states.get((), algebra.zero())


def _retire(states, frontier, idx, terminal, algebra):
    p = frontier.index(idx)
    pos = {v: i for i, v in enumerate(frontier)}
    out: dict = {}
    for key, val in states.items():
        c = key[p]
        codes = list(key)
        if c >= 2:
            if not terminal:
                continue
            if c % 2 == 0:
                codes[pos[(c - 2) // 2]] = 3 + 2 * idx
            else:
                val = algebra.walk(val, (c - 3) // 2, idx)
        del codes[p]
        k2 = tuple(codes)
        cur = out.get(k2)
        out[k2] = val if cur is None else algebra.add(cur, val)
    return out


def length_series(N: int, K: int, cutoff: int, variant: str = INTERIOR,
                  avoid: frozenset = frozenset(), sign: int = -1) -> list[int]:
    """Coefficients of the hard-core sum with every polymer weighted by sign * u^length.

    Polymers through any site of ``avoid`` are excluded.  Runs the frontier
    sweep on integer series truncated at ``cutoff`` so that only short
    configurations are ever stored.
    """
    outer = build_volume(ORIGIN, N, 0)
    inner = build_volume(ORIGIN, K, 0) if K else None
    edges = [e for e in outer.edges - (inner.edges if inner else frozenset())
             if not (inner and e[0] in inner.vertices and e[1] in inner.vertices)
             and e[0] not in avoid and e[1] not in avoid]
    labelled = [((a, -1), (b, -1)) for a, b in _edge_order(outer, edges)]
    terminals = family_terminals(N, K, 0, variant)
    order = sorted({v for e in labelled for v in e})
    gid = {v: i for i, v in enumerate(order)}
    is_term = [v in terminals for v, _ in order]
    return list(_sweep(labelled, gid, is_term, LengthSeries(cutoff, sign)))


# ---------------------------------------------------------------------------
# partition functions


@lru_cache(maxsize=None)
def phi(N: int, K: int, d: int = 0, variant: str = BULK, method: str = "auto") -> HardCoreSum:
    """The polymer sum over the bulk or interior family, symbolic in its terminals.

    ``auto`` tries hard-core enumeration and falls back to the frontier sweep
    when the enumeration budget runs out.
    """
    if variant == INTERIOR and N < 2:
        raise ValueError("interior sums need N >= 2")
    if method not in ("auto", "hardcore", "frontier"):
        raise ValueError(f"unknown method {method!r}")
    if method != "frontier":
        try:
            return hardcore_sum(enumerate_family(N, K, d, variant))
        except ResourceLimit:
            if method == "hardcore":
                raise
    value = frontier_sum(N, K, d, variant)
    return HardCoreSum(N, K, d, variant, value, annulus_edge_count(N, K, d), method="frontier")


def Z_bulk(N: int, A_support_K: int = 0, d: int = 0, method: str = "auto") -> HardCoreSum:
    return phi(N, A_support_K, d, BULK, method)


def partition_function(N: int, d: int = 0, method: str = "hardcore") -> Fraction:
    s = Z_bulk(N, 0, d, method)
    if not s.value.is_const():
        raise ConsistencyError("loop sum is not a constant")
    return s.value.constant() / 2**s.prefactor_log2


def _graph_arrays(region: Region):
    order = sorted(region.vertices)
    index = {v: i for i, v in enumerate(order)}
    edges = sorted(region.edges)
    eu = np.array([index[a] for a, _ in edges], dtype=np.int64)
    ev = np.array([index[b] for _, b in edges], dtype=np.int64)
    return order, index, edges, eu, ev


def cycle_basis(region: Region) -> np.ndarray:
    """Fundamental cycles of a BFS spanning tree, as 0/1 edge-indicator rows."""
    order, index, edges, eu, ev = _graph_arrays(region)
    eidx = {e: i for i, e in enumerate(edges)}
    root = order[0]
    parent = {root: None}
    queue = [root]
    tree = set()
    for v in queue:
        for w in sorted(region.adjacency[v]):
            if w not in parent:
                parent[w] = v
                tree.add((v, w) if v < w else (w, v))
                queue.append(w)

    def to_root(v):
        path = []
        while parent[v] is not None:
            path.append((v, parent[v]) if v < parent[v] else (parent[v], v))
            v = parent[v]
        return path

    rows = []
    for e in edges:
        if e in tree:
            continue
        row = np.zeros(len(edges), dtype=np.uint8)
        row[eidx[e]] ^= 1
        for t in to_root(e[0]) + to_root(e[1]):
            row[eidx[t]] ^= 1
        rows.append(row)
    return np.array(rows, dtype=np.uint8).reshape(len(rows), len(edges))


def cycle_space_partition_function(N: int, d: int = 0) -> Fraction:
    """Even-subgraph sum over the decorated volume, each cycle weighted 3 * 3^(-edges)."""
    region = build_volume(ORIGIN, N, d)
    order, _, edges, eu, ev = _graph_arrays(region)
    basis = cycle_basis(region)
    hist = _kernels.cycle_space_histogram(basis, eu, ev, len(order))
    total = Fraction(0)
    for e, c in zip(*np.nonzero(hist)):
        total += int(hist[e, c]) * Fraction(3) ** (int(c) - int(e))
    return total / 2 ** len(edges)


def density_factors(region: Region, fixed: Mapping | None = None) -> list:
    """The factors (1 - Omega_i . Omega_j)/2 of the product density."""
    out = []
    fx = {var_id(v): vec for v, vec in (fixed or {}).items()}
    for a, b in sorted(region.edges):
        f = (DotPoly.const(1) - DotPoly.dot(var_id(a), var_id(b))).scale(Fraction(1, 2))
        out.append(substitute(f, {k: v for k, v in fx.items() if k in (var_id(a), var_id(b))}) if fx else f)
    return out


def _sweep_order(vertices) -> list:
    return sorted(vertices, key=lambda v: (vertex_position(v)[0], vertex_position(v)[1], v))


def direct_integral(region: Region, observable: DotPoly | None = None,
                    fixed: Mapping | None = None) -> Fraction:
    """Integrate the product density (times an observable) over all non-fixed sites."""
    factors = density_factors(region, fixed)
    if observable is not None:
        obs = observable
        if fixed:
            obs = substitute(obs, {var_id(v): vec for v, vec in fixed.items()})
        factors.append(obs)
    free = [var_id(v) for v in _sweep_order(region.vertices) if not fixed or v not in fixed]
    out = integrate_product(factors, free)
    if not out.is_const():
        raise ConsistencyError("integral left free variables")
    return out.constant()


def direct_partition_function(N: int, d: int = 0) -> Fraction:
    return direct_integral(build_volume(ORIGIN, N, d))


# ---------------------------------------------------------------------------
# expectations


def _inner_order(K: int, d: int) -> list:
    inner = build_volume(ORIGIN, K, d)
    bd = inner.boundary
    interior = [v for v in _sweep_order(inner.vertices) if v not in bd]
    return [var_id(v) for v in interior + _sweep_order(bd)]


def _check_support(A: DotPoly, K: int, d: int):
    allowed = {var_id(v) for v in build_volume(ORIGIN, K, d).vertices}
    if not A.free_vars <= allowed:
        raise UnsupportedSymbol("observable involves sites outside the inner volume")


def inner_integral(A: DotPoly, value: DotPoly, K: int, d: int) -> DotPoly:
    """Integral over the inner volume against its density, of A times ``value``."""
    inner = build_volume(ORIGIN, K, d)
    return integrate_product(density_factors(inner) + [A, value], _inner_order(K, d))


def Z_observable(A: DotPoly, N: int, K: int, d: int = 0) -> Fraction:
    _check_support(A, K, d)
    s = Z_bulk(N, K, d)
    out = inner_integral(A, s.value, K, d)
    return out.constant() / 2**s.prefactor_log2


def bulk_expectation(A: DotPoly, N: int, K: int, d: int = 0) -> Fraction:
    if not 0 < K < N:
        raise ValueError("need 0 < K < N")
    _check_support(A, K, d)
    s = Z_bulk(N, K, d)
    num = inner_integral(A, s.value, K, d).constant()
    den = inner_integral(DotPoly.const(1), s.value, K, d).constant()
    if den <= 0:
        raise ConsistencyError("non-positive bulk normalisation")
    return num / den


def _relabel(fixed: Mapping, d: int) -> dict:
    return {var_id(v): vec for v, vec in fixed.items()}


FIXED_METHODS = ("split", "hardcore", "frontier")


def interior_phi_at(N: int, K: int, d: int, assignment: Mapping, method: str = "split") -> DotPoly:
    """Interior polymer sum with the outer boundary fixed to the given vectors.

    ``split`` (the default) lets strands meet at fixed boundary sites and is
    exact.  ``hardcore`` and ``frontier`` evaluate the literal interior family,
    whose walks pass through fixed sites with integrated weights.
    """
    outer_bd = build_volume(ORIGIN, N, d).boundary
    missing = outer_bd - set(assignment)
    if missing:
        raise ValueError(f"assignment misses {len(missing)} outer boundary sites")
    if method not in FIXED_METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "hardcore":
        return substitute(phi(N, K, d, INTERIOR).value, _relabel(assignment, d))
    fixed = {v: assignment[v] for v in outer_bd}
    return frontier_sum(N, K, d, INTERIOR, fixed=fixed, split_boundary=method == "split")


def boundary_expectation(A: DotPoly, N: int, K: int, d: int, assignment: Mapping,
                         method: str = "split") -> Fraction:
    if not 0 < K < N:
        raise ValueError("need 0 < K < N")
    _check_support(A, K, d)
    val = interior_phi_at(N, K, d, assignment, method)
    num = inner_integral(A, val, K, d)
    den = inner_integral(DotPoly.const(1), val, K, d)
    if not (num.is_const() and den.is_const()):
        raise ConsistencyError("boundary expectation left free variables")
    if den.constant() == 0:
        raise ConsistencyError("vanishing boundary normalisation")
    return num.constant() / den.constant()


def direct_boundary_expectation(A: DotPoly, N: int, d: int, assignment: Mapping) -> Fraction:
    """Brute force: integrate the full density over the interior of the outer volume."""
    region = build_volume(ORIGIN, N, d)
    num = direct_integral(region, A, assignment)
    den = direct_integral(region, None, assignment)
    return num / den


@lru_cache(maxsize=None)
def split_phi(N: int, K: int, d: int = 0) -> HardCoreSum:
    """Interior sum with the outer boundary split, symbolic in all terminals."""
    value = frontier_sum(N, K, d, INTERIOR, split_boundary=True)
    return HardCoreSum(N, K, d, INTERIOR, value, annulus_edge_count(N, K, d), method="split")


def averaged_boundary_sum(A: DotPoly, N: int, K: int, d: int = 0, split: bool = False) -> Fraction:
    """Average over the outer boundary of the interior sum, against A on the inner volume."""
    s = split_phi(N, K, d) if split else phi(N, K, d, INTERIOR)
    inner = inner_integral(A, s.value, K, d)
    outer_bd = [var_id(v) for v in _sweep_order(build_volume(ORIGIN, N, d).boundary)]
    out = inner.integrate(outer_bd)
    if not out.is_const():
        raise ConsistencyError("boundary average left free variables")
    return out.constant() / 2**s.prefactor_log2


def edge_symbol(x: Vertex, y: Vertex) -> DotPoly:
    return DotPoly.dot(var_id(x), var_id(y))


# ---------------------------------------------------------------------------
# boundary indistinguishability at small volumes


def _normalised(value: DotPoly, K: int, d: int) -> DotPoly:
    total = inner_integral(DotPoly.const(1), value, K, d)
    if not total.is_const() or total.constant() == 0:
        raise ConsistencyError("cannot normalise the inner density")
    return value.scale(1 / total.constant())


def density_difference(N: int, K: int, d: int, assignment: Mapping, method: str = "split") -> DotPoly:
    """Normalised fixed-boundary inner density minus the normalised bulk one."""
    fixed = _normalised(interior_phi_at(N, K, d, assignment, method), K, d)
    bulk = _normalised(Z_bulk(N, K, d).value, K, d)
    return fixed - bulk


def _inner_vars(K: int, d: int) -> list[int]:
    return _inner_order(K, d)


def witness_candidates(h: DotPoly, K: int, d: int, top: int = 32):
    """Candidate witnesses g with a known bound on sup |g| for the L1 lower bound."""
    xs = sorted(_inner_vars(K, d))
    dots = [DotPoly.dot(a, b) for i, a in enumerate(xs) for b in xs[i + 1:]]
    axes = [DotPoly.dot(a, c) for a in xs for c in (-1, -2, -3)]
    for g in axes + dots:
        yield g, Fraction(1)
    ranked = sorted(h.terms.items(), key=lambda t: -abs(t[1]))
    for k in (1, 2, 4, 8, 16, top):
        chosen = dict(ranked[:k])
        if chosen:
            yield DotPoly(chosen), sum(abs(c) for c in chosen.values())
    for i, g in enumerate(dots):
        for g2 in dots[i:]:
            yield g * g2, Fraction(1)


@dataclass
class L1Bound:
    lower: Fraction
    witness: str
    candidates: int


def l1_lower_bound(h: DotPoly, K: int, d: int, candidates=None, target: Fraction | None = None) -> L1Bound:
    """Certified lower bound on the L1(rho_K) norm of ``h``.

    For any g with sup |g| <= S, |int rho h g| / S <= int rho |h|.  Every
    integral is exact, so the best ratio over the candidates is rigorous.
    The search stops early once ``target`` is reached.
    """
    best, witness, count = Fraction(0), "0", 0
    for g, sup in candidates if candidates is not None else witness_candidates(h, K, d):
        count += 1
        val = inner_integral(g, h, K, d)
        if not val.is_const():
            raise ConsistencyError("witness integral left free variables")
        ratio = abs(val.constant()) / sup
        if ratio > best:
            best, witness = ratio, g.dump() if len(g.terms) <= 4 else f"{len(g.terms)}-term witness"
        if target is not None and best >= target:
            break
    return L1Bound(best, witness, count)


def l1_monte_carlo(h: DotPoly, K: int, d: int, samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Estimate of int rho |h| with its standard error (uniform sampling, density as weight)."""
    from .spherecalc import evaluate_many, random_unit_vectors

    rng = np.random.default_rng(seed)
    inner = build_volume(ORIGIN, K, d)
    xs = sorted(var_id(v) for v in inner.vertices)
    vecs = {x: random_unit_vectors(rng, samples) for x in xs}
    rho = np.ones(samples)
    for f in density_factors(inner):
        rho *= evaluate_many(f, vecs)
    vals = rho * np.abs(evaluate_many(h, vecs))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def interior_supported(A: DotPoly, K: int, d: int) -> bool:
    inner = build_volume(ORIGIN, K, d)
    allowed = {var_id(v) for v in inner.vertices - inner.boundary}
    return A.free_vars <= allowed


@dataclass
class GapSample:
    gap: Fraction
    boundary_value: Fraction
    bulk_value: Fraction
    l1_lower: Fraction
    witness: str
    l1_mc: float | None = None
    l1_mc_err: float | None = None


def indistinguishability_gaps(observables: Sequence[DotPoly], N: int, K: int, d: int, assignment: Mapping,
                              strict: bool = True, mc_samples: int = 0, seed: int = 0,
                              with_l1: bool = True, norm: Fraction | None = None) -> list[GapSample]:
    """|boundary expectation - bulk expectation| for several observables and one boundary.

    Each gap equals |int rho_K h A| where h is the density difference, so
    gap <= ||A|| * ||h||_1.  The L1 lower bound is shared; given ``norm``
    (a common bound on ||A||) the witness search stops once every inequality
    is certified.  With ``strict`` the observables must avoid the boundary of
    the inner volume, as the comparison argument assumes; for K = 1 and d = 0
    that interior is empty, hence the switch.
    """
    for A in observables:
        if strict and not interior_supported(A, K, d):
            raise UnsupportedSymbol("observable must be supported in the interior of the inner volume")
        _check_support(A, K, d)
    h = density_difference(N, K, d, assignment)
    gaps = []
    for A in observables:
        gap_poly = inner_integral(A, h, K, d)
        if not gap_poly.is_const():
            raise ConsistencyError("gap left free variables")
        gaps.append((gap_poly.constant(), bulk_expectation(A, N, K, d)))
    target = max(abs(g) for g, _ in gaps) / norm if norm and gaps else None
    lower = l1_lower_bound(h, K, d, target=target) if with_l1 else L1Bound(Fraction(0), "", 0)
    mc = l1_monte_carlo(h, K, d, mc_samples, seed) if mc_samples else (None, None)
    return [GapSample(abs(g), bulk + g, bulk, lower.lower, lower.witness, *mc) for g, bulk in gaps]


def indistinguishability_gap(A: DotPoly, N: int, K: int, d: int, assignment: Mapping, **kwargs) -> GapSample:
    return indistinguishability_gaps([A], N, K, d, assignment, **kwargs)[0]


def sample_assignment(N: int, d: int, rng, size: int = 6) -> dict:
    """Random rational unit vectors on the outer boundary."""
    from .spherecalc import pythagorean_vector

    return {v: pythagorean_vector(rng, size) for v in _sweep_order(build_volume(ORIGIN, N, d).boundary)}


def product_state_expectation(A: DotPoly, N: int, d: int, signs: Sequence[int]) -> Fraction:
    """Expectation in the ground state whose boundary polynomial is a product of u's and v's.

    Its squared modulus is prod_i (1 + s_i Omega_i . e_z) / 2 over the outer boundary.
    """
    region = build_volume(ORIGIN, N, d)
    bd = _sweep_order(region.boundary)
    if len(signs) != len(bd):
        raise ValueError(f"need {len(bd)} signs")
    weight_poly = DotPoly.const(1)
    for v, s in zip(bd, signs):
        weight_poly = weight_poly * (DotPoly.const(1) + DotPoly.dot(var_id(v), -3, s)).scale(Fraction(1, 2))
    num = direct_integral(region, weight_poly * A)
    den = direct_integral(region, weight_poly)
    return num / den
