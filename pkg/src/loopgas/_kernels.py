"""Integer enumeration kernels.

Each kernel is plain numpy-style Python.  When numba is importable and
``LOOPGAS_PURE_PYTHON`` is unset, the same source is compiled with
``numba.njit``; otherwise it runs interpreted.  Both paths return identical
arrays.
"""

from __future__ import annotations

import os

import numpy as np

PURE_PYTHON = os.environ.get("LOOPGAS_PURE_PYTHON", "").lower() not in ("", "0", "false", "no")

try:
    if PURE_PYTHON:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
    jit = numba.njit(cache=True)
except ImportError:  # pragma: no cover - exercised through the env flag
    NUMBA_ENABLED = False

    def jit(fn):
        return fn


DEFAULT_BUDGET = 10**8


def node_budget() -> int:
    raw = os.environ.get("LOOPGAS_NODE_BUDGET")
    return int(float(raw)) if raw else DEFAULT_BUDGET


@jit
def _grow_rows(arr, fill):
    out = np.full((2 * arr.shape[0], arr.shape[1]), fill, dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@jit
def path_dfs(adj, edge_ok, start_ok, end_ok, loops, max_len, budget):
    """Self-avoiding paths (or cycles) on a graph of maximum degree 3.

    ``adj[v, j]`` is the j-th neighbour of v (-1 if absent) and
    ``edge_ok[v, j]`` says whether that edge may be used.  Walk mode returns
    every simple path from a start vertex s to an end vertex w > s; loop mode
    returns every cycle once, anchored at its smallest vertex.  Rows of the
    result hold vertex indices padded with -1.

    Returns (paths, count, nodes, overflow).
    """
    nv = adj.shape[0]
    width = max_len + 1
    paths = np.full((256, width), -1, dtype=np.int64)
    count = 0
    nodes = 0
    path = np.zeros(width + 1, dtype=np.int64)
    slot = np.zeros(width + 1, dtype=np.int64)
    onpath = np.zeros(nv, dtype=np.bool_)
    for s in range(nv):
        if not loops and not start_ok[s]:
            continue
        path[0] = s
        slot[0] = 0
        onpath[s] = True
        depth = 0
        while depth >= 0:
            u = path[depth]
            if slot[depth] >= adj.shape[1]:
                onpath[u] = False
                depth -= 1
                continue
            j = slot[depth]
            slot[depth] += 1
            w = adj[u, j]
            if w < 0 or not edge_ok[u, j]:
                continue
            if loops:
                if w == s:
                    if depth >= 2 and depth + 1 <= max_len and path[1] < u:
                        if count == paths.shape[0]:
                            paths = _grow_rows(paths, -1)
                        for i in range(depth + 1):
                            paths[count, i] = path[i]
                        count += 1
                    continue
                if w < s or onpath[w]:
                    continue
                if depth + 2 > max_len:
                    continue
            else:
                if onpath[w] or depth + 1 > max_len:
                    continue
            nodes += 1
            if nodes > budget:
                for v in range(nv):
                    onpath[v] = False
                return paths[:count], count, nodes, True
            depth += 1
            path[depth] = w
            slot[depth] = 0
            onpath[w] = True
            if not loops and end_ok[w] and w > s:
                if count == paths.shape[0]:
                    paths = _grow_rows(paths, -1)
                for i in range(depth + 1):
                    paths[count, i] = path[i]
                count += 1
    return paths[:count], count, nodes, False


@jit
def cycle_space_histogram(basis, edge_u, edge_v, n_vertices):
    """Histogram of (edge count, component count) over the cycle space.

    ``basis`` is an (r, E) 0/1 matrix of independent even subgraphs; all 2^r
    combinations are visited in Gray-code order.
    """
    r, ne = basis.shape
    hist = np.zeros((ne + 1, n_vertices + 1), dtype=np.int64)
    hist[0, 0] = 1
    cur = np.zeros(ne, dtype=np.uint8)
    parent = np.zeros(n_vertices, dtype=np.int64)
    touched = np.zeros(n_vertices, dtype=np.bool_)
    for i in range(1, 1 << r):
        b = 0
        while not (i >> b) & 1:
            b += 1
        for e in range(ne):
            cur[e] ^= basis[b, e]
        for v in range(n_vertices):
            parent[v] = v
            touched[v] = False
        edges = 0
        nodes = 0
        merges = 0
        for e in range(ne):
            if cur[e]:
                edges += 1
                x = edge_u[e]
                y = edge_v[e]
                if not touched[x]:
                    touched[x] = True
                    nodes += 1
                if not touched[y]:
                    touched[y] = True
                    nodes += 1
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                while parent[y] != y:
                    parent[y] = parent[parent[y]]
                    y = parent[y]
                if x != y:
                    parent[x] = y
                    merges += 1
        hist[edges, nodes - merges] += 1
    return hist


@jit
def _fast_forward(g, n_groups, group_vertex, used):
    while g < n_groups:
        v = group_vertex[g]
        if (used[v >> 6] >> np.uint64(v & 63)) & np.uint64(1):
            g += 1
        else:
            break
    return g


@jit
def hardcore_enumerate(masks, lengths, codes, group_start, group_vertex, max_total, budget, aggregate):
    """Enumerate vertex-disjoint subsets of polymers.

    Polymers are sorted by their smallest vertex; group g holds those whose
    smallest vertex is ``group_vertex[g]``.  Each subset is visited once.

    With ``aggregate`` set, returns a histogram ``hist[n, L]`` of subset size
    and total length.  Otherwise returns one row ``(n, L, code words...)``
    per subset, where the code words are the OR of the members' codes.

    Returns (table, rows, nodes, overflow).
    """
    n_groups = group_vertex.shape[0]
    nw = masks.shape[1]
    nc = codes.shape[1]
    top = n_groups + 2
    used = np.zeros((top, nw), dtype=np.uint64)
    code = np.zeros((top, nc), dtype=np.int64)
    cnt = np.zeros(top, dtype=np.int64)
    tot = np.zeros(top, dtype=np.int64)
    gidx = np.zeros(top, dtype=np.int64)
    choice = np.zeros(top, dtype=np.int64)
    if aggregate:
        table = np.zeros((max_total + 1, max_total + 1), dtype=np.int64)
    else:
        table = np.zeros((1024, 2 + nc), dtype=np.int64)
    rows = 0
    nodes = 0
    depth = 0
    gidx[0] = _fast_forward(0, n_groups, group_vertex, used[0])
    choice[0] = -1
    while depth >= 0:
        g = gidx[depth]
        if g >= n_groups:
            if aggregate:
                table[cnt[depth], tot[depth]] += 1
            else:
                if rows == table.shape[0]:
                    table = _grow_rows(table, 0)
                table[rows, 0] = cnt[depth]
                table[rows, 1] = tot[depth]
                for c in range(nc):
                    table[rows, 2 + c] = code[depth, c]
            rows += 1
            depth -= 1
            continue
        c = choice[depth]
        choice[depth] += 1
        nodes += 1
        if nodes > budget:
            return table, rows, nodes, True
        if c == -1:
            nxt = depth + 1
            for w in range(nw):
                used[nxt, w] = used[depth, w]
            for w in range(nc):
                code[nxt, w] = code[depth, w]
            cnt[nxt] = cnt[depth]
            tot[nxt] = tot[depth]
            gidx[nxt] = _fast_forward(g + 1, n_groups, group_vertex, used[nxt])
            choice[nxt] = -1
            depth = nxt
            continue
        idx = group_start[g] + c
        if idx >= group_start[g + 1]:
            depth -= 1
            continue
        if tot[depth] + lengths[idx] > max_total:
            continue
        clash = False
        for w in range(nw):
            if used[depth, w] & masks[idx, w]:
                clash = True
                break
        if clash:
            continue
        nxt = depth + 1
        for w in range(nw):
            used[nxt, w] = used[depth, w] | masks[idx, w]
        for w in range(nc):
            code[nxt, w] = code[depth, w] | codes[idx, w]
        cnt[nxt] = cnt[depth] + 1
        tot[nxt] = tot[depth] + lengths[idx]
        gidx[nxt] = _fast_forward(g + 1, n_groups, group_vertex, used[nxt])
        choice[nxt] = -1
        depth = nxt
    return table, rows, nodes, False


@jit
def signed_connected_count(n_vertices, edge_u, edge_v):
    """Sum of (-1)^|E'| over edge subsets E' that connect all vertices."""
    m = edge_u.shape[0]
    total = 0
    parent = np.zeros(n_vertices, dtype=np.int64)
    for subset in range(1 << m):
        for v in range(n_vertices):
            parent[v] = v
        comps = n_vertices
        size = 0
        for e in range(m):
            if (subset >> e) & 1:
                size += 1
                x = edge_u[e]
                y = edge_v[e]
                while parent[x] != x:
                    x = parent[x]
                while parent[y] != y:
                    y = parent[y]
                if x != y:
                    parent[x] = y
                    comps -= 1
        if comps == 1:
            total += -1 if size & 1 else 1
    return total
