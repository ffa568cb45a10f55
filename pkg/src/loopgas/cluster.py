"""Ursell functions, truncated cluster (log) series and restricted cluster bounds."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Sequence

import mpmath
import numpy as np

from . import _kernels
from .constants import KAPPA, MU, threshold_beta
from .lattice import ORIGIN, build_volume
from .polymer import Polymer

DEFAULT_SIZE_CAP = 10
EDGE_SUBSET_LIMIT = 20


class SizeLimit(ValueError):
    pass


class ThresholdViolation(ValueError):
    pass


def conflict_graph(polymers: Sequence[Polymer]) -> list[tuple[int, int]]:
    """Index pairs (i < j) of polymers sharing a site; equal polymers always conflict."""
    owners = defaultdict(list)
    for i, p in enumerate(polymers):
        for v in p.vertex_set:
            if v.pos == 0:
                owners[v].append(i)
    edges = set()
    for group in owners.values():
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                edges.add((group[a], group[b]))
    for i in range(len(polymers)):
        for j in range(i + 1, len(polymers)):
            if polymers[i] == polymers[j]:
                edges.add((i, j))
    return sorted(edges)


def _connected(m: int, edges) -> bool:
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(x) for x in range(m)}) == 1


def connected_signed_sum(m: int, edges) -> int:
    """Sum of (-1)^|E'| over spanning connected subgraphs E' of the graph."""
    if m == 1:
        return 1
    if not _connected(m, edges):
        return 0
    if len(edges) <= EDGE_SUBSET_LIMIT:
        eu = np.array([a for a, _ in edges], dtype=np.int64)
        ev = np.array([b for _, b in edges], dtype=np.int64)
        return int(_kernels.signed_connected_count(m, eu, ev))
    return _subset_recursion(m, edges)


def _subset_recursion(m: int, edges) -> int:
    # C(S) = A(S) - sum_{T containing min(S), T < S} C(T) A(S \ T), A(S) = [S independent]
    adj = [0] * m
    for a, b in edges:
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    full = (1 << m) - 1
    indep = [False] * (full + 1)
    indep[0] = True
    for s in range(1, full + 1):
        low = s & -s
        v = low.bit_length() - 1
        rest = s ^ low
        indep[s] = indep[rest] and not (adj[v] & rest)
    conn = [0] * (full + 1)
    for s in range(1, full + 1):
        low = s & -s
        rest = s ^ low
        total = 1 if indep[s] else 0
        t = rest
        while True:
            sub = t | low
            if sub != s and indep[s ^ sub]:
                total -= conn[sub]
            if t == 0:
                break
            t = (t - 1) & rest
        conn[s] = total
    return conn[full]


def ursell_from_graph(m: int, edges, cap: int = DEFAULT_SIZE_CAP) -> Fraction:
    if m < 1:
        raise ValueError("need at least one polymer")
    if m > cap:
        raise SizeLimit(f"cluster size {m} exceeds cap {cap}")
    return Fraction(connected_signed_sum(m, list(edges)), math.factorial(m))


@dataclass(frozen=True)
class Cluster:
    polymers: tuple

    @cached_property
    def graph(self) -> list[tuple[int, int]]:
        return conflict_graph(self.polymers)

    @property
    def size(self) -> int:
        return len(self.polymers)

    @property
    def total_length(self) -> int:
        return sum(p.length for p in self.polymers)

    def is_cluster(self) -> bool:
        return _connected(self.size, self.graph)

    def ursell(self, cap: int = DEFAULT_SIZE_CAP) -> Fraction:
        return ursell_from_graph(self.size, self.graph, cap)


def ursell(c: Cluster | Sequence[Polymer], cap: int = DEFAULT_SIZE_CAP) -> Fraction:
    c = c if isinstance(c, Cluster) else Cluster(tuple(c))
    return c.ursell(cap)


def multiplicity_connected_sum(mult: Sequence[int], edges) -> int:
    """Connected signed sum for a sequence holding ``mult[p]`` copies of support polymer p.

    ``edges`` is the conflict graph on the support; copies of one polymer
    conflict with each other.  Runs over count vectors instead of slot subsets.
    """
    k = len(mult)
    adj = [set() for _ in range(k)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    shape = tuple(x + 1 for x in mult)
    states = list(product(*(range(x) for x in shape)))

    def indep(s):
        on = [p for p in range(k) if s[p]]
        if any(s[p] > 1 for p in on):
            return False
        return all(q not in adj[p] for i, p in enumerate(on) for q in on[i + 1:])

    conn: dict = {}
    for s in states:
        if not any(s):
            continue
        p0 = next(p for p in range(k) if s[p])
        total = 1 if indep(s) else 0
        ranges = [range(1, s[p] + 1) if p == p0 else range(0, s[p] + 1) for p in range(k)]
        for t in product(*ranges):
            if t == s:
                continue
            rest = tuple(a - b for a, b in zip(s, t))
            if not indep(rest):
                continue
            ways = math.comb(s[p0] - 1, t[p0] - 1)
            for p in range(k):
                if p != p0:
                    ways *= math.comb(s[p], t[p])
            total -= ways * conn[t]
        conn[s] = total
    return conn[tuple(mult)]


def multiplicity_ursell(mult: Sequence[int], edges) -> Fraction:
    m = sum(mult)
    return Fraction(multiplicity_connected_sum(mult, edges), math.factorial(m))


def connected_supports(polymers: Sequence[Polymer], max_total_length: int):
    """Connected sets of distinct polymers with total length at most the cutoff (ESU order)."""
    n = len(polymers)
    lengths = [p.length for p in polymers]
    nbrs = [set() for _ in range(n)]
    for a, b in conflict_graph(polymers):
        nbrs[a].add(b)
        nbrs[b].add(a)

    def extend(sub, closed, ext, total, root):
        yield tuple(sub)
        ext = list(ext)
        while ext:
            w = ext.pop()
            if total + lengths[w] > max_total_length:
                continue
            new_ext = ext + [u for u in nbrs[w] if u > root and u not in closed]
            yield from extend(sub + [w], closed | nbrs[w] | {w}, new_ext, total + lengths[w], root)

    for r in range(n):
        if lengths[r] > max_total_length:
            continue
        yield from extend([r], nbrs[r] | {r}, [u for u in nbrs[r] if u > r], lengths[r], r)


def _multiplicities(lengths, budget):
    """Vectors X >= 1 with sum X_p * lengths_p <= budget."""
    def rec(i, left):
        if i == len(lengths):
            yield ()
            return
        x = 1
        while x * lengths[i] <= left:
            for rest in rec(i + 1, left - x * lengths[i]):
                yield (x,) + rest
            x += 1

    yield from rec(0, budget)


@dataclass
class LogSeries:
    value: object
    cutoff: int
    clusters: int
    tail_bound: float | None = None


def cluster_log_series(polymers, weights, max_total_length: int,
                       cap: int = 64) -> LogSeries:
    """Truncated sum over clusters of Ursell value times the weight product.

    Organized by support (a connected set of distinct polymers) and
    multiplicity vector X; each X contributes S(X) / prod X! * w^X where S is
    the connected signed sum of the sequence's conflict graph.
    """
    polymers = list(polymers)
    weights = list(weights)
    total = Fraction(0) if all(isinstance(w, (int, Fraction)) for w in weights) else 0
    count = 0
    for support in connected_supports(polymers, max_total_length):
        sub = [polymers[i] for i in support]
        edges = conflict_graph(sub)
        lengths = [p.length for p in sub]
        for mult in _multiplicities(lengths, max_total_length):
            m = sum(mult)
            if m > cap:
                raise SizeLimit(f"cluster size {m} exceeds cap {cap}")
            s = multiplicity_connected_sum(mult, edges)
            if not s:
                continue
            term = Fraction(s, math.prod(math.factorial(x) for x in mult))
            for i, x in zip(support, mult):
                term = term * weights[i] ** x
            total = total + term
            count += 1
    return LogSeries(total, max_total_length, count)


def series_log(coeffs: Sequence) -> list:
    """Power-series logarithm of sum c_n t^n with c_0 = 1, same truncation."""
    if coeffs[0] != 1:
        raise ValueError("series must start with 1")
    n = len(coeffs)
    out = [Fraction(0)] * n
    for k in range(1, n):
        acc = k * coeffs[k]
        for j in range(1, k):
            acc -= j * out[j] * coeffs[k - j]
        out[k] = Fraction(acc, k) if isinstance(acc, int) else acc / k
    return out


def independence_series(polymers, weights, max_total_length: int) -> list:
    """Hard-core sum graded by total length: coefficient list up to the cutoff."""
    polymers = list(polymers)
    order = sorted(range(len(polymers)), key=lambda i: min(polymers[i].vertex_set))
    coeffs = [Fraction(0)] * (max_total_length + 1)

    def rec(start, used, total, acc):
        coeffs[total] += acc
        for j in range(start, len(order)):
            i = order[j]
            p = polymers[i]
            if total + p.length > max_total_length or not used.isdisjoint(p.vertex_set):
                continue
            rec(j + 1, used | p.vertex_set, total + p.length, acc * weights[i])

    rec(0, frozenset(), 0, Fraction(1))
    return coeffs


def log_series_oracle(polymers, weights, max_total_length: int):
    """Truncated cluster series via the logarithm of the length-graded hard-core sum."""
    return sum(series_log(independence_series(polymers, weights, max_total_length)), Fraction(0))


# ---------------------------------------------------------------------------
# convergence criterion and tails


def weight_bound(length: int, d: int) -> float:
    """|W_d| <= (1/3)^((d+1) l - 1)."""
    return 3.0 ** (1 - (d + 1) * length)


@dataclass
class CriterionResult:
    holds: bool
    margin: float
    lhs: float
    method: str


def _neighbourhoods(family):
    """(lengths, closed conflict neighbourhoods); accepts polymers or a previous result."""
    if isinstance(family, tuple) and len(family) == 2 and isinstance(family[0], list):
        return family
    polymers = list(family)
    nbrs = [{i} for i in range(len(polymers))]
    for a, b in conflict_graph(polymers):
        nbrs[a].add(b)
        nbrs[b].add(a)
    return [p.length for p in polymers], nbrs


def ueltschi_criterion(family=None, d: int = 3, epsilon: float = 1.0, method: str = "bound",
                       tilt: float = 0.0) -> CriterionResult:
    """Check sup_phi (1/l) sum_{sigma conflicting} |w(sigma)| e^{eps l(sigma)} < eps.

    ``bound`` uses the per-site count 3(k+1)2^(k-2), giving
    9/2 (1/(1-x)^2 - 1) with x = 2 e^eps / 3^(d+1); ``enumeration`` counts the
    conflicting polymers of the family.  ``tilt`` multiplies weights by
    e^(tilt l), which is how tail bounds are obtained.
    """
    rate = epsilon + tilt
    if method == "bound":
        x = 2 * math.exp(rate) / 3 ** (d + 1)
        lhs = math.inf if x >= 1 else 4.5 * (1 / (1 - x) ** 2 - 1)
    elif method == "enumeration":
        lengths, nbrs = _neighbourhoods(family)
        lhs = 0.0
        for i, ln in enumerate(lengths):
            s = sum(weight_bound(lengths[j], d) * math.exp(rate * lengths[j]) for j in nbrs[i])
            lhs = max(lhs, s / ln)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CriterionResult(lhs < epsilon, epsilon - lhs, lhs, method)


def log_series_tail(polymers, d: int, cutoff: int, method: str = "enumeration") -> float:
    """Bound on the discarded cluster mass above the cutoff, from tilted criteria.

    If the criterion holds at rate eps for weights tilted by e^(delta l), the
    absolute cluster sum of the tilted weights is at most
    sum_phi |w| e^((eps+delta) l), so clusters longer than the cutoff carry at
    most e^(-delta(cutoff+1)) times that.  Minimised over an (eps, delta) grid.
    """
    polymers = list(polymers)
    graph = _neighbourhoods(polymers)
    best = math.inf
    for epsilon in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0):
        for delta in np.linspace(0.0, 12.0, 241):
            if not ueltschi_criterion(graph if method == "enumeration" else None, d, epsilon, method, tilt=float(delta)).holds:
                break
            mass = sum(weight_bound(p.length, d) * math.exp((epsilon + delta) * p.length) for p in polymers)
            best = min(best, math.exp(-delta * (cutoff + 1)) * mass)
    return best


def cutoff_for(polymers, d: int, tolerance: float, start: int = 1, limit: int = 200) -> int:
    """Smallest cutoff whose certified log-series tail is below ``tolerance``."""
    for c in range(start, limit + 1):
        if log_series_tail(polymers, d, c) <= tolerance:
            return c
    raise SizeLimit(f"no cutoff up to {limit} reaches tail {tolerance}")


@dataclass
class ExpIdentity:
    residual: float
    hardcore: Fraction
    log_series: float
    cutoff: int
    tail_bound: float
    clusters: int


def verify_exp_identity(polymers, weights, cutoff: int, d: int = 3,
                        hardcore_value: Fraction | None = None) -> ExpIdentity:
    """|hard-core sum - exp(truncated log series)| with a certified tail."""
    from .expansion import _hardcore_generic

    polymers = list(polymers)
    weights = [Fraction(w) for w in weights]
    if hardcore_value is None:
        hardcore_value = _hardcore_generic(polymers, weights, None).constant() if polymers else Fraction(1)
    series = cluster_log_series(polymers, weights, cutoff)
    with mpmath.workdps(60):
        s = mpmath.mpf(series.value.numerator) / series.value.denominator
        hc = mpmath.mpf(hardcore_value.numerator) / hardcore_value.denominator
        residual = abs(hc - mpmath.exp(s))
        dominated = all(abs(w) <= Fraction(1, 3) ** ((d + 1) * p.length - 1) for p, w in zip(polymers, weights))
        tail = (log_series_tail(polymers, d, cutoff) if dominated else math.inf) if polymers else 0.0
        tail_exp = float(mpmath.exp(s) * (mpmath.exp(tail) - 1)) if math.isfinite(tail) else math.inf
    return ExpIdentity(float(residual), hardcore_value, float(s), cutoff, tail_exp, series.clusters)


def malyshev_holds(mult: Sequence[int], lengths: Sequence[int], edges, kappa: float = KAPPA) -> bool:
    """|phi_c| <= (1/m!) prod X! e^{kappa l X} for one multiplicity vector."""
    m = sum(mult)
    lhs = abs(multiplicity_ursell(mult, edges))
    rhs = math.prod(math.factorial(x) * math.exp(kappa * l * x) for x, l in zip(mult, lengths)) / math.factorial(m)
    return float(lhs) <= rhs


# ---------------------------------------------------------------------------
# restricted sums over clusters touching the inner boundary


def seiler_ratio(beta: float, mu: float = MU, kappa: float = KAPPA) -> float:
    a = math.exp(kappa - beta + math.log(mu) + 1)
    if a >= 1 or kappa >= beta:
        return math.inf
    return a / ((1 - a) * (1 - math.exp(kappa - beta)))


def seiler_bound(boundary_size: int, beta: float) -> float:
    r = seiler_ratio(beta)
    return math.inf if r >= 1 else boundary_size * r / (1 - r)


def seiler_tail(boundary_size: int, beta: float, cutoff: int) -> float:
    """Clusters longer than the cutoff, via the bound at a tilted decay rate."""
    best = math.inf
    beta_min = threshold_beta(0.0)
    for delta in np.linspace(0.0, max(beta - beta_min, 0.0), 200, endpoint=False):
        b = seiler_bound(boundary_size, beta - float(delta))
        best = min(best, math.exp(-float(delta) * (cutoff + 1)) * b)
    return best


@dataclass
class RestrictedBound:
    K: int
    N: int
    d: int
    alpha: float
    epsilon: float
    cutoff: int
    truncated_sum: float
    paper_bound: float
    tail_bound: float
    series: list

    @property
    def holds(self) -> bool:
        return self.truncated_sum <= self.paper_bound


def _graded_signed_counts(polymers, cutoff: int, budget: int) -> list[int]:
    """a_L = sum over hard-core subsets of total length L of (-1)^size."""
    if not polymers:
        return [1] + [0] * cutoff
    from .expansion import _enumerate

    (_, hist, _), _ = _enumerate(polymers, 0, cutoff, budget, force_aggregate=True)
    out = [0] * (cutoff + 1)
    for n in range(hist.shape[0]):
        for L in range(min(hist.shape[1], cutoff + 1)):
            if hist[n, L]:
                out[L] += (-1) ** n * int(hist[n, L])
    return out


def restricted_series_from_family(polymers, boundary, cutoff: int, budget: int | None = None) -> list[Fraction]:
    """Per-length sums of |phi_c| over clusters touching ``boundary``, from an explicit family.

    Hard-core Ursell values alternate as (-1)^(m-1), so with weights u^l the
    absolute sum is -log Xi(-u) restricted to clusters meeting the boundary,
    which is a difference of two logarithms of graded hard-core sums.
    """
    budget = _kernels.node_budget() if budget is None else budget
    polymers = [p for p in polymers if p.length <= cutoff]
    away = [p for p in polymers if p.vertex_set.isdisjoint(boundary)]
    full = series_log(_graded_signed_counts(polymers, cutoff, budget))
    rest = series_log(_graded_signed_counts(away, cutoff, budget))
    return [-(a - b) for a, b in zip(full, rest)]


def restricted_series(N: int, K: int, cutoff: int) -> list[Fraction]:
    """Same quantity for the interior family of the (N, K) annulus, via frontier sweeps."""
    from .expansion import length_series

    boundary = build_volume(ORIGIN, K, 0).boundary
    full = series_log(length_series(N, K, cutoff))
    rest = series_log(length_series(N, K, cutoff, avoid=boundary))
    return [-(a - b) for a, b in zip(full, rest)]


def restricted_cluster_bound(K: int, d: int, alpha: float, epsilon: float, cutoff: int,
                             N: int | None = None) -> RestrictedBound:
    """Truncated sum over clusters touching the inner boundary with weights e^{-(d ln 3 - alpha) l}.

    ``N`` defaults to K + 1, the annulus where short walks to the outer
    boundary make the truncated sum largest.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    beta = d * math.log(3) - alpha
    if beta < threshold_beta(epsilon) - 1e-12:
        raise ThresholdViolation(f"decay rate {beta:.6f} below threshold {threshold_beta(epsilon):.6f}")
    N = K + 1 if N is None else N
    coeffs = restricted_series(N, K, cutoff)
    with mpmath.workdps(40):
        total = mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * mpmath.exp(-beta * L)
                            for L, c in enumerate(coeffs))
    size = 6 * K
    return RestrictedBound(K, N, d, alpha, epsilon, cutoff, float(total),
                           seiler_bound(size, beta), seiler_tail(size, beta, cutoff), coeffs)
