"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

Run just this file with ``pytest tests/test_acceptance.py -v -s`` to see the
verdict lines inline; they are also collected in the terminal summary.
"""

import math
import random
import time
from fractions import Fraction

import pytest
import sympy as sp

import oracles
from loopgas.cluster import (
    cluster_log_series,
    cutoff_for,
    restricted_cluster_bound,
    ueltschi_criterion,
    verify_exp_identity,
)
from loopgas.constants import (
    alpha,
    alpha_sign,
    cluster_ratio,
    entropy_bound,
    F_alpha,
    log_C_alpha,
    lr_check,
)
from loopgas.expansion import (
    Z_observable,
    averaged_boundary_sum,
    cycle_space_partition_function,
    edge_symbol,
    indistinguishability_gaps,
    partition_function,
    sample_assignment,
)
from loopgas.lattice import (
    ORIGIN,
    A,
    B,
    boundary_size,
    build_volume,
    corners,
    partition_disjoint,
    separating_partition,
    volume_size,
)
from loopgas.polymer import INTERIOR, BULK, enumerate_family, make_walk, verify_counts
from loopgas.spherecalc import DotPoly, integral_weight, integrate_out, weight
from loopgas.symbols import (
    coordinate_operator,
    edge_operator_norm,
    from_matrix,
    matrix_element,
    matrix_norm,
    normal_order,
    operator_norm,
    pi,
    symbol,
    symbol_matrix_element,
    symbol_sup,
    tensor,
    Z,
)

pytestmark = pytest.mark.acceptance


def test_01_counting_exactness(report):
    t = time.perf_counter()
    bad = []
    for n in range(1, 9):
        for d in range(5):
            region = build_volume(ORIGIN, n, d)
            if len(region.vertices) != volume_size(n, d) or boundary_size(region) != 6 * n:
                bad.append((n, d))
    elapsed = time.perf_counter() - t
    ok = not bad and elapsed < 5
    report(1, ok, f"40 volumes, mismatches={bad}, {elapsed:.2f}s (limit 5s)")
    assert ok


def test_02_partition_audit(report):
    t = time.perf_counter()
    sizes = all(len(separating_partition(n, 0).index_set) == 4 * n * n for n in range(1, 5))
    disjoint = {(n, d): partition_disjoint(separating_partition(n, 6 * n), d) for n in (2, 3) for d in (0, 1)}
    elapsed = time.perf_counter() - t
    ok = sizes and all(disjoint.values()) and elapsed < 30
    report(2, ok, f"index sizes 4n^2 n<=4: {sizes}; disjoint {disjoint}; {elapsed:.1f}s (limit 30s)")
    assert ok


def test_03_polymer_counting_lemmas(report):
    t = time.perf_counter()
    r = verify_counts(N=3, K=1, k_max=8, small_max=4)
    elapsed = time.perf_counter() - t
    ok = r["lattice_bound_holds"] and r["small_bound_holds"] and elapsed < 120
    report(3, ok, f"per-site k<=8 counts {r['lattice_counts']}; small-walk maxima {r['class_maxima']}; {elapsed:.1f}s (limit 120s)")
    assert ok


def _quartic_identity() -> bool:
    # int (W.a)(W.b)(W.c)(W.e) dW = [(a.b)(c.e) + (a.c)(b.e) + (a.e)(b.c)] / 15
    w, a, b, c, e = 0, 1, 2, 3, 4
    prod = DotPoly.dot(w, a) * DotPoly.dot(w, b) * DotPoly.dot(w, c) * DotPoly.dot(w, e)
    expected = (DotPoly.dot(a, b) * DotPoly.dot(c, e) + DotPoly.dot(a, c) * DotPoly.dot(b, e)
                + DotPoly.dot(a, e) * DotPoly.dot(b, c)).scale(Fraction(1, 15))
    return integrate_out(prod, w) == expected


def test_04_weight_integral_oracle(report):
    t = time.perf_counter()
    checked = 0
    mismatched = 0
    for d, max_len in ((0, 12), (1, 6), (2, 4), (3, 3)):
        polymers = set(enumerate_family(2, 1, d, INTERIOR, max_length=max_len))
        polymers |= set(enumerate_family(3, 0, d, BULK, max_length=max_len))
        for p in polymers:
            checked += 1
            mismatched += weight(p) != integral_weight(p)
    one_step = integrate_out(DotPoly.dot(0, 1) * DotPoly.dot(1, 2), 1) == DotPoly.dot(0, 2, Fraction(1, 3))
    quartic = _quartic_identity()
    elapsed = time.perf_counter() - t
    ok = checked > 0 and mismatched == 0 and one_step and quartic and elapsed < 60
    report(4, ok, f"{checked} polymers, {mismatched} mismatches; two-factor rule {one_step}; "
                  f"quartic moment {quartic}; {elapsed:.1f}s (limit 60s)")
    assert ok


def test_05_hardcore_representation(report, monkeypatch):
    # (3,0) visits ~5e8 DFS nodes for 2^19 subsets, above the default budget
    monkeypatch.setenv("LOOPGAS_NODE_BUDGET", "5e9")
    t = time.perf_counter()
    results = {}
    for n, d in ((1, 0), (1, 1), (2, 0), (2, 1), (3, 0)):
        results[(n, d)] = partition_function(n, d, "hardcore") == cycle_space_partition_function(n, d)
    z1 = partition_function(1, 0, "hardcore")
    golden = z1 == Fraction(1 + Fraction(1, 3**5), 64) == oracles.ring_partition_function(6)
    elapsed = time.perf_counter() - t
    ok = all(results.values()) and golden and elapsed < 600
    report(5, ok, f"hard-core == cycle space {results}; Z_1 = {z1} = (1+3^-5)/64: {golden}; {elapsed:.1f}s (limit 600s)")
    assert ok


def test_06_bulk_boundary_consistency(report):
    t = time.perf_counter()
    rows = {}
    for name, obs in (("1", DotPoly.const(1)), ("edge", edge_symbol(A(0, 0), B(0, 0)))):
        rows[name] = averaged_boundary_sum(obs, 2, 1, 0) == Z_observable(obs, 2, 1, 0)
    elapsed = time.perf_counter() - t
    ok = all(rows.values()) and elapsed < 300
    report(6, ok, f"boundary average equals bulk sum exactly: {rows}; {elapsed:.1f}s (limit 300s)")
    assert ok


def _family(n, k, variant, max_length, count, seed):
    fam = sorted(enumerate_family(n, k, 0, variant, max_length=max_length), key=lambda p: (p.length, str(p)))
    return random.Random(seed).sample(fam, min(count, len(fam)))


def test_07_cluster_identity(report):
    t = time.perf_counter()
    d = 3
    rows = []
    for n, k, variant, max_length, count in ((2, 1, INTERIOR, 6, 12), (3, 1, INTERIOR, 4, 12), (2, 1, INTERIOR, 4, 20)):
        chosen = _family(n, k, variant, max_length, count, seed=n + k + count)
        weights = [Fraction(-1, 3) ** ((d + 1) * p.length - 1) for p in chosen]
        cutoff = cutoff_for(chosen, d, 1e-10)
        r = verify_exp_identity(chosen, weights, cutoff, d)
        rows.append((len(chosen), cutoff, r.residual, r.tail_bound))
    fam_ok = all(res <= 1e-9 and res <= tail for _, _, res, tail in rows)

    # a single polymer: the series is the Taylor polynomial of log(1 + w)
    p = make_walk([A(0, 0), B(0, 0)])
    w = Fraction(-1, 3) ** 3
    cutoff = 7
    value = cluster_log_series([p], [w], cutoff).value
    taylor = sum(Fraction((-1) ** (m - 1), m) * w**m for m in range(1, cutoff + 1))
    remainder = abs(math.log1p(float(w)) - float(value))
    single_ok = value == taylor and remainder <= abs(float(w)) ** (cutoff + 1) / (1 - abs(float(w)))
    elapsed = time.perf_counter() - t
    ok = fam_ok and single_ok and elapsed < 120
    detail = "; ".join(f"{m} polymers cutoff {c} residual {res:.1e} <= tail {tail:.1e}" for m, c, res, tail in rows)
    report(7, ok, f"{detail}; single polymer exact Taylor {value == taylor}, remainder {remainder:.1e}; {elapsed:.1f}s (limit 120s)")
    assert ok


def test_08_convergence_criterion(report):
    t = time.perf_counter()
    good = ueltschi_criterion(None, 3, 1.0)
    bad = ueltschi_criterion(None, 0, 1.0)
    elapsed = time.perf_counter() - t
    ok = good.holds and not bad.holds and elapsed < 1
    report(8, ok, f"(eps,d)=(1,3) lhs {good.lhs:.4f} < 1: {good.holds}; (1,0) holds: {bad.holds}; {elapsed:.3f}s (limit 1s)")
    assert ok


def test_09_constants_golden(report):
    t = time.perf_counter()
    a5 = alpha(5)
    r, ratio = cluster_ratio(0.03)
    ref = oracles.threshold_constants(5)
    entropy = all(
        math.isclose(entropy_bound(n, k, 5), F_alpha(n, k, 5))
        and 17 * boundary_size(build_volume(ORIGIN, k, 0)) == 102 * k
        for k in range(1, 5) for n in range(k + 1, k + 4)
    )
    signs = (alpha_sign(4), alpha_sign(5))
    log_c = log_C_alpha(5)
    elapsed = time.perf_counter() - t
    checks = {
        "alpha(5)": abs(a5 - 0.0032) <= 5e-4 and math.isclose(a5, ref["alpha"], rel_tol=1e-9),
        "r": abs(r - 0.9424) <= 1e-3 and math.isclose(r, ref["r"], rel_tol=1e-12),
        "r/(1-r)<17": ratio < 17,
        "102k=17*6k": entropy,
        "signs": signs == (-1, 1),
        "C_alpha": math.isfinite(log_c) and log_c > 0,
    }
    ok = all(checks.values()) and elapsed < 1
    report(9, ok, f"alpha(5)={a5:.7f} r={r:.6f} r/(1-r)={ratio:.3f} interval signs d=4,5 {signs} "
                  f"log C_alpha(5)={log_c:.2f}; {checks}; {elapsed:.3f}s (limit 1s)")
    assert ok


def test_10_symbol_example(report):
    t = time.perf_counter()
    op = normal_order("du u", 2, sp.Rational(1, 3))
    norm = operator_norm(op)
    sup, how = symbol_sup(symbol(op))
    powers = {}
    for n in range(1, 6):
        M, G = tensor(*[op] * n)
        pn = matrix_norm(M, G)
        sym_at_pole = symbol(op).expr.subs(Z, 1) ** n
        powers[n] = abs(float(pn) - 1) < 1e-9 and sym_at_pole == sp.Rational(4, 3) ** n and sup**n == sp.Rational(4, 3) ** n
    exact_pairs = True
    rng = random.Random(10)
    for m in (2, 3):
        ops = [coordinate_operator(ax, m) for ax in "xyz"] + [pi(g, m) for g in "3+-"]
        ops.append(from_matrix(sp.Matrix(m + 1, m + 1, lambda i, j: sp.Rational(rng.randint(-5, 5), rng.randint(1, 4))), m))
        if m == 2:
            ops.append(op)
        for o in ops:
            for a in range(m + 1):
                for b in range(m + 1):
                    exact_pairs &= sp.simplify(matrix_element(o, a, b) - symbol_matrix_element(o, a, b)) == 0
    elapsed = time.perf_counter() - t
    ok = norm == 1 and sup == sp.Rational(4, 3) and how == "exact" and all(powers.values()) and exact_pairs and elapsed < 10
    report(10, ok, f"norm {norm}, sup {sup} ({how}); (4/3)^n scaling n<=5 {powers}; "
                   f"matrix entries exact on H2, H3: {exact_pairs}; {elapsed:.1f}s (limit 10s)")
    assert ok


def test_11_indistinguishability_desk_scale(report):
    t = time.perf_counter()
    norm = edge_operator_norm(3, 3)
    cs = corners(ORIGIN)
    observables = [edge_symbol(cs[i], cs[(i + 1) % 6]) for i in range(6)]
    worst = {}
    bounded = True
    for N in (2, 3):
        rng = random.Random(2024 + N)
        gaps = []
        for _ in range(20):
            samples = indistinguishability_gaps(observables, N, 1, 0, sample_assignment(N, 0, rng),
                                                strict=False, norm=Fraction(norm))
            for s in samples:
                bounded &= s.gap <= Fraction(norm) * s.l1_lower
                gaps.append(s.gap)
        worst[N] = max(gaps)
    elapsed = time.perf_counter() - t
    monotone = worst[3] <= worst[2]
    ok = bounded and monotone and elapsed < 1800
    report(11, ok, f"max gap N=2 {float(worst[2]):.3e}, N=3 {float(worst[3]):.3e} (non-increasing {monotone}); "
                   f"every gap <= ||A||*L1 lower bound, ||A||={norm}: {bounded}; 2x20 samples x 6 edges; {elapsed:.0f}s (limit 1800s)")
    assert ok


def test_12_restricted_cluster_bound(report):
    t = time.perf_counter()
    r = restricted_cluster_bound(1, 5, alpha(5), 0.03, 14)
    _, ratio = cluster_ratio(0.03)
    target = boundary_size(build_volume(ORIGIN, 1, 0)) * ratio
    elapsed = time.perf_counter() - t
    ok = r.truncated_sum <= target and math.isclose(r.paper_bound, target, rel_tol=1e-9) and elapsed < 600
    report(12, ok, f"truncated sum {r.truncated_sum:.4e} <= |boundary| r/(1-r) = {target:.4f} (cutoff 14, d=5); {elapsed:.1f}s (limit 600s)")
    assert ok


LR_PAIRS = {
    0: ((A(0, 0), B(0, 0)), (A(0, 0), B(2, 1)), (A(0, 0), A(3, -1))),
    1: ((A(0, 0), B(1, 0)), (B(0, 0), A(2, 2)), (A(0, 0), B(-2, 1))),
    2: ((A(0, 0), A(1, 0)), (B(0, 0), B(-1, 2)), (A(0, 0), B(3, 3))),
}


def test_13_lieb_robinson_summability(report):
    t = time.perf_counter()
    failures = []
    count = 0
    for params in ((1.0, 0.5, 1.0, 0), (1.0, 0.5, 0.5, 2)):
        for d, pairs in LR_PAIRS.items():
            for x, y in pairs:
                count += 1
                c = lr_check(x, y, d, *params)
                if not c.holds:
                    failures.append((str(x), str(y), d, params))
    elapsed = time.perf_counter() - t
    ok = not failures and elapsed < 60
    report(13, ok, f"{count} checks (9 pairs x 2 parameter sets), failures {failures}; {elapsed:.1f}s (limit 60s)")
    assert ok
