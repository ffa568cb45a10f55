"""Command-line front end; every subcommand prints one JSON document."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
import time
from fractions import Fraction

import sympy as sp

EXIT_RESOURCE = 3
EXIT_CONSISTENCY = 4


class Failure(Exception):
    """Internal consistency failure carrying the partial report."""

    def __init__(self, report):
        super().__init__("consistency check failed")
        self.report = report


def jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        return x if math.isfinite(x) else str(x)
    if isinstance(x, sp.Basic):
        return str(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item"):
        return jsonable(x.item())
    return str(x)


# ---------------------------------------------------------------------------
# subcommands; each returns the "outputs" part of the report


def lattice_stats(args):
    from .lattice import ORIGIN, DualSite, build_volume, volume_size

    center = DualSite(*args.center) if args.center else ORIGIN
    r = build_volume(center, args.n, args.d)
    out = {
        "vertices": len(r.vertices),
        "edges": len(r.edges),
        "boundary": len(r.boundary),
        "vertices_formula": volume_size(args.n, args.d),
        "boundary_formula": 6 * args.n,
        "method": "exact",
    }
    if out["vertices"] != out["vertices_formula"] or out["boundary"] != out["boundary_formula"]:
        raise Failure(out)
    return out


def polymer_enumerate(args):
    from .polymer import enumerate_family

    fam = enumerate_family(args.n, args.k, args.d, args.variant, max_length=args.max_length)
    by_length: dict = {}
    kinds: dict = {}
    for p in fam:
        by_length[p.length] = by_length.get(p.length, 0) + 1
        kinds[p.kind] = kinds.get(p.kind, 0) + 1
    out = {"total": len(fam), "by_length": dict(sorted(by_length.items())), "by_kind": kinds, "method": "exact"}
    if args.polymers:
        out["polymers"] = [p.to_dict() for p in fam]
    return out


def polymer_verify_counts(args):
    from .polymer import verify_counts

    out = verify_counts(args.n, args.k, args.k_max)
    out["method"] = "exact"
    if not (out["lattice_bound_holds"] and out["small_bound_holds"]):
        raise Failure(out)
    return out


def weights_check(args):
    from .polymer import enumerate_family
    from .spherecalc import integral_weight, weight

    fam = enumerate_family(args.n, args.k, args.d, args.variant, max_length=args.max_length)
    checked = mismatched = 0
    for p in fam:
        if len(p.edges) > args.max_edges:
            continue
        checked += 1
        if weight(p) != integral_weight(p):
            mismatched += 1
    out = {"checked": checked, "mismatched": mismatched, "method": "exact"}
    if mismatched:
        raise Failure(out)
    return out


def expansion_z(args):
    from .expansion import Z_bulk, Z_observable, cycle_space_partition_function, direct_partition_function
    from .spherecalc import DotPoly

    if args.method == "cycle":
        z = cycle_space_partition_function(args.n, args.d)
        return {"value": z, "num": str(z.numerator), "den": str(z.denominator), "method": "exact"}
    if args.method == "direct":
        z = direct_partition_function(args.n, args.d)
        return {"value": z, "num": str(z.numerator), "den": str(z.denominator), "method": "exact"}
    if args.k:
        z = Z_observable(DotPoly.const(1), args.n, args.k, args.d)
        return {"value": z, "num": str(z.numerator), "den": str(z.denominator), "method": "exact"}
    s = Z_bulk(args.n, 0, args.d, args.method)
    c = s.value.constant()
    # keep the unreduced form hard-core-sum / 2^edges
    return {
        "value": c / 2**s.prefactor_log2,
        "num": str(c.numerator),
        "den": str(c.denominator * 2**s.prefactor_log2),
        "method": "exact",
    }


def expansion_compare(args):
    from .expansion import (
        cycle_space_partition_function,
        direct_partition_function,
        partition_function,
    )

    values = {
        "hardcore": partition_function(args.n, args.d, "hardcore"),
        "frontier": partition_function(args.n, args.d, "frontier"),
        "cycle_space": cycle_space_partition_function(args.n, args.d),
    }
    if args.direct:
        values["direct"] = direct_partition_function(args.n, args.d)
    out = {"values": values, "agree": len(set(values.values())) == 1, "method": "exact"}
    if not out["agree"]:
        raise Failure(out)
    return out


def cluster_verify_exp(args):
    from .cluster import cutoff_for, verify_exp_identity
    from .polymer import enumerate_family

    fam = sorted(enumerate_family(args.n, args.k, 0, args.variant, max_length=args.max_length),
                 key=lambda p: (p.length, str(p)))
    rng = random.Random(args.seed)
    chosen = fam if args.polymers >= len(fam) else rng.sample(fam, args.polymers)
    weights = [Fraction(-1, 3) ** ((args.d + 1) * p.length - 1) for p in chosen]
    cutoff = args.cutoff or cutoff_for(chosen, args.d, args.tolerance)
    r = verify_exp_identity(chosen, weights, cutoff, args.d)
    out = {
        "polymers": len(chosen),
        "cutoff": cutoff,
        "residual": r.residual,
        "tail_bound": r.tail_bound,
        "clusters": r.clusters,
        "hardcore": r.hardcore,
        "log_series": r.log_series,
        "method": "truncated+tail",
    }
    if r.residual > r.tail_bound:
        raise Failure(out)
    return out


def cluster_bound(args):
    from .cluster import restricted_cluster_bound
    from .constants import alpha

    a = alpha(args.d, args.eps) if args.alpha is None else args.alpha
    r = restricted_cluster_bound(args.k, args.d, a, args.eps, args.cutoff, N=args.n)
    out = {
        "sum": r.truncated_sum,
        "bound": r.paper_bound,
        "cutoff": r.cutoff,
        "tail_bound": r.tail_bound,
        "margin": r.paper_bound - r.truncated_sum,
        "N": r.N,
        "K": r.K,
        "series": r.series,
        "method": "truncated+tail",
    }
    if not r.holds:
        raise Failure(out)
    return out


def constants_report_cmd(args):
    from .constants import constants_report

    out = constants_report(args.d, args.eps).to_dict()
    out["method"] = "float+interval"
    return out


def symbols_demo(args):
    from .symbols import edge_operator_norm, normal_order, operator_norm, symbol, symbol_sup

    A = normal_order("du u", 2, sp.Rational(1, 3))
    sym = symbol(A)
    sup, how = symbol_sup(sym)
    norm = operator_norm(A)
    return {
        "operator": "(1/3) du u on degree 2",
        "normal_form": [list(t) for t in A.normal_form],
        "symbol": str(sym.expr),
        "norm": norm,
        "sup": sup,
        "tensor_powers": {str(n): {"norm": norm**n, "sup": sup**n} for n in range(1, args.powers + 1)},
        "edge_observable_norm_degree3": edge_operator_norm(3, 3),
        "method": "exact" if how == "exact" else how,
    }


def audit_stability(args):
    from .constants import (
        alpha,
        alpha_sign,
        lr_check,
        ltqo_grid_check,
        ltqo_summable,
        regularity_holds,
    )
    from .lattice import A, B, partition_disjoint, separating_partition

    partition = {}
    for n in range(1, 5):
        partition[f"index_size_{n}"] = len(separating_partition(n, 0).index_set) == 4 * n * n
    for n in args.partition_n:
        partition[f"disjoint_{n}"] = partition_disjoint(separating_partition(n, 6 * n), args.d)
    ltqo = {
        "alpha": alpha(args.d),
        "alpha_sign": alpha_sign(args.d),
        "grid": ltqo_grid_check(args.d) if alpha(args.d) > 0 else False,
        "summable": ltqo_summable(args.d),
    }
    lr = []
    for x, y in ((A(0, 0), B(0, 0)), (A(0, 0), B(2, 1)), (A(0, 0), A(3, -1))):
        c = lr_check(x, y, min(args.d, 2), 1.0, 0.5, 1.0, 0.0)
        lr.append({"x": c.x, "y": c.y, "lhs": c.lhs, "lhs_tail": c.lhs_tail, "rhs": c.rhs, "holds": c.holds})
    out = {
        "regularity": regularity_holds(),
        "partition": partition,
        "local_gap": "not computed",
        "ltqo": ltqo,
        "interaction_decay": lr,
        "method": "exact",
    }
    out["all_hold"] = bool(out["regularity"] and all(partition.values()) and ltqo["grid"]
                           and ltqo["summable"] and all(c["holds"] for c in lr))
    return out


# ---------------------------------------------------------------------------


def _pair(text: str):
    k, l = text.split(",")
    return int(k), int(l)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopgas", description=__doc__)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, help="node budget for exhaustive enumerations")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte equality)")
    groups = p.add_subparsers(dest="group", required=True)

    def cmd(group, name, fn, *opts):
        g = groups.choices.get(group) or groups.add_parser(group)
        if not hasattr(g, "_sub"):
            g._sub = g.add_subparsers(dest="command", required=True)
        c = g._sub.add_parser(name)
        for args, kwargs in opts:
            c.add_argument(*args, **kwargs)
        c.set_defaults(fn=fn)
        return c

    n = (("--n",), {"type": int, "required": True})
    k = (("--k",), {"type": int, "default": 0})
    d = (("--d",), {"type": int, "default": 0})
    variant = (("--variant",), {"choices": ("bulk", "interior"), "default": "bulk"})
    cmd("lattice", "stats", lattice_stats, n, d, (("--center",), {"type": _pair}))
    cmd("polymer", "enumerate", polymer_enumerate, n, k, d, variant,
        (("--max-length",), {"type": int}), (("--polymers",), {"action": "store_true"}))
    cmd("polymer", "verify-counts", polymer_verify_counts, (("--n",), {"type": int, "default": 3}),
        (("--k",), {"type": int, "default": 1}), (("--k-max",), {"type": int, "default": 8}))
    cmd("weights", "check", weights_check, (("--n",), {"type": int, "default": 2}), k, d, variant,
        (("--max-length",), {"type": int, "default": 6}), (("--max-edges",), {"type": int, "default": 12}))
    cmd("expansion", "z", expansion_z, n, k, d,
        (("--method",), {"choices": ("auto", "hardcore", "frontier", "cycle", "direct"), "default": "auto"}))
    cmd("expansion", "compare", expansion_compare, n, d, (("--direct",), {"action": "store_true"}))
    cmd("cluster", "verify-exp", cluster_verify_exp, (("--n",), {"type": int, "default": 2}), k,
        (("--d",), {"type": int, "default": 3}), (("--variant",), {"choices": ("bulk", "interior"), "default": "interior"}),
        (("--max-length",), {"type": int, "default": 6}), (("--polymers",), {"type": int, "default": 3}),
        (("--cutoff",), {"type": int}), (("--tolerance",), {"type": float, "default": 1e-10}))
    cmd("cluster", "bound", cluster_bound, (("--k",), {"type": int, "default": 1}),
        (("--d",), {"type": int, "default": 5}), (("--eps",), {"type": float, "default": 0.03}),
        (("--alpha",), {"type": float}), (("--cutoff",), {"type": int, "default": 14}), (("--n",), {"type": int}))
    cmd("constants", "report", constants_report_cmd, (("--d",), {"type": int, "default": 5}),
        (("--eps",), {"type": float, "default": 0.03}))
    cmd("symbols", "demo", symbols_demo, (("--powers",), {"type": int, "default": 5}))
    cmd("audit", "stability", audit_stability, (("--d",), {"type": int, "default": 5}),
        (("--partition-n",), {"type": int, "nargs": "*", "default": [2]}))
    return p


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k in sorted(x):
            _flatten(f"{prefix}.{k}" if prefix else str(k), x[k], rows)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, x))


def render(report: dict, fmt: str) -> str:
    report = jsonable(report)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("key", "value"))
    rows: list = []
    _flatten("", report, rows)
    w.writerows(rows)
    return buf.getvalue()


def main(argv=None) -> int:
    from .expansion import ConsistencyError
    from .polymer import ResourceLimit

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is not None:
        os.environ["LOOPGAS_NODE_BUDGET"] = str(args.budget)
    inputs = {k: v for k, v in vars(args).items() if k not in ("fn", "out", "format", "timings")}
    report = {"command": f"{args.group} {args.command}", "inputs": inputs}
    start = time.perf_counter()
    code = 0
    try:
        report["outputs"] = args.fn(args)
        report["status"] = "ok"
    except ResourceLimit as e:
        report["status"] = "resource-limit"
        report["error"] = str(e)
        report["partial"] = e.progress
        code = EXIT_RESOURCE
    except (ValueError, KeyError) as e:
        parser.print_usage(sys.stderr)
        print(f"loopgas: error: {e}", file=sys.stderr)
        return 2
    except Failure as e:
        report["status"] = "consistency-failure"
        report["outputs"] = e.report
        code = EXIT_CONSISTENCY
    except ConsistencyError as e:
        report["status"] = "consistency-failure"
        report["error"] = str(e)
        code = EXIT_CONSISTENCY
    if args.timings:
        report["seconds"] = round(time.perf_counter() - start, 3)
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
