"""Command-line entry point: elections, cat-state sharing, verification.

All commands emit JSON (floats printed with 17 significant digits so runs
are reproducible byte for byte) and use the exit-code contract 0 = success,
1 = verification or invariant failure, 2 = usage error.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .election import elect, elect_with_bound
from .ghz import ghz_share
from .postelect import BUILTIN_FUNCTIONS, compute_function
from .runtime import run_classical
from .subroutines import all_zeros_flooding, consistency_from_all_zeros
from .topology import CATALOG_NAMES, Topology, catalog, load_graph_file
from .verify import SUITES, run_suites


def _fmt(value) -> str:
    """Render a JSON value with deterministic 17-significant-digit floats."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "null"
    if isinstance(value, str):
        import json
        return json.dumps(value)
    if isinstance(value, dict):
        inner = ", ".join(f"{_fmt(str(k))}: {_fmt(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _emit(payload, path) -> None:
    text = _fmt(payload) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_topology(args) -> Topology:
    if args.graph:
        return load_graph_file(args.graph)
    if args.catalog:
        if args.n is None:
            raise SystemExit2("--catalog needs --n")
        return catalog(args.catalog, args.n[0] if isinstance(args.n, list) else args.n)
    raise SystemExit2("supply --graph FILE or --catalog NAME --n N")


class SystemExit2(SystemExit):
    def __init__(self, message: str):
        sys.stderr.write(f"error: {message}\n")
        super().__init__(2)


def _add_graph_args(parser, multi_n: bool = False) -> None:
    parser.add_argument("--graph", help="graph file (n/e/p records)")
    parser.add_argument("--catalog", choices=CATALOG_NAMES, help="catalog graph family")
    if multi_n:
        parser.add_argument("--n", type=int, nargs="+", help="party count(s)")
    else:
        parser.add_argument("--n", type=int, help="party count")
    parser.add_argument("--out", help="write JSON here instead of stdout")


def cmd_elect(args) -> int:
    topo = _load_topology(args)
    if args.upper_bound is not None:
        result = elect_with_bound(topo, args.upper_bound, seed=args.seed,
                                  all_branches=args.all_branches)
    else:
        result = elect(topo, seed=args.seed, all_branches=args.all_branches)
    payload = result.to_json()
    bad = [b for b in result.branches if b.leader_count != 1]
    payload["unique_leader_in_every_branch"] = not bad
    _emit(payload, args.out)
    return 0 if not bad else 1


def cmd_ghz(args) -> int:
    topo = _load_topology(args)
    result = ghz_share(topo, args.k, seed=args.seed, all_branches=args.all_branches)
    _emit(result.to_json(), args.out)
    return 0


def cmd_compute(args) -> int:
    topo = _load_topology(args)
    inputs = [int(tok) for tok in args.inputs.split(",")]
    fn = BUILTIN_FUNCTIONS[args.fn]
    run = compute_function(topo, inputs, fn, seed=args.seed)
    payload = {
        "function": args.fn,
        "inputs": inputs,
        "value": run.value,
        "values": list(run.values),
        "leader": run.leader,
        "ids": list(run.tree.ids),
        "cost": run.cost.to_json(),
    }
    _emit(payload, args.out)
    return 0


def cmd_cost_table(args) -> int:
    rows = []
    sizes = args.n or []
    if args.graph:
        graphs = [("file", load_graph_file(args.graph))]
    else:
        if not (args.catalog and sizes):
            raise SystemExit2("cost-table needs --catalog NAME --n N [N ...] or --graph FILE")
        graphs = [(f"{args.catalog}-{n}", catalog(args.catalog, n)) for n in sizes]
    for label, topo in graphs:
        n = topo.n
        zeros = all_zeros_flooding(n)
        cons = consistency_from_all_zeros(zeros)
        _, h0_cost, _ = run_classical(topo, zeros.program, [0] * n)
        _, cs_cost, _ = run_classical(topo, cons.program, [(0, 1)] * n)
        from .election import exactly_one_algorithm
        from .qsim import SparseState, layout
        from .subroutines import TRUE
        proc = exactly_one_algorithm(topo)
        key = tuple(sym for _v in range(n) for sym in (0, TRUE))
        state = SparseState(layout(n, [("bit", 2), ("res", 2)]), {key: 1.0 + 0j})
        _, h1_cost = proc.apply(state, "bit", "res", run_cache={})
        result = elect(topo, all_branches=True)
        rows.append({
            "graph": label,
            "n": n,
            "m": topo.m,
            "h0_rounds": h0_cost.rounds, "h0_qubits": h0_cost.qubits_sent,
            "cs_rounds": cs_cost.rounds, "cs_qubits": cs_cost.qubits_sent,
            "h1_rounds": h1_cost.rounds, "h1_qubits": h1_cost.qubits_sent,
            "qle_rounds": result.cost.rounds, "qle_qubits": result.cost.qubits_sent,
            "qle_rounds_over_n": result.cost.rounds / n,
            "qle_qubits_over_mn2": result.cost.qubits_sent / (topo.m * n * n),
            "identity_qle_eq_2h0_plus_2h1":
                result.cost.qubits_sent == 2 * h0_cost.qubits_sent + 2 * h1_cost.qubits_sent,
        })
    if args.out and args.out.endswith(".csv"):
        cols = list(rows[0])
        lines = [",".join(cols)]
        for row in rows:
            lines.append(",".join(
                format(row[c], ".17g") if isinstance(row[c], float) else str(row[c])
                for c in cols))
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        _emit({"rows": rows}, args.out)
    return 0


def cmd_verify(args) -> int:
    report = run_suites(args.suite)
    _emit(report, args.out)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonqnet",
        description="simulate exact algorithms on anonymous quantum networks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elect", help="run leader election")
    _add_graph_args(p)
    p.add_argument("--upper-bound", type=int, default=None,
                   help="parties know only this bound on n")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--all-branches", action="store_true")
    p.set_defaults(handler=cmd_elect)

    p = sub.add_parser("ghz", help="share a generalized GHZ state")
    _add_graph_args(p)
    p.add_argument("--k", type=int, required=True, help="qudit dimension")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--all-branches", action="store_true")
    p.set_defaults(handler=cmd_ghz)

    p = sub.add_parser("compute", help="compute a labeled-graph function")
    _add_graph_args(p)
    p.add_argument("--fn", choices=sorted(BUILTIN_FUNCTIONS), required=True)
    p.add_argument("--inputs", required=True, help="comma-separated bits, one per party")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(handler=cmd_compute)

    p = sub.add_parser("cost-table", help="measured costs and scaling ratios")
    _add_graph_args(p, multi_n=True)
    p.set_defaults(handler=cmd_cost_table)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", default="all",
                   help=f"one of {', '.join(sorted(SUITES))}, or 'all'")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SystemExit2:
        raise
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
