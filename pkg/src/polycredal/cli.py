"""Command-line front end: infer, generate, benchmark.

Exit codes: 0 success, 1 usage error, 2 input validation error,
3 infeasible evidence, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, ar, ar_plus, bnb, exact, harness, local_search, netio
from .ar_plus import VertexBudget
from .exact import EnumerationCapError
from .model import InvalidNetworkError, IntervalPotential, ZeroEvidenceError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_INPUT = 2
EXIT_INFEASIBLE_EVIDENCE = 3
EXIT_RESOURCE_CAP = 4

ALGORITHMS = ("ar", "ar-plus", "local-search", "bnb", "exhaustive")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
    else:
        lo = hi = text
    try:
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise _UsageError(f"not a range: {text!r} (expected LO..HI)") from None
    if lo_i < 1 or hi_i < lo_i:
        raise InvalidNetworkError(f"invalid range {text!r}")
    return lo_i, hi_i


def _parse_evidence(net, text: str | None) -> dict[str, int]:
    out: dict[str, int] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise _UsageError(f"evidence item {item!r} is not VAR=CAT")
        var, cat = item.split("=", 1)
        if var not in net.tables:
            raise InvalidNetworkError(f"evidence names unknown variable {var!r}")
        out[var] = net.variable(var).category_index(cat)
    return out


def _digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_report(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _interval_dict(net, query: str, pot: IntervalPotential) -> dict:
    cats = net.variable(query).categories
    return {cat: [float(l), float(u)] for cat, l, u in zip(cats, pot.lower, pot.upper)}


def _cmd_infer(args) -> int:
    net = netio.parse_network(args.network)
    if args.query not in net.tables:
        raise InvalidNetworkError(f"unknown query variable {args.query!r}")
    evidence = _parse_evidence(net, args.evidence)
    if args.query in evidence:
        raise InvalidNetworkError("the query variable cannot be observed")
    budget = VertexBudget(args.max_vertices)
    qcard = net.card(args.query)
    stats: dict = {}
    t0 = time.perf_counter()

    if args.algorithm == "ar":
        pot = ar.propagate(net, args.query, evidence)
    elif args.algorithm == "ar-plus":
        pot = ar_plus.propagate_plus(net, args.query, evidence, budget)
    elif args.algorithm == "local-search":
        lows, highs = [], []
        for c in range(qcard):
            for direction, acc in (("min", lows), ("max", highs)):
                state = local_search.multistart(
                    net, args.query, c, evidence, direction,
                    restarts=args.restarts, rng=np.random.default_rng(args.seed),
                )
                acc.append(state.value)
        pot = IntervalPotential(lows, highs)
    elif args.algorithm == "bnb":
        lows, highs = [], []
        expanded = leaves = 0
        gap = 0.0
        for c in range(qcard):
            interval, (lo, hi) = bnb.solve_interval(
                net, args.query, c, evidence, args.epsilon,
                budget=budget, rng=np.random.default_rng(args.seed),
                restarts=args.restarts,
            )
            lows.append(interval.lower)
            highs.append(interval.upper)
            expanded += lo.stats.expanded + hi.stats.expanded
            leaves += lo.stats.leaves + hi.stats.leaves
            gap = max(gap, lo.stats.gap, hi.stats.gap)
        pot = IntervalPotential(lows, highs)
        stats = {"nodes_expanded": expanded, "leaves_evaluated": leaves, "gap": gap}
    else:  # exhaustive
        scan = exact.exhaustive_scan(net, args.query, evidence)
        pot = scan.intervals
        stats = {
            "selections": scan.n_selections,
            "zero_evidence_selections": scan.n_zero_evidence,
        }

    stats["wall_time"] = time.perf_counter() - t0
    doc = {
        "tool": {"name": "polycredal", "version": __version__},
        "command": "infer",
        "input_digest": _digest(args.network),
        "algorithm": args.algorithm,
        "query": {
            "variable": args.query,
            "evidence": {
                var: net.variable(var).categories[cat] for var, cat in evidence.items()
            },
        },
        "parameters": {
            "epsilon": args.epsilon,
            "max_vertices": args.max_vertices,
            "restarts": args.restarts,
            "seed": args.seed,
            "threads": args.threads,
        },
        "intervals": _interval_dict(net, args.query, pot),
        "stats": stats,
    }
    _write_report(doc, args.output)
    return EXIT_OK


def _cmd_generate(args) -> int:
    config = harness.GeneratorConfig(
        node_count=args.nodes,
        category_range=_parse_range(args.categories),
        vertex_range=_parse_range(args.vertices),
        seed=args.seed,
    )
    net = harness.random_polytree(config)
    text = netio.serialize_network(net)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if not algorithms:
        raise _UsageError("the algorithm list is empty")
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise _UsageError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
    config = harness.GeneratorConfig(
        node_count=args.nodes,
        category_range=_parse_range(args.categories),
        vertex_range=_parse_range(args.vertices),
        seed=args.seed,
    )
    report = harness.run_ensemble(
        config,
        algorithms,
        ensemble_size=args.ensemble_size,
        budget=VertexBudget(args.max_vertices),
        restarts=args.restarts,
        threads=args.threads,
    )
    doc = {
        "tool": {"name": "polycredal", "version": __version__},
        "command": "benchmark",
        **report.to_dict(),
    }
    _write_report(doc, args.output)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="polycredal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser("infer", help="bound p(query | evidence) on a network file")
    p_infer.add_argument("--network", required=True)
    p_infer.add_argument("--query", required=True)
    p_infer.add_argument("--evidence", default=None, help="VAR=CAT[,VAR=CAT...]")
    p_infer.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p_infer.add_argument("--epsilon", type=float, default=0.0)
    p_infer.add_argument("--max-vertices", type=int, default=256)
    p_infer.add_argument("--restarts", type=int, default=8)
    p_infer.add_argument("--seed", type=int, default=0)
    p_infer.add_argument("--threads", type=int, default=1)
    p_infer.add_argument("--output", default=None)
    p_infer.set_defaults(func=_cmd_infer)

    p_gen = sub.add_parser("generate", help="write a random polytree network file")
    p_gen.add_argument("--nodes", type=int, required=True)
    p_gen.add_argument("--categories", default="2..3", help="LO..HI")
    p_gen.add_argument("--vertices", default="2..2", help="LO..HI")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--output", default=None)
    p_gen.set_defaults(func=_cmd_generate)

    p_bench = sub.add_parser("benchmark", help="run a seeded ensemble and report statistics")
    p_bench.add_argument("--ensemble-size", type=int, default=30)
    p_bench.add_argument("--nodes", type=int, required=True)
    p_bench.add_argument("--categories", default="3..3", help="LO..HI")
    p_bench.add_argument("--vertices", default="2..2", help="LO..HI")
    p_bench.add_argument("--algorithms", default="ar,ar-plus,local-search,bnb")
    p_bench.add_argument("--max-vertices", type=int, default=256)
    p_bench.add_argument("--restarts", type=int, default=8)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--output", default=None)
    p_bench.set_defaults(func=_cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise _UsageError("--threads must be >= 1")
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (netio.NetworkFormatError, InvalidNetworkError, ValueError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except ZeroEvidenceError as err:
        print(f"infeasible evidence: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE_EVIDENCE
    except (EnumerationCapError, MemoryError) as err:
        print(f"resource cap exceeded: {err}", file=sys.stderr)
        return EXIT_RESOURCE_CAP
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
