"""Random polytree generation and seeded ensemble benchmarking.

The generator draws a uniformly random labeled tree (random Pruefer
sequence), orients every edge with an independent fair coin (any orientation
of a tree is a polytree), then fills the tables with vertices sampled
uniformly from the probability simplex.  Everything is deterministic given
the seed.

Ensembles run a list of algorithms over independently generated instances,
compare against an exact reference (exhaustive enumeration when feasible,
branch-and-bound otherwise), and aggregate the usual comparison statistics:
mean relative error against the exact bounds, mean interval length, and
branch-and-bound node counts.
"""

from __future__ import annotations

import heapq
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ar, ar_plus, bnb, exact, local_search
from .ar_plus import VertexBudget
from .geometry import sample_simplex
from .model import (
    ConditionalCredalTable,
    CredalNetwork,
    IntervalPotential,
    Variable,
    count_potential_vertices,
)

KNOWN_ALGORITHMS = ("ar", "ar-plus", "local-search", "bnb", "exhaustive")


@dataclass(frozen=True)
class GeneratorConfig:
    """Shape of one random instance: size, category range, vertex-count range."""

    node_count: int
    category_range: tuple[int, int] = (2, 3)
    vertex_range: tuple[int, int] = (2, 2)
    seed: int | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        for name, (lo, hi) in (
            ("category_range", self.category_range),
            ("vertex_range", self.vertex_range),
        ):
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be a nonempty range of positive ints")


def _random_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # uniform labeled tree via a random Pruefer sequence
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    seq = [int(x) for x in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    a = heapq.heappop(leaves)
    b = heapq.heappop(leaves)
    edges.append((a, b))
    return edges


def random_polytree(config: GeneratorConfig, rng: np.random.Generator | None = None) -> CredalNetwork:
    """One random credal polytree, deterministic given the seed."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n = config.node_count
    clo, chi = config.category_range
    vlo, vhi = config.vertex_range

    cards = [int(rng.integers(clo, chi + 1)) for _ in range(n)]
    parents: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in _random_tree_edges(n, rng):
        if int(rng.integers(0, 2)) == 0:
            parents[b].append(a)  # a -> b
        else:
            parents[a].append(b)
    variables = [
        Variable(f"X{i}", tuple(f"c{j}" for j in range(cards[i]))) for i in range(n)
    ]
    tables = []
    for i in range(n):
        pa = sorted(parents[i])
        n_cfg = int(np.prod([cards[p] for p in pa])) if pa else 1
        entries = []
        for _ in range(n_cfg):
            m = int(rng.integers(vlo, vhi + 1))
            entries.append([sample_simplex(cards[i], rng) for _ in range(m)])
        tables.append(
            ConditionalCredalTable(f"X{i}", [f"X{p}" for p in pa], entries, check=False)
        )
    return CredalNetwork(variables, tables)


def relative_error(approx: float, exact_val: float) -> float:
    """|approx - exact| / exact; zero when both are zero, undefined otherwise at 0."""
    if exact_val < 0:
        raise ValueError("exact value must be nonnegative")
    if exact_val == 0.0:
        if approx == 0.0:
            return 0.0
        raise ValueError("relative error undefined: exact value is 0 but approx is not")
    return abs(approx - exact_val) / exact_val


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuerySpec:
    """Which conditional to ask on each instance, by variable position."""

    variable: int = 0
    evidence: dict = field(default_factory=dict)  # variable position -> category index


@dataclass
class BenchmarkReport:
    config: dict
    rows: list
    aggregates: dict

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows, "aggregates": self.aggregates}


def _intervals_list(pot: IntervalPotential) -> list[list[float]]:
    return [[float(l), float(u)] for l, u in zip(pot.lower, pot.upper)]


def _run_algorithm(
    algorithm: str,
    net: CredalNetwork,
    query: str,
    evidence: dict,
    budget: VertexBudget,
    restarts: int,
    epsilon: float,
    seed: int,
    oracle_cap: int,
) -> dict:
    qcard = net.card(query)
    t0 = time.perf_counter()
    extra: dict = {}
    if algorithm == "ar":
        pot = ar.propagate(net, query, evidence)
    elif algorithm == "ar-plus":
        pot = ar_plus.propagate_plus(net, query, evidence, budget)
    elif algorithm == "local-search":
        lows, highs = [], []
        for c in range(qcard):
            rng = np.random.default_rng(seed)
            lows.append(
                local_search.multistart(
                    net, query, c, evidence, "min", restarts=restarts, rng=rng
                ).value
            )
            rng = np.random.default_rng(seed)
            highs.append(
                local_search.multistart(
                    net, query, c, evidence, "max", restarts=restarts, rng=rng
                ).value
            )
        pot = IntervalPotential(lows, highs)
    elif algorithm == "bnb":
        lows, highs = [], []
        expanded = 0
        gap = 0.0
        for c in range(qcard):
            interval, (lo, hi) = bnb.solve_interval(
                net, query, c, evidence, epsilon,
                budget=budget, rng=np.random.default_rng(seed), restarts=restarts,
            )
            lows.append(interval.lower)
            highs.append(interval.upper)
            expanded += lo.stats.expanded + hi.stats.expanded
            gap = max(gap, lo.stats.gap, hi.stats.gap)
        pot = IntervalPotential(lows, highs)
        extra = {"expanded": expanded, "gap": gap}
    elif algorithm == "exhaustive":
        scan = exact.exhaustive_scan(net, query, evidence, cap=oracle_cap)
        pot = scan.intervals
        extra = {"selections": scan.n_selections}
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; known: {KNOWN_ALGORITHMS}")
    return {
        "algorithm": algorithm,
        "intervals": _intervals_list(pot),
        "mean_length": float(np.mean(pot.widths())),
        "wall_time": time.perf_counter() - t0,
        **extra,
    }


def _exact_reference(net, query, evidence, budget, restarts, seed, oracle_cap) -> list[list[float]]:
    if count_potential_vertices(net) <= oracle_cap:
        scan = exact.exhaustive_scan(net, query, evidence, cap=oracle_cap)
        return _intervals_list(scan.intervals)
    out = []
    for c in range(net.card(query)):
        interval, _ = bnb.solve_interval(
            net, query, c, evidence, 0.0,
            budget=budget, rng=np.random.default_rng(seed), restarts=restarts,
        )
        out.append([interval.lower, interval.upper])
    return out


def _instance_rows(
    index: int,
    child_seed,
    config: GeneratorConfig,
    algorithms: Sequence[str],
    queries: Sequence[QuerySpec],
    budget: VertexBudget,
    restarts: int,
    epsilon: float,
    oracle_cap: int,
) -> list[dict]:
    rng = np.random.default_rng(child_seed)
    run_seed = int(rng.integers(2**31))
    net = random_polytree(config, rng)
    rows = []
    for q_idx, spec in enumerate(queries):
        query = net.names[spec.variable % len(net.names)]
        evidence = {}
        for pos, cat in spec.evidence.items():
            name = net.names[pos % len(net.names)]
            if name != query:
                evidence[name] = cat % net.card(name)
        base = {
            "instance": index,
            "query_index": q_idx,
            "query": query,
            "evidence": dict(evidence),
            "potential_vertices": count_potential_vertices(net),
        }
        try:
            reference = _exact_reference(
                net, query, evidence, budget, restarts, run_seed, oracle_cap
            )
        except Exception as err:  # recorded, never aborts the ensemble
            rows.append({**base, "algorithm": "reference", "error": repr(err)})
            continue
        rows.append({**base, "algorithm": "reference", "intervals": reference})
        for alg in algorithms:
            try:
                result = _run_algorithm(
                    alg, net, query, evidence, budget, restarts, epsilon, run_seed, oracle_cap
                )
                errors = []
                for c, (lo, hi) in enumerate(result["intervals"]):
                    for endpoint, value in (("0", lo), ("1", hi)):
                        ref = reference[c][int(endpoint)]
                        if ref > 0 or value == 0:
                            errors.append(relative_error(value, ref))
                result["mean_relative_error"] = float(np.mean(errors)) if errors else 0.0
                rows.append({**base, **result})
            except Exception as err:
                rows.append({**base, "algorithm": alg, "error": repr(err)})
    return rows


def run_ensemble(
    config: GeneratorConfig,
    algorithms: Sequence[str],
    queries: Sequence[QuerySpec] | None = None,
    rng: np.random.Generator | None = None,
    ensemble_size: int = 30,
    budget: VertexBudget = VertexBudget(),
    restarts: int = 8,
    epsilon: float = 0.0,
    oracle_cap: int = 2**14,
    threads: int = 1,
) -> BenchmarkReport:
    """Generate `ensemble_size` instances, run every algorithm, aggregate.

    Per-instance failures are recorded as error rows; the ensemble always
    completes.  Instance generation is seeded from ``config.seed`` (or the
    supplied generator), so reports are reproducible.
    """
    if not algorithms:
        raise ValueError("at least one algorithm is required")
    for alg in algorithms:
        if alg not in KNOWN_ALGORITHMS:
            raise ValueError(f"unknown algorithm {alg!r}; known: {KNOWN_ALGORITHMS}")
    queries = list(queries) if queries else [QuerySpec()]
    if config.seed is not None:
        seeds = np.random.SeedSequence(config.seed).spawn(ensemble_size)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        seeds = np.random.SeedSequence(int(rng.integers(2**63))).spawn(ensemble_size)

    work = [
        (i, seeds[i], config, algorithms, queries, budget, restarts, epsilon, oracle_cap)
        for i in range(ensemble_size)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda a: _instance_rows(*a), work))
    else:
        chunks = [_instance_rows(*a) for a in work]
    rows = [row for chunk in chunks for row in chunk]

    aggregates: dict = {}
    for alg in algorithms:
        ok = [r for r in rows if r["algorithm"] == alg and "error" not in r]
        failed = [r for r in rows if r["algorithm"] == alg and "error" in r]
        agg = {
            "instances": len(ok),
            "failed": len(failed),
            "mean_relative_error": float(
                np.mean([r["mean_relative_error"] for r in ok])
            ) if ok else None,
            "mean_interval_length": float(np.mean([r["mean_length"] for r in ok]))
            if ok
            else None,
        }
        if alg == "bnb" and ok:
            expansions = [r["expanded"] for r in ok]
            ratios = [
                r["expanded"] / r["potential_vertices"]
                for r in ok
                if r["potential_vertices"] > 0
            ]
            agg["mean_expanded"] = float(np.mean(expansions))
            agg["median_expanded"] = float(np.median(expansions))
            agg["median_expansion_ratio"] = float(np.median(ratios)) if ratios else None
        aggregates[alg] = agg

    # sandwich accounting: inner (local search) and outer (interval) bounds
    # must bracket the exact reference on every instance
    aggregates["sandwich_violations"] = _sandwich_violations(rows)
    b1b2 = _bound_gap_ratio(rows)
    if b1b2 is not None:
        aggregates["outer_inner_gap"] = b1b2

    cfg = {
        "node_count": config.node_count,
        "category_range": list(config.category_range),
        "vertex_range": list(config.vertex_range),
        "seed": config.seed,
        "ensemble_size": ensemble_size,
        "algorithms": list(algorithms),
        "restarts": restarts,
        "epsilon": epsilon,
        "max_vertices": budget.max_vertices,
    }
    return BenchmarkReport(cfg, rows, aggregates)


def _by_key(rows):
    grouped: dict = {}
    for r in rows:
        if "error" in r or "intervals" not in r:
            continue
        grouped.setdefault((r["instance"], r["query_index"]), {})[r["algorithm"]] = r
    return grouped


def _sandwich_violations(rows, slack: float = 1e-9) -> int:
    violations = 0
    for group in _by_key(rows).values():
        ref = group.get("reference")
        if ref is None:
            continue
        for alg, side in (("ar", "outer"), ("ar-plus", "outer"), ("local-search", "inner")):
            r = group.get(alg)
            if r is None:
                continue
            for c, (lo, hi) in enumerate(r["intervals"]):
                rlo, rhi = ref["intervals"][c]
                if side == "outer" and (lo > rlo + slack or hi < rhi - slack):
                    violations += 1
                if side == "inner" and (lo < rlo - slack or hi > rhi + slack):
                    violations += 1
    return violations


def _bound_gap_ratio(rows):
    """Mean ratio of (refined-outer minus inner) to (plain-outer minus inner) widths."""
    plain, refined = [], []
    for group in _by_key(rows).values():
        a, p, s = group.get("ar"), group.get("ar-plus"), group.get("local-search")
        if a is None or p is None or s is None:
            continue
        for c in range(len(a["intervals"])):
            upper_gap_plain = a["intervals"][c][1] - s["intervals"][c][1]
            upper_gap_refined = p["intervals"][c][1] - s["intervals"][c][1]
            plain.append(max(upper_gap_plain, 0.0))
            refined.append(max(upper_gap_refined, 0.0))
    if not plain:
        return None
    mean_plain = float(np.mean(plain))
    mean_refined = float(np.mean(refined))
    return {
        "mean_plain": mean_plain,
        "mean_refined": mean_refined,
        "ratio": mean_refined / mean_plain if mean_plain > 0 else None,
    }
