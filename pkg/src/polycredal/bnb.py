"""Depth-first branch-and-bound over vertex selections.

The search tree branches on local credal sets: fixing one vertex of one set
per level, so leaves are Bayesian networks that can be evaluated exactly.
Sub-instances are overestimated with the refined interval propagation on the
restricted network (a sound outer bound, so pruning is safe) and the
incumbent starts from local search (a feasible inner value).  Children are
visited best-bound-first.  With ``epsilon == 0`` the search is exact; with
``epsilon > 0`` it stops as soon as the global outer bound is within epsilon
of the incumbent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import ar_plus, local_search
from .ar_plus import VertexBudget
from .exact import EvaluationPlan
from .model import (
    CredalNetwork,
    InvalidNetworkError,
    LocalSetId,
    ProbabilityInterval,
    ZeroEvidenceError,
    check_query_evidence,
    restrict,
    validate,
)

#: Additive slack for pruning comparisons, far below every result tolerance,
#: so a pruned subtree can never hide a meaningfully better leaf.
PRUNE_TOL = 1e-12


@dataclass
class SolveStats:
    expanded: int = 0
    leaves: int = 0
    pruned: int = 0
    wall_time: float = 0.0
    gap: float = 0.0
    #: (nodes expanded so far, incumbent, global outer bound) at each expansion
    trajectory: list = field(default_factory=list)


@dataclass
class SolveResult:
    value: float
    witness: dict[LocalSetId, int]
    mode: str  # "exact" | "approximate"
    stats: SolveStats
    direction: str
    category: int


def default_set_order(net: CredalNetwork) -> tuple[LocalSetId, ...]:
    """Branchable sets, most vertices first; ties follow topological order.

    The topological tie-break fixes ancestor priors before the many
    configuration sets of deeper variables; ancestor mass shapes every
    downstream bound, so the bounds collapse much earlier along the search.
    """
    ids = [sid for sid in net.local_set_ids() if len(net.vertices(sid)) > 1]
    topo = {name: k for k, name in enumerate(net.topological_order())}
    return tuple(
        sorted(ids, key=lambda sid: (-len(net.vertices(sid)), topo[sid.variable], sid.config))
    )


def _bound(net, partial, query, category, evidence, direction, budget, discard_at=None):
    """Outer bound of the sub-instance reached by fixing `partial`.

    Returns None when the sub-instance's evidence probability is identically
    zero.  The refined (credal) propagation only runs when the plain interval
    bound fails the `discard_at` pruning test: a child the cheap bound
    already discards never needs the expensive one, and both are sound.
    """
    sub = restrict(net, partial) if partial else net

    def run(b):
        pot = ar_plus._CredalPropagation(sub, query, evidence, b).run()
        return float(pot.upper[category] if direction == "max" else pot.lower[category])

    try:
        cheap = run(_PLAIN)
        if budget.max_vertices <= 1:
            return cheap
        if discard_at is not None:
            discarded = (
                cheap <= discard_at + PRUNE_TOL
                if direction == "max"
                else cheap >= discard_at - PRUNE_TOL
            )
            if discarded:
                return cheap
        refined = run(budget)
    except ZeroEvidenceError:
        return None
    # monotone refinement: never worse than the plain bound
    return min(cheap, refined) if direction == "max" else max(cheap, refined)


_PLAIN = VertexBudget(1)


def solve(
    net: CredalNetwork,
    query: str,
    category: int,
    evidence: Mapping[str, int] | None = None,
    direction: str = "max",
    epsilon: float = 0.0,
    budget: VertexBudget = VertexBudget(),
    set_order: Sequence[LocalSetId] | None = None,
    rng: np.random.Generator | None = None,
    restarts: int = 4,
    intensify: bool = True,
) -> SolveResult:
    """Exact (epsilon=0) or epsilon-approximate optimum of p(query=cat | evidence).

    Returns the optimal value, a total selection attaining it, and search
    statistics.  `budget` controls the bounding propagation; ``max_vertices=1``
    degrades the bounds to plain interval propagation.
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    validate(net).raise_if_invalid()
    check_query_evidence(net, query, evidence or {})
    if not 0 <= category < net.card(query):
        raise InvalidNetworkError(f"category {category} out of range for {query!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    maximizing = direction == "max"
    t0 = time.perf_counter()
    stats = SolveStats()

    order = tuple(set_order) if set_order is not None else default_set_order(net)
    for sid in order:
        if len(net.vertices(sid)) < 1:
            raise InvalidNetworkError(f"set order names unknown set {sid}")
    plan = EvaluationPlan(net, query, evidence)

    def leaf_value(sel) -> float | None:
        vec = plan.joint(plan.vector(sel))[0]
        pe = float(vec.sum())
        return vec[category] / pe if pe > 0.0 else None

    # trivial case: nothing to branch on
    if not order:
        val = leaf_value({})
        if val is None:
            raise ZeroEvidenceError("evidence has probability zero")
        stats.expanded = stats.leaves = 1
        stats.wall_time = time.perf_counter() - t0
        stats.trajectory.append((1, val, val))
        return SolveResult(val, {}, "exact", stats, direction, category)

    # feasible incumbent from local search
    start = local_search.multistart(
        net, query, category, evidence, direction, restarts=restarts, rng=rng
    )
    incumbent, witness = start.value, dict(start.selection)

    def improves(value: float) -> bool:
        return value > incumbent if maximizing else value < incumbent

    def prunable(bound: float) -> bool:
        return bound <= incumbent + PRUNE_TOL if maximizing else bound >= incumbent - PRUNE_TOL

    root_bound = _bound(net, {}, query, category, evidence, direction, budget,
                        discard_at=incumbent if np.isfinite(incumbent) else None)
    if root_bound is None:
        raise ZeroEvidenceError("evidence has probability zero under every selection")

    def intensified():
        nonlocal incumbent, witness
        refined = local_search.optimize(
            net, query, category, evidence, direction, initial=witness, rng=rng
        )
        if improves(refined.value):
            incumbent, witness = refined.value, dict(refined.selection)

    stack: list[tuple[float, dict, int]] = [(root_bound, {}, 0)]
    mode = "exact"
    global_bound = root_bound
    while stack:
        frontier = max(b for b, _, _ in stack) if maximizing else min(b for b, _, _ in stack)
        global_bound = (
            max(incumbent, frontier) if maximizing else min(incumbent, frontier)
        )
        if np.isfinite(incumbent) and abs(global_bound - incumbent) <= epsilon and epsilon > 0:
            mode = "approximate"
            break
        bound, partial, depth = stack.pop()
        if prunable(bound):
            stats.pruned += 1
            continue
        stats.expanded += 1
        stats.trajectory.append((stats.expanded, incumbent, global_bound))

        sid = order[depth]
        n_vertices = len(net.vertices(sid))
        children = []
        for v in range(n_vertices):
            child = dict(partial)
            child[sid] = v
            if depth + 1 == len(order):
                stats.leaves += 1
                stats.expanded += 1
                val = leaf_value(child)
                if val is not None and improves(val):
                    previous = incumbent
                    incumbent, witness = val, child
                    if intensify and (
                        not np.isfinite(previous) or abs(incumbent - previous) > 1e-6
                    ):
                        intensified()
            else:
                b = _bound(
                    net, child, query, category, evidence, direction, budget,
                    discard_at=incumbent if np.isfinite(incumbent) else None,
                )
                if b is None or prunable(b):
                    stats.pruned += 1
                    continue
                children.append((b, child, depth + 1))
        # push so the best bound is expanded first
        children.sort(key=lambda c: c[0], reverse=not maximizing)
        stack.extend(children)

    if not np.isfinite(incumbent):
        raise ZeroEvidenceError("evidence has probability zero under every selection")
    if stack:
        frontier = max(b for b, _, _ in stack) if maximizing else min(b for b, _, _ in stack)
        global_bound = max(incumbent, frontier) if maximizing else min(incumbent, frontier)
    else:
        global_bound = incumbent
    stats.gap = abs(global_bound - incumbent)
    stats.trajectory.append((stats.expanded, incumbent, global_bound))
    stats.wall_time = time.perf_counter() - t0
    if stats.gap > PRUNE_TOL:
        mode = "approximate"
    return SolveResult(incumbent, witness, mode, stats, direction, category)


def solve_interval(
    net: CredalNetwork,
    query: str,
    category: int,
    evidence: Mapping[str, int] | None = None,
    epsilon: float = 0.0,
    **kwargs,
) -> tuple[ProbabilityInterval, tuple[SolveResult, SolveResult]]:
    """Both bounds of p(query=cat | evidence): a solve per direction."""
    lo = solve(net, query, category, evidence, "min", epsilon, **kwargs)
    hi = solve(net, query, category, evidence, "max", epsilon, **kwargs)
    return ProbabilityInterval(lo.value, hi.value), (lo, hi)
