"""Inner bounds by coordinate-wise search over local vertex choices.

Any total vertex selection turns the network into a Bayesian network whose
conditional query value is exactly computable, so every selection yields一
feasible (inner) value.  The search fixes all local sets except one, tries
every vertex of that set, keeps the best, and cycles through the sets until
a full pass leaves the value unchanged.  Each accepted move improves (or
ties) the objective and there are finitely many selections, so the search
terminates; the result is a local optimum and therefore a sound inner bound.

This evaluates the candidate vertices of a set directly instead of routing
the choice through an auxiliary maximization variable: the conditional is
linear-fractional in one set's choice, so its optimum over that set is
attained at one of the finitely many vertices either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exact import EvaluationPlan
from .model import (
    CredalNetwork,
    InvalidNetworkError,
    LocalSetId,
    ZeroEvidenceError,
    check_query_evidence,
)

#: A full cycle that changes the value by no more than this terminates the search.
VALUE_TOL = 1e-12

#: Hard cap on the number of full cycles, as a stuck-detection flag.
DEFAULT_CYCLE_CAP = 100


@dataclass
class SearchState:
    """Where a search run ended: the selection, its exact value, and provenance."""

    selection: dict[LocalSetId, int]
    value: float
    direction: str
    cycles: int = 0
    evaluations: int = 0
    trajectory: tuple[float, ...] = ()
    capped: bool = False


def default_ordering(net: CredalNetwork) -> tuple[LocalSetId, ...]:
    """Local sets in topological variable order, configurations ascending."""
    out = []
    for name in net.topological_order():
        for cfg in range(len(net.tables[name].entries)):
            out.append(LocalSetId(name, cfg))
    return tuple(out)


def _check_ordering(net: CredalNetwork, ordering: Sequence[LocalSetId]) -> tuple[LocalSetId, ...]:
    canonical = set(net.local_set_ids())
    seen = set()
    for sid in ordering:
        if sid not in canonical:
            raise InvalidNetworkError(f"ordering lists unknown local set {sid}")
        if sid in seen:
            raise InvalidNetworkError(f"ordering lists {sid} twice")
        seen.add(sid)
    if seen != canonical:
        raise InvalidNetworkError("ordering does not cover every local set")
    return tuple(ordering)


def _better(a: float, b: float, direction: str) -> bool:
    return a > b if direction == "max" else a < b


def _candidate_values(
    plan: EvaluationPlan, base_row: np.ndarray, set_pos: int, n_candidates: int, category: int
) -> np.ndarray:
    """Conditional value per candidate vertex; NaN where the evidence dies."""
    S = np.tile(base_row, (n_candidates, 1))
    S[:, set_pos] = np.arange(n_candidates)
    vec = plan.joint(S)
    pe = vec.sum(axis=1)
    out = np.full(n_candidates, np.nan)
    ok = pe > 0.0
    out[ok] = vec[ok, category] / pe[ok]
    return out


def best_vertex_for_set(
    net: CredalNetwork,
    selection: Mapping[LocalSetId, int],
    set_id: LocalSetId,
    query: str,
    category: int,
    evidence: Mapping[str, int] | None = None,
    direction: str = "max",
    *,
    _plan: EvaluationPlan | None = None,
) -> tuple[int, float]:
    """The vertex of one local set optimizing the query with all others fixed.

    Ties break toward the lowest vertex index.  Raises
    :class:`ZeroEvidenceError` when every candidate kills the evidence.
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    plan = _plan or EvaluationPlan(net, query, evidence)
    base = plan.vector({sid: idx for sid, idx in selection.items() if sid != set_id})
    pos = plan.set_pos[set_id]
    vals = _candidate_values(plan, base, pos, plan.set_sizes[pos], category)
    if np.all(np.isnan(vals)):
        raise ZeroEvidenceError(
            f"every vertex of {set_id} gives the evidence probability zero"
        )
    masked = np.where(np.isnan(vals), -np.inf if direction == "max" else np.inf, vals)
    best = int(masked.argmax() if direction == "max" else masked.argmin())
    return best, float(vals[best])


def optimize(
    net: CredalNetwork,
    query: str,
    category: int,
    evidence: Mapping[str, int] | None = None,
    direction: str = "max",
    ordering: Sequence[LocalSetId] | None = None,
    initial: Mapping[LocalSetId, int] | None = None,
    rng: np.random.Generator | None = None,
    cycle_cap: int = DEFAULT_CYCLE_CAP,
    tol: float = VALUE_TOL,
) -> SearchState:
    """Cycle through the local sets, locally optimizing each, until stable.

    The value trajectory is monotone (nondecreasing for ``max``); the run
    stops when a full cycle moves the value by at most `tol`, or when
    `cycle_cap` cycles elapse (flagged via ``capped``).
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    check_query_evidence(net, query, evidence or {})
    if not 0 <= category < net.card(query):
        raise InvalidNetworkError(f"category {category} out of range for {query!r}")
    order = _check_ordering(net, ordering) if ordering is not None else default_ordering(net)
    plan = EvaluationPlan(net, query, evidence)
    rng = rng if rng is not None else np.random.default_rng(0)

    sizes = {sid: plan.set_sizes[plan.set_pos[sid]] for sid in order}
    if initial is None:
        selection = {sid: int(rng.integers(sizes[sid])) for sid in order}
    else:
        selection = {}
        for sid in order:
            idx = int(initial.get(sid, 0))
            if not 0 <= idx < sizes[sid]:
                raise InvalidNetworkError(f"initial vertex {idx} out of range for {sid}")
            selection[sid] = idx

    vec = plan.joint(plan.vector(selection))[0]
    pe = float(vec.sum())
    value = vec[category] / pe if pe > 0.0 else (-np.inf if direction == "max" else np.inf)
    trajectory = [float(value)]
    evaluations = 1

    multi = [sid for sid in order if sizes[sid] > 1]
    cycles = 0
    capped = False
    while multi:
        cycles += 1
        if cycles > cycle_cap:
            capped = True
            cycles = cycle_cap
            break
        cycle_start = value
        for sid in multi:
            try:
                idx, val = best_vertex_for_set(
                    net, selection, sid, query, category, evidence, direction, _plan=plan
                )
            except ZeroEvidenceError:
                continue  # no candidate revives the evidence here; try the next set
            evaluations += sizes[sid]
            selection[sid] = idx
            value = val
            trajectory.append(float(value))
        if np.isfinite(value) and np.isfinite(cycle_start):
            if abs(value - cycle_start) <= tol:
                break
        elif np.isfinite(value) == np.isfinite(cycle_start):
            break  # still no feasible candidate anywhere

    return SearchState(
        selection=selection,
        value=float(value),
        direction=direction,
        cycles=cycles,
        evaluations=evaluations,
        trajectory=tuple(trajectory),
        capped=capped,
    )


def multistart(
    net: CredalNetwork,
    query: str,
    category: int,
    evidence: Mapping[str, int] | None = None,
    direction: str = "max",
    restarts: int = 1,
    rng: np.random.Generator | None = None,
    **kwargs,
) -> SearchState:
    """Best of `restarts` independent runs from random initial selections.

    Restarts consume one shared random stream, so a run with more restarts
    always starts from a superset of the initial selections of a run with
    fewer (given the same seed) and can only do better.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    best: SearchState | None = None
    for _ in range(restarts):
        state = optimize(net, query, category, evidence, direction, rng=rng, **kwargs)
        if best is None or _better(state.value, best.value, direction):
            best = state
    assert best is not None
    return best
