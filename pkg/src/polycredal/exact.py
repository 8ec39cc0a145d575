"""Exact inference: polytree Bayes-net queries and the exhaustive credal oracle.

A network with all-singleton vertex lists is an ordinary Bayesian network;
:func:`marginal` answers conditional queries on it by variable elimination
along a leaf-stripping order.  :func:`exhaustive_scan` enumerates every
total vertex selection of a credal network and reports the exact per-category
bounds, which makes it the ground-truth oracle for all approximate
algorithms (and also makes it exponential: its use is gated by a cap).

Queries are compiled once into an :class:`EvaluationPlan` whose execution is
batched over many vertex selections at a time; enumeration, local search and
branch-and-bound leaf evaluation all share it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import (
    CredalNetwork,
    InvalidNetworkError,
    IntervalPotential,
    LocalSetId,
    ProbabilityInterval,
    ZeroEvidenceError,
    check_query_evidence,
    count_potential_vertices,
)

#: Refuse exhaustive enumeration beyond this many selections by default.
DEFAULT_ENUMERATION_CAP = 2**24


class EnumerationCapError(RuntimeError):
    """The selection space is too large for exhaustive enumeration."""


Evidence = Mapping[str, int]


class EvaluationPlan:
    """A compiled query: evidence-reduced factors plus an elimination schedule.

    The schedule is symbolic; executing it for a batch of vertex selections
    gathers the chosen table rows and runs the same contraction sequence with
    a leading batch axis, producing the unnormalized joint p(query, evidence)
    for every selection at once.
    """

    def __init__(self, net: CredalNetwork, query: str | None, evidence: Evidence | None = None):
        self.net = net
        self.query = query
        self.evidence = check_query_evidence(net, query, evidence or {})
        self.set_ids = net.local_set_ids()
        self.set_pos = {sid: k for k, sid in enumerate(self.set_ids)}
        self.set_sizes = tuple(len(net.vertices(sid)) for sid in self.set_ids)

        axis = {name: i + 1 for i, name in enumerate(net.names)}  # axis 0 is the batch

        self._gathers = []
        scopes: dict[int, tuple[str, ...]] = {}
        for reg, name in enumerate(net.names):
            table = net.tables[name]
            n_cfg = len(table.entries)
            m_max = max(len(e) for e in table.entries)
            card = net.card(name)
            V = np.zeros((n_cfg, m_max, card))
            for cfg, vs in enumerate(table.entries):
                for k, v in enumerate(vs):
                    V[cfg, k] = v
            positions = np.array(
                [self.set_pos[LocalSetId(name, cfg)] for cfg in range(n_cfg)], dtype=np.intp
            )
            axes_vars = list(net.parents(name)) + [name]
            shape = tuple(net.card(v) for v in axes_vars)
            ev_idx = tuple(
                self.evidence[v] if v in self.evidence else slice(None) for v in axes_vars
            )
            self._gathers.append((V, positions, shape, ev_idx))
            scopes[reg] = tuple(v for v in axes_vars if v not in self.evidence)

        # symbolic elimination: repeatedly strip the variable whose combined
        # factor scope is smallest (a leaf of the current tree), then record
        # the einsum program that realizes it
        self._ops: list[tuple] = []
        decl = {name: i for i, name in enumerate(net.names)}
        next_reg = len(net.names)
        remaining = [n for n in net.names if n != query and n not in self.evidence]

        def union_scope(var: str) -> tuple[str, ...]:
            merged: set[str] = set()
            for s in scopes.values():
                if var in s:
                    merged |= set(s)
            return tuple(sorted(merged, key=decl.__getitem__))

        while remaining:
            var = min(remaining, key=lambda v: (len(union_scope(v)), decl[v]))
            remaining.remove(var)
            group = sorted(
                (r for r, s in scopes.items() if var in s), key=lambda r: (len(scopes[r]), r)
            )
            target = tuple(v for v in union_scope(var) if v != var)
            cur = group[0]
            if len(group) == 1:
                out = tuple(v for v in scopes[cur] if v != var)
                self._ops.append(((cur,), ([0] + [axis[v] for v in scopes[cur]],),
                                  [0] + [axis[v] for v in out], next_reg))
                scopes.pop(cur)
                scopes[next_reg] = out
                next_reg += 1
                continue
            for j, other in enumerate(group[1:]):
                last = j == len(group) - 2
                merged = tuple(
                    sorted(set(scopes[cur]) | set(scopes[other]), key=decl.__getitem__)
                )
                out = tuple(v for v in merged if v != var) if last else merged
                self._ops.append((
                    (cur, other),
                    ([0] + [axis[v] for v in scopes[cur]], [0] + [axis[v] for v in scopes[other]]),
                    [0] + [axis[v] for v in out],
                    next_reg,
                ))
                scopes.pop(cur)
                scopes.pop(other)
                scopes[next_reg] = out
                cur = next_reg
                next_reg += 1

        self._final = sorted(scopes.items())  # [(reg, scope)], scopes ⊆ {query}
        self._n_regs = next_reg

    # -- execution ------------------------------------------------------------

    def vector(self, selection: Mapping[LocalSetId, int]) -> np.ndarray:
        """Flatten a total selection into enumeration order (singletons implicit)."""
        row = np.zeros(len(self.set_ids), dtype=np.intp)
        for sid, idx in selection.items():
            pos = self.set_pos.get(sid)
            if pos is None:
                raise InvalidNetworkError(f"unknown local set {sid}")
            if not 0 <= idx < self.set_sizes[pos]:
                raise InvalidNetworkError(f"vertex index {idx} out of range for {sid}")
            row[pos] = idx
        return row

    def joint(self, selections: np.ndarray) -> np.ndarray:
        """Unnormalized p(query, evidence) for a (B, n_sets) batch of selections.

        Returns (B, card(query)); with ``query=None`` returns (B,) holding
        p(evidence) per selection.
        """
        S = np.asarray(selections, dtype=np.intp)
        if S.ndim == 1:
            S = S[None, :]
        B = S.shape[0]
        regs: list = [None] * self._n_regs
        for reg, (V, positions, shape, ev_idx) in enumerate(self._gathers):
            n_cfg = V.shape[0]
            chosen = V[np.arange(n_cfg)[None, :], S[:, positions]]
            arr = chosen.reshape((B,) + shape)
            regs[reg] = arr[(slice(None),) + ev_idx]
        for in_regs, in_subs, out_subs, out_reg in self._ops:
            if len(in_regs) == 1:
                regs[out_reg] = np.einsum(regs[in_regs[0]], in_subs[0], out_subs)
            else:
                regs[out_reg] = np.einsum(
                    regs[in_regs[0]], in_subs[0], regs[in_regs[1]], in_subs[1], out_subs
                )
            for r in in_regs:
                regs[r] = None

        result = None
        for reg, scope in self._final:
            a = regs[reg]
            if self.query is not None and not scope:
                a = a[:, None]
            result = a if result is None else result * a
        if result is None:  # no variables at all beyond evidence
            result = np.ones(B)
        return result

    def conditional(self, selection: Mapping[LocalSetId, int]) -> tuple[np.ndarray, float]:
        """(unnormalized joint vector, evidence probability) for one selection."""
        vec = self.joint(self.vector(selection))[0]
        return vec, float(vec.sum())


# ---------------------------------------------------------------------------
# Bayesian-network queries (all-singleton networks)
# ---------------------------------------------------------------------------


def marginal(net: CredalNetwork, query: str, evidence: Evidence | None = None) -> np.ndarray:
    """Exact p(query | evidence) on an all-singleton network."""
    if not net.is_precise():
        raise InvalidNetworkError(
            "marginal() requires an all-singleton network; restrict() a credal one first"
        )
    plan = EvaluationPlan(net, query, evidence)
    vec = plan.joint(np.zeros((1, len(plan.set_ids)), dtype=np.intp))[0]
    total = float(vec.sum())
    if total <= 0.0:
        raise ZeroEvidenceError("evidence has probability zero under this network")
    return vec / total


def evidence_probability(net: CredalNetwork, evidence: Evidence | None = None) -> float:
    """Exact p(evidence) on an all-singleton network; 0 for impossible evidence."""
    if not net.is_precise():
        raise InvalidNetworkError("evidence_probability() requires an all-singleton network")
    ev = dict(evidence or {})
    if not ev:
        return 1.0
    plan = EvaluationPlan(net, None, ev)
    return float(plan.joint(np.zeros((1, len(plan.set_ids)), dtype=np.intp))[0])


# ---------------------------------------------------------------------------
# exhaustive enumeration oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExhaustiveScan:
    """Exact bounds over all selections, with the selections attaining them.

    Selections that give the evidence probability zero are excluded from the
    optimization (the conditional is undefined there); their count is kept
    for provenance.
    """

    intervals: IntervalPotential
    argmin: tuple[dict, ...]
    argmax: tuple[dict, ...]
    n_selections: int
    n_zero_evidence: int


def exhaustive_scan(
    net: CredalNetwork,
    query: str,
    evidence: Evidence | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
    chunk: int = 4096,
) -> ExhaustiveScan:
    """Enumerate every total vertex selection and bound p(query | evidence).

    One mixed-radix sweep (variables in declaration order, configurations
    ascending) covers all query categories and both directions at once.
    """
    count = count_potential_vertices(net)
    if count > cap:
        raise EnumerationCapError(
            f"{count} potential vertices exceed the enumeration cap {cap}"
        )
    plan = EvaluationPlan(net, query, evidence)
    multi = [k for k, size in enumerate(plan.set_sizes) if size > 1]
    dims = tuple(plan.set_sizes[k] for k in multi)
    n = int(count)
    qcard = net.card(query)

    lows = np.full(qcard, np.inf)
    highs = np.full(qcard, -np.inf)
    arglo = np.zeros(qcard, dtype=np.int64)
    arghi = np.zeros(qcard, dtype=np.int64)
    n_zero = 0

    for start in range(0, n, chunk):
        flat = np.arange(start, min(start + chunk, n))
        S = np.zeros((flat.size, len(plan.set_sizes)), dtype=np.intp)
        if multi:
            digits = np.unravel_index(flat, dims)
            for col, dig in zip(multi, digits):
                S[:, col] = dig
        vec = plan.joint(S)
        pe = vec.sum(axis=1)
        ok = pe > 0.0
        n_zero += int((~ok).sum())
        if not np.any(ok):
            continue
        ratios = vec[ok] / pe[ok, None]
        okflat = flat[ok]
        lo_idx = ratios.argmin(axis=0)
        hi_idx = ratios.argmax(axis=0)
        for c in range(qcard):
            if ratios[lo_idx[c], c] < lows[c]:
                lows[c] = ratios[lo_idx[c], c]
                arglo[c] = okflat[lo_idx[c]]
            if ratios[hi_idx[c], c] > highs[c]:
                highs[c] = ratios[hi_idx[c], c]
                arghi[c] = okflat[hi_idx[c]]

    if not np.isfinite(lows).all():
        raise ZeroEvidenceError("every selection gives the evidence probability zero")

    def decode(flat_idx: int) -> dict:
        sel = {}
        if multi:
            digits = np.unravel_index(flat_idx, dims)
            for col, dig in zip(multi, digits):
                sel[plan.set_ids[col]] = int(dig)
        return sel

    return ExhaustiveScan(
        intervals=IntervalPotential(lows, highs),
        argmin=tuple(decode(int(i)) for i in arglo),
        argmax=tuple(decode(int(i)) for i in arghi),
        n_selections=n,
        n_zero_evidence=n_zero,
    )


def exhaustive_bounds(
    net: CredalNetwork,
    query: str,
    category: int,
    evidence: Evidence | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> ProbabilityInterval:
    """Exact [min, max] of p(query = category | evidence) over all selections."""
    if not 0 <= category < net.card(query):
        raise InvalidNetworkError(f"category {category} out of range for {query!r}")
    scan = exhaustive_scan(net, query, evidence, cap=cap)
    return ProbabilityInterval(
        float(scan.intervals.lower[category]), float(scan.intervals.upper[category])
    )
