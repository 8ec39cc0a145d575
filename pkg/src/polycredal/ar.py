"""Outer bounds by interval-valued belief propagation on polytrees.

The classic two-pass belief propagation scheme is run with interval-valued
pi/lambda functions.  Products become componentwise interval products;
eliminating parents becomes an exact greedy optimization of a linear
objective over a box of joint parent distributions; and interval potentials
are renormalized with the annihilation/reinforcement bounds

    lower'_i = l_i / (l_i + sum_{j != i} u_j)
    upper'_i = u_i / (u_i + sum_{j != i} l_j)

which are the tight bounds on v_i / sum(v) over the box.  The outputs are
guaranteed outer bounds: they enclose the exact lower/upper conditional
probabilities, and they collapse to the exact values on all-singleton
networks.
"""

from __future__ import annotations

import numpy as np

from .model import (
    ConditionalCredalTable,
    CredalNetwork,
    IntervalPotential,
    ZeroEvidenceError,
    check_query_evidence,
    expectation_bounds,
    interval_projection,
    validate,
)
from .geometry import constrained_extreme_mass


# ---------------------------------------------------------------------------
# interval primitives
# ---------------------------------------------------------------------------


def _quotient(lo: np.ndarray, up: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    denom_l = lo + (up.sum() - up)
    denom_u = up + (lo.sum() - lo)
    ql = np.divide(lo, denom_l, out=np.ones_like(lo), where=denom_l > 0.0)
    qu = np.divide(up, denom_u, out=np.zeros_like(up), where=denom_u > 0.0)
    return ql, qu


def ar_normalize(potential: IntervalPotential) -> IntervalPotential:
    """Bounds on the normalized version of an interval potential.

    Scale-free: multiplying all bounds by a positive constant leaves the
    result unchanged, so it applies to unnormalized products of messages.
    """
    if float(potential.upper.sum()) <= 0.0:
        raise ValueError("cannot normalize an all-zero potential")
    ql, qu = _quotient(potential.lower, potential.upper)
    return IntervalPotential._unchecked(ql, qu)


def _normalize_site(pot: IntervalPotential) -> IntervalPotential:
    # All-zero potentials flow through so the final zero-evidence check can
    # report the condition instead of failing mid-propagation.
    if float(pot.upper.sum()) <= 0.0:
        return pot
    return ar_normalize(pot)


def _product(potentials: list[IntervalPotential]) -> IntervalPotential:
    lo = potentials[0].lower.copy()
    up = potentials[0].upper.copy()
    for p in potentials[1:]:
        lo = lo * p.lower
        up = up * p.upper
    return IntervalPotential._unchecked(lo, up)


def _intersect(a: IntervalPotential, b: IntervalPotential) -> IntervalPotential:
    # both arguments bound the same true object, so the intersection is sound
    # and nonempty up to float dust (which _unchecked flattens)
    return IntervalPotential._unchecked(
        np.maximum(a.lower, b.lower), np.minimum(a.upper, b.upper)
    )


def lambda_combine(
    child_messages: list[IntervalPotential], n_categories: int | None = None
) -> IntervalPotential:
    """Componentwise interval product of child messages; empty product is [1, 1]."""
    if not child_messages:
        if n_categories is None:
            raise ValueError("empty message list needs an explicit category count")
        return IntervalPotential.vacuous(n_categories)
    return _product(list(child_messages))


def _config_box(messages: list[IntervalPotential]) -> tuple[np.ndarray, np.ndarray]:
    # Interval product over the joint parent configuration space; the flat
    # index runs in mixed radix with the first message most significant,
    # matching the table configuration encoding.
    lo = np.array([1.0])
    up = np.array([1.0])
    for m in messages:
        lo = np.multiply.outer(lo, m.lower).reshape(-1)
        up = np.multiply.outer(up, m.upper).reshape(-1)
    return lo, up


def _beta_bounds(messages: list[IntervalPotential]) -> IntervalPotential:
    """Normalized bounds on the joint parent distribution.

    The true joint is a product of normalized per-parent distributions, so it
    lies both in the raw interval product and in its normalization bounds;
    the intersection is therefore a sound (and tighter) box.
    """
    lo, up = _config_box(messages)
    ql, qu = _quotient(lo, up)
    return IntervalPotential._unchecked(np.maximum(lo, ql), np.minimum(up, qu))


# ---------------------------------------------------------------------------
# message computations
# ---------------------------------------------------------------------------


def pi_from_parents(
    parent_messages: list[IntervalPotential], table: ConditionalCredalTable
) -> IntervalPotential:
    """Predictive bounds for a child given interval messages from its parents.

    Per child category, the lower bound distributes the joint parent mass
    greedily onto the per-configuration table minima (and symmetrically for
    the upper bound).  With no parents this is the projection of the root
    credal set.
    """
    if not parent_messages:
        return interval_projection(table.entries[0])
    n_cfg = int(np.prod([m.size for m in parent_messages]))
    if n_cfg != len(table.entries):
        raise ValueError(
            f"{len(table.entries)} table configurations for {n_cfg} parent message combinations"
        )
    coeff_lo = np.empty((n_cfg, table.entries[0][0].size))
    coeff_hi = np.empty_like(coeff_lo)
    for cfg, vs in enumerate(table.entries):
        if len(vs) == 1:
            coeff_lo[cfg] = coeff_hi[cfg] = vs[0]
        else:
            stack = np.asarray(vs)
            coeff_lo[cfg] = stack.min(axis=0)
            coeff_hi[cfg] = stack.max(axis=0)
    beta = _beta_bounds(parent_messages)
    card = coeff_lo.shape[1]
    lows = np.empty(card)
    highs = np.empty(card)
    for j in range(card):
        _, lows[j] = constrained_extreme_mass(coeff_lo[:, j], beta, "min")
        _, highs[j] = constrained_extreme_mass(coeff_hi[:, j], beta, "max")
    return IntervalPotential._unchecked(lows, highs)


def lambda_to_parent(
    lam: IntervalPotential,
    parent_pos: int,
    other_messages: list[IntervalPotential],
    table: ConditionalCredalTable,
    parent_cards: tuple[int, ...],
) -> IntervalPotential:
    """Unnormalized diagnostic bounds sent from a child to one of its parents.

    Mirrors the predictive construction: the per-configuration coefficient is
    the extreme expectation of the lambda bounds over that configuration's
    table vertices, and the remaining parents' joint mass is distributed
    greedily.  The caller renormalizes.
    """
    k = len(parent_cards)
    if parent_pos < 0 or parent_pos >= k:
        raise ValueError(f"parent position {parent_pos} out of range")
    c_lo = np.array([expectation_bounds(vs, lam.lower)[0] for vs in table.entries])
    c_hi = np.array([expectation_bounds(vs, lam.upper)[1] for vs in table.entries])
    shape = tuple(parent_cards)
    c_lo = c_lo.reshape(shape)
    c_hi = c_hi.reshape(shape)
    # move the receiving parent's axis to the front; the rest flatten in
    # declared order, matching the other-message configuration box
    c_lo = np.moveaxis(c_lo, parent_pos, 0).reshape(parent_cards[parent_pos], -1)
    c_hi = np.moveaxis(c_hi, parent_pos, 0).reshape(parent_cards[parent_pos], -1)
    beta = _beta_bounds(other_messages)
    lows = np.empty(parent_cards[parent_pos])
    highs = np.empty(parent_cards[parent_pos])
    for y in range(parent_cards[parent_pos]):
        _, lows[y] = constrained_extreme_mass(c_lo[y], beta, "min")
        _, highs[y] = constrained_extreme_mass(c_hi[y], beta, "max")
    return IntervalPotential(lows, highs)


# ---------------------------------------------------------------------------
# propagation engine
# ---------------------------------------------------------------------------


class _Propagation:
    """One query's worth of interval message passing, rooted at the query.

    Messages are computed on demand along the edges pointing toward the
    query and memoized; children and parents are visited in declaration
    order, so the schedule is deterministic.  Subclasses refine the two
    table-elimination sites (predictive and diagnostic message computation).
    """

    def __init__(self, net: CredalNetwork, query: str, evidence=None):
        self.net = net
        self.query = query
        self.evidence = check_query_evidence(net, query, evidence or {})
        self._pi_cache: dict[tuple[str, str], IntervalPotential] = {}
        self._lam_cache: dict[tuple[str, str], IntervalPotential] = {}
        self._ev_side: dict[tuple[str, str | None], bool] = {}

    # -- structure helpers --

    def _neighbors(self, x: str) -> tuple[str, ...]:
        return self.net.parents(x) + self.net.children(x)

    def _has_evidence_side(self, x: str, excluding: str | None) -> bool:
        """Whether x's side of the edge (x, excluding) contains any evidence."""
        key = (x, excluding)
        cached = self._ev_side.get(key)
        if cached is not None:
            return cached
        self._ev_side[key] = False  # cycle guard; polytrees never revisit
        result = x in self.evidence or any(
            self._has_evidence_side(m, x) for m in self._neighbors(x) if m != excluding
        )
        self._ev_side[key] = result
        return result

    # -- elimination hooks (overridden by the credal variant) --

    def _pi_hook(
        self, msgs: list[IntervalPotential], table: ConditionalCredalTable
    ) -> IntervalPotential:
        return pi_from_parents(msgs, table)

    def _lambda_hook(
        self,
        lam: IntervalPotential,
        parent_pos: int,
        msgs: list[IntervalPotential],
        table: ConditionalCredalTable,
        parent_cards: tuple[int, ...],
    ) -> IntervalPotential:
        return _normalize_site(lambda_to_parent(lam, parent_pos, msgs, table, parent_cards))

    # -- messages --

    def _pi_value(self, x: str) -> IntervalPotential:
        parents = self.net.parents(x)
        if not parents:
            return interval_projection(self.net.tables[x].entries[0])
        msgs = [self._pi_message(y, x) for y in parents]
        return self._pi_hook(msgs, self.net.tables[x])

    def _lambda_parts(self, x: str, except_child: str | None = None) -> list[IntervalPotential]:
        parts = []
        if x in self.evidence:
            parts.append(IntervalPotential.indicator(self.net.card(x), self.evidence[x]))
        for z in self.net.children(x):
            if z != except_child and self._has_evidence_side(z, x):
                parts.append(self._lambda_message(z, x))
        return parts

    def _pi_message(self, x: str, to_child: str) -> IntervalPotential:
        key = (x, to_child)
        if key not in self._pi_cache:
            parts = self._lambda_parts(x, except_child=to_child)
            pi = self._pi_value(x)
            if parts:
                msg = _normalize_site(_product([pi] + parts))
            else:
                # no evidence on this side beyond the prior: the message is
                # exactly the predictive bounds, already normalized
                msg = pi
            self._pi_cache[key] = msg
        return self._pi_cache[key]

    def _lambda_message(self, x: str, to_parent: str) -> IntervalPotential:
        key = (x, to_parent)
        if key not in self._lam_cache:
            lam = lambda_combine(self._lambda_parts(x), self.net.card(x))
            parents = self.net.parents(x)
            pos = parents.index(to_parent)
            others = [p for p in parents if p != to_parent]
            msgs = [self._pi_message(p, x) for p in others]
            cards = self.net.parent_cards(x)
            self._lam_cache[key] = self._lambda_hook(lam, pos, msgs, self.net.tables[x], cards)
        return self._lam_cache[key]

    def run(self) -> IntervalPotential:
        pi = self._pi_value(self.query)
        parts = self._lambda_parts(self.query)
        result = _normalize_site(_product([pi] + parts)) if parts else pi
        if float(result.upper.sum()) <= 0.0:
            raise ZeroEvidenceError(
                "evidence has probability zero under every vertex selection"
            )
        return result


def propagate(net: CredalNetwork, query: str, evidence=None) -> IntervalPotential:
    """Outer bounds on p(query | evidence), one interval per query category."""
    validate(net).raise_if_invalid()
    return _Propagation(net, query, evidence).run()
