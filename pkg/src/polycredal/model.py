"""Domain types for polytree credal networks.

A credal network attaches to every variable one conditional credal set per
parent configuration, each represented by a finite list of vertex
distributions.  Parent configurations are indexed in mixed radix over the
parents in declared order, most significant first; that ordering is part of
the on-disk format contract.

All types are immutable after construction and safe to share between
concurrent queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

#: Absolute tolerance on sum(p) == 1 for vertex distributions.  Rows beyond
#: this tolerance are rejected rather than renormalized, so that oracle
#: comparisons are never silently perturbed.
SUM_TOL = 1e-9

#: Componentwise tolerance used when deduplicating vertex lists.
DEDUP_TOL = 1e-12


class InvalidNetworkError(ValueError):
    """A network (or network fragment) violates a structural invariant."""


class ZeroEvidenceError(Exception):
    """The requested conditional is undefined: the evidence has probability 0."""


class LocalSetId(NamedTuple):
    """Address of one local credal set: a variable plus a parent configuration."""

    variable: str
    config: int


@dataclass(frozen=True)
class Variable:
    """A categorical variable with ordered, uniquely labeled categories."""

    name: str
    categories: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(self.categories) < 1:
            raise InvalidNetworkError(f"variable {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise InvalidNetworkError(f"variable {self.name!r} has duplicate category labels")

    @property
    def card(self) -> int:
        return len(self.categories)

    def category_index(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise KeyError(f"variable {self.name!r} has no category {label!r}") from None


def as_distribution(probs: Iterable[float], *, check: bool = True) -> np.ndarray:
    """Convert to an immutable float64 vector, optionally checking normalization."""
    p = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise InvalidNetworkError("a distribution must be a nonempty 1-D vector")
    if check:
        if np.any(p < -DEDUP_TOL) or np.any(p > 1.0 + DEDUP_TOL):
            raise InvalidNetworkError(f"distribution entries outside [0, 1]: {p!r}")
        if abs(float(p.sum()) - 1.0) > SUM_TOL:
            raise InvalidNetworkError(f"distribution does not sum to 1 within {SUM_TOL}: {p!r}")
    p = np.clip(p, 0.0, 1.0)
    p.flags.writeable = False
    return p


def _dedup_exact(vertices: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    # Exact float equality, first occurrence wins.
    seen: list[np.ndarray] = []
    for v in vertices:
        if not any(v.shape == w.shape and np.array_equal(v, w) for w in seen):
            seen.append(v)
    return tuple(seen)


class ConditionalCredalTable:
    """Vertex lists for one variable: one nonempty list per parent configuration.

    ``entries[c]`` holds the vertices of the credal set for parent
    configuration ``c``.  Lists for different configurations carry no mutual
    constraint (they are separately specified).  Vertex rows are deduplicated
    with exact float equality on construction; convex-hull pruning is an
    explicit geometry operation, never applied implicitly.
    """

    __slots__ = ("child", "parents", "entries")

    def __init__(
        self,
        child: str,
        parents: Sequence[str],
        entries: Sequence[Sequence[Iterable[float]]],
        *,
        check: bool = True,
    ):
        self.child = child
        self.parents = tuple(parents)
        if len(set(self.parents)) != len(self.parents):
            raise InvalidNetworkError(f"table for {child!r} lists a parent twice")
        rows: list[tuple[np.ndarray, ...]] = []
        for cfg, vertex_list in enumerate(entries):
            vs = [as_distribution(v, check=check) for v in vertex_list]
            if not vs:
                raise InvalidNetworkError(
                    f"table for {child!r} has an empty vertex list at configuration {cfg}"
                )
            if len({v.size for v in vs}) != 1:
                raise InvalidNetworkError(
                    f"table for {child!r} mixes vertex lengths at configuration {cfg}"
                )
            rows.append(_dedup_exact(vs))
        if not rows:
            raise InvalidNetworkError(f"table for {child!r} has no configurations")
        self.entries: tuple[tuple[np.ndarray, ...], ...] = tuple(rows)

    def __repr__(self):
        sizes = [len(e) for e in self.entries]
        return f"ConditionalCredalTable({self.child!r}, parents={self.parents}, sizes={sizes})"


class CredalNetwork:
    """An immutable DAG of variables with one conditional credal table each.

    The constructor only requires referential consistency (every table child
    and parent resolves to a declared variable); semantic invariants such as
    acyclicity and the polytree property are checked by :func:`validate`.
    """

    def __init__(self, variables: Sequence[Variable], tables: Sequence[ConditionalCredalTable]):
        self.variables = tuple(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise InvalidNetworkError("variable names are not unique")
        self._by_name = {v.name: v for v in self.variables}
        self._index = {v.name: i for i, v in enumerate(self.variables)}

        table_map: dict[str, ConditionalCredalTable] = {}
        for t in tables:
            if t.child not in self._by_name:
                raise InvalidNetworkError(f"table refers to unknown variable {t.child!r}")
            if t.child in table_map:
                raise InvalidNetworkError(f"variable {t.child!r} has more than one table")
            for p in t.parents:
                if p not in self._by_name:
                    raise InvalidNetworkError(f"table for {t.child!r} has unknown parent {p!r}")
            table_map[t.child] = t
        missing = [n for n in names if n not in table_map]
        if missing:
            raise InvalidNetworkError(f"variables without a table: {missing}")
        self.tables: dict[str, ConditionalCredalTable] = {n: table_map[n] for n in names}

        children: dict[str, list[str]] = {n: [] for n in names}
        for n in names:
            for p in self.tables[n].parents:
                children[p].append(n)
        self._children = {n: tuple(cs) for n, cs in children.items()}

    # -- structure accessors -------------------------------------------------

    def variable(self, name: str) -> Variable:
        return self._by_name[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def card(self, name: str) -> int:
        return self._by_name[name].card

    def parents(self, name: str) -> tuple[str, ...]:
        return self.tables[name].parents

    def children(self, name: str) -> tuple[str, ...]:
        return self._children[name]

    def parent_cards(self, name: str) -> tuple[int, ...]:
        return tuple(self.card(p) for p in self.parents(name))

    def n_configs(self, name: str) -> int:
        return int(math.prod(self.parent_cards(name)))

    def config_index(self, name: str, parent_categories: Sequence[int]) -> int:
        """Mixed-radix configuration index, first declared parent most significant."""
        cards = self.parent_cards(name)
        if len(parent_categories) != len(cards):
            raise InvalidNetworkError(f"expected {len(cards)} parent categories for {name!r}")
        idx = 0
        for digit, card in zip(parent_categories, cards):
            if not 0 <= digit < card:
                raise InvalidNetworkError(f"parent category {digit} out of range for {name!r}")
            idx = idx * card + digit
        return idx

    def config_digits(self, name: str, config: int) -> tuple[int, ...]:
        cards = self.parent_cards(name)
        digits = []
        for card in reversed(cards):
            digits.append(config % card)
            config //= card
        if config:
            raise InvalidNetworkError(f"configuration index out of range for {name!r}")
        return tuple(reversed(digits))

    def vertices(self, set_id: LocalSetId) -> tuple[np.ndarray, ...]:
        table = self.tables[set_id.variable]
        if not 0 <= set_id.config < len(table.entries):
            raise InvalidNetworkError(f"no configuration {set_id.config} for {set_id.variable!r}")
        return table.entries[set_id.config]

    def local_set_ids(self) -> tuple[LocalSetId, ...]:
        """All local credal sets in canonical (declaration, configuration) order."""
        out = []
        for v in self.variables:
            for cfg in range(len(self.tables[v.name].entries)):
                out.append(LocalSetId(v.name, cfg))
        return tuple(out)

    def topological_order(self) -> tuple[str, ...]:
        """Variable names in a parents-before-children order; raises on cycles."""
        indeg = {n: len(self.parents(n)) for n in self.names}
        ready = [n for n in self.names if indeg[n] == 0]
        order: list[str] = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in self.children(n):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.variables):
            raise InvalidNetworkError("network graph contains a directed cycle")
        return tuple(order)

    def is_precise(self) -> bool:
        """True when every vertex list is a singleton (a Bayesian network)."""
        return all(
            len(vs) == 1 for t in self.tables.values() for vs in t.entries
        )

    def __repr__(self):
        return f"CredalNetwork({len(self.variables)} variables)"


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problem: str | None = None

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise InvalidNetworkError(self.problem or "invalid network")


def validate(net: CredalNetwork) -> ValidationReport:
    """Check the semantic invariants of a network, reporting the first violation.

    Checks, in order: directed acyclicity, tree-shaped undirected skeleton,
    a complete set of parent configurations per table, vertex dimensions, and
    vertex normalization within :data:`SUM_TOL`.
    """
    try:
        net.topological_order()
    except InvalidNetworkError:
        return ValidationReport(False, "cycle: the directed graph is not acyclic")

    # Undirected skeleton must be a tree: n-1 distinct edges and connected.
    edges = set()
    for n in net.names:
        for p in net.parents(n):
            edges.add(frozenset((n, p)))
    n_vars = len(net.variables)
    if len(edges) != n_vars - 1:
        return ValidationReport(
            False,
            f"not a polytree: undirected skeleton has {len(edges)} edges for {n_vars} variables",
        )
    if n_vars > 1:
        adj: dict[str, set[str]] = {n: set() for n in net.names}
        for e in edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        seen = {net.names[0]}
        stack = [net.names[0]]
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        if len(seen) != n_vars:
            return ValidationReport(False, "not a polytree: undirected skeleton is disconnected")

    for n in net.names:
        table = net.tables[n]
        expected = net.n_configs(n)
        if len(table.entries) != expected:
            return ValidationReport(
                False,
                f"missing configuration: table for {n!r} has {len(table.entries)} "
                f"configurations, expected {expected}",
            )
        card = net.card(n)
        for cfg, vs in enumerate(table.entries):
            for k, v in enumerate(vs):
                if v.size != card:
                    return ValidationReport(
                        False,
                        f"vertex {k} of {n!r} configuration {cfg} has length {v.size}, "
                        f"expected {card}",
                    )
                if abs(float(v.sum()) - 1.0) > SUM_TOL:
                    return ValidationReport(
                        False,
                        f"non-normalized vertex: {n!r} configuration {cfg} vertex {k} "
                        f"sums to {float(v.sum()):.12g}",
                    )
    return ValidationReport(True)


# -- intervals ----------------------------------------------------------------


@dataclass(frozen=True)
class ProbabilityInterval:
    """A closed interval of probabilities, 0 <= lower <= upper <= 1."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, up = float(self.lower), float(self.upper)
        if up < lo:
            if lo - up > 1e-9:
                raise ValueError(f"inverted interval [{lo}, {up}]")
            lo = up = 0.5 * (lo + up)
        lo, up = min(max(lo, 0.0), 1.0), min(max(up, 0.0), 1.0)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def encloses(self, other: "ProbabilityInterval", slack: float = 0.0) -> bool:
        return self.lower - slack <= other.lower and other.upper <= self.upper + slack


class IntervalPotential:
    """Per-category [lower, upper] bounds over one variable (or config space).

    The payload of interval message passing.  Values are kept as paired numpy
    vectors; entries always satisfy ``0 <= lower <= upper <= 1`` up to float
    dust, which is clamped on construction.
    """

    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).copy()
        up = np.asarray(upper, dtype=float).copy()
        if lo.shape != up.shape or lo.ndim != 1 or lo.size < 1:
            raise ValueError("lower/upper must be matching nonempty vectors")
        bad = lo - up
        if np.any(bad > 1e-9):
            raise ValueError(f"inverted interval bounds: lower={lo!r} upper={up!r}")
        mid = np.where(bad > 0, 0.5 * (lo + up), 0.0)
        lo = np.where(bad > 0, mid, lo)
        up = np.where(bad > 0, mid, up)
        self.lower = np.clip(lo, 0.0, 1.0)
        self.upper = np.clip(up, 0.0, 1.0)
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False

    @classmethod
    def _unchecked(cls, lower: np.ndarray, upper: np.ndarray) -> "IntervalPotential":
        # internal fast path: bounds already known valid up to float dust
        self = object.__new__(cls)
        self.lower = np.minimum(lower, upper)
        self.upper = upper
        return self

    @classmethod
    def point(cls, p) -> "IntervalPotential":
        p = np.asarray(p, dtype=float)
        return cls(p, p)

    @classmethod
    def indicator(cls, size: int, index: int) -> "IntervalPotential":
        v = np.zeros(size)
        v[index] = 1.0
        return cls(v, v)

    @classmethod
    def vacuous(cls, size: int) -> "IntervalPotential":
        """The multiplicative identity [1, 1] per category."""
        one = np.ones(size)
        return cls(one, one)

    @property
    def size(self) -> int:
        return self.lower.size

    def intervals(self) -> tuple[ProbabilityInterval, ...]:
        return tuple(ProbabilityInterval(l, u) for l, u in zip(self.lower, self.upper))

    def is_feasible(self, tol: float = 1e-9) -> bool:
        """Whether some distribution fits inside the bounds."""
        return float(self.lower.sum()) <= 1.0 + tol and float(self.upper.sum()) >= 1.0 - tol

    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def encloses(self, other: "IntervalPotential", slack: float = 0.0) -> bool:
        return bool(
            np.all(self.lower - slack <= other.lower) and np.all(other.upper <= self.upper + slack)
        )

    def __eq__(self, other):
        return (
            isinstance(other, IntervalPotential)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __repr__(self):
        pairs = ", ".join(f"[{l:.6g}, {u:.6g}]" for l, u in zip(self.lower, self.upper))
        return f"IntervalPotential({pairs})"


# -- operations ----------------------------------------------------------------


def check_query_evidence(
    net: CredalNetwork, query: str | None, evidence: Mapping[str, int] | None
) -> dict[str, int]:
    """Validate a query/evidence pair against a network; returns the evidence dict."""
    ev = dict(evidence or {})
    for var, cat in ev.items():
        if var not in net.tables:
            raise InvalidNetworkError(f"evidence names unknown variable {var!r}")
        if not 0 <= cat < net.card(var):
            raise InvalidNetworkError(f"evidence category {cat} out of range for {var!r}")
    if query is not None:
        if query not in net.tables:
            raise InvalidNetworkError(f"unknown query variable {query!r}")
        if query in ev:
            raise InvalidNetworkError(f"query variable {query!r} appears in the evidence")
    return ev


def count_potential_vertices(net: CredalNetwork) -> int:
    """Number of joint vertex selections, as an exact big integer."""
    count = 1
    for set_id in net.local_set_ids():
        count *= len(net.vertices(set_id))
    return count


def interval_projection(vertices: Sequence[np.ndarray]) -> IntervalPotential:
    """Componentwise [min, max] over a nonempty list of vertices."""
    if len(vertices) == 0:
        raise ValueError("interval_projection of an empty vertex list")
    stack = np.asarray(vertices, dtype=float)
    return IntervalPotential(stack.min(axis=0), stack.max(axis=0))


def expectation_bounds(vertices: Sequence[np.ndarray], f: Sequence[float]) -> tuple[float, float]:
    """Min and max of sum_j f[j] p[j] over the vertex list."""
    if len(vertices) == 0:
        raise ValueError("expectation_bounds of an empty vertex list")
    fv = np.asarray(f, dtype=float)
    stack = np.asarray(vertices, dtype=float)
    if stack.shape[1] != fv.size:
        raise ValueError(f"f has length {fv.size}, vertices have length {stack.shape[1]}")
    vals = stack @ fv
    return float(vals.min()), float(vals.max())


def restrict(net: CredalNetwork, selection: Mapping[LocalSetId, int]) -> CredalNetwork:
    """Fix the chosen vertex of every selected local set; leave others unchanged."""
    by_var: dict[str, dict[int, int]] = {}
    for set_id, vertex_idx in selection.items():
        table = net.tables.get(set_id.variable)
        if table is None:
            raise InvalidNetworkError(f"selection names unknown variable {set_id.variable!r}")
        if not 0 <= set_id.config < len(table.entries):
            raise InvalidNetworkError(
                f"selection names unknown configuration {set_id.config} of {set_id.variable!r}"
            )
        if not 0 <= vertex_idx < len(table.entries[set_id.config]):
            raise InvalidNetworkError(
                f"vertex index {vertex_idx} out of range for {set_id.variable!r} "
                f"configuration {set_id.config}"
            )
        by_var.setdefault(set_id.variable, {})[set_id.config] = vertex_idx

    tables = []
    for name in net.names:
        old = net.tables[name]
        chosen = by_var.get(name)
        if not chosen:
            tables.append(old)
            continue
        entries = [
            (old.entries[cfg][chosen[cfg]],) if cfg in chosen else old.entries[cfg]
            for cfg in range(len(old.entries))
        ]
        new = ConditionalCredalTable.__new__(ConditionalCredalTable)
        new.child = old.child
        new.parents = old.parents
        new.entries = tuple(tuple(e) for e in entries)
        tables.append(new)
    return CredalNetwork(net.variables, tables)
