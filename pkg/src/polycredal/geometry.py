"""Polytope utilities for finitely generated credal sets.

Everything here works on small dense point sets: redundant-vertex
elimination, vertex enumeration of a box intersected with the probability
simplex, exact linear optimization over such a box-simplex, and uniform
simplex sampling.

Redundancy is decided by linear feasibility (is p a convex combination of
the other points?) rather than by a geometric hull construction, so the test
is dimension-agnostic.  The feasibility problems are solved by a
self-contained phase-1 simplex routine; no external solver is used.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import IntervalPotential

#: Point sets larger than this are returned unpruned (hull work gets
#: expensive and the result is only a cost optimization, never a semantic
#: change).
DEFAULT_PRUNE_CAP = 256

_FEAS_TOL = 1e-9
_DEDUP_TOL = 1e-12


class InfeasibleIntervalsError(ValueError):
    """No distribution fits the given interval bounds."""


# ---------------------------------------------------------------------------
# phase-1 simplex: feasibility of A x = b, x >= 0
# ---------------------------------------------------------------------------


def _phase1_feasible(A: np.ndarray, b: np.ndarray, tol: float = _FEAS_TOL) -> bool:
    """Whether A x = b has a solution with x >= 0.

    Dense tableau simplex with Bland's rule (guaranteed termination),
    minimizing the sum of artificial variables.
    """
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau: [A | I | b], basis = artificials
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    # objective row: minimize sum of artificials -> reduced costs
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    # Dantzig's rule for speed; switch to Bland's (anti-cycling) if the pivot
    # count ever suggests stalling.
    bland_after = 20 * (m + 2)
    max_pivots = 200 * (n + m)
    for pivot in range(max_pivots):
        costs = T[m, : n + m]
        if pivot < bland_after:
            j = int(np.argmin(costs))
            if costs[j] >= -tol:
                break
        else:
            negative = costs < -tol
            if not negative.any():
                break
            j = int(np.argmax(negative))  # smallest entering index
        col = T[:m, j]
        pos = col > tol
        if not pos.any():
            return False  # unbounded phase-1 cannot happen; defensive
        ratios = np.where(pos, T[:m, -1] / np.where(pos, col, 1.0), np.inf)
        tie = np.flatnonzero(ratios <= ratios.min() + 1e-15)
        r = int(tie[np.argmin(basis[tie])])
        T[r] /= T[r, j]
        scale = T[:, j].copy()
        scale[r] = 0.0
        T -= scale[:, None] * T[r]
        basis[r] = j
    return bool(-T[m, -1] <= tol)


def _in_convex_hull(p: np.ndarray, points: np.ndarray, tol: float = _FEAS_TOL) -> bool:
    """Whether p is a convex combination of the rows of `points`."""
    if points.shape[0] == 0:
        return False
    A = np.vstack([points.T, np.ones(points.shape[0])])
    b = np.concatenate([p, [1.0]])
    return _phase1_feasible(A, b, tol)


# ---------------------------------------------------------------------------
# redundant-vertex elimination
# ---------------------------------------------------------------------------


def _dedup(points: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    if n <= 1:
        return points
    close = np.max(np.abs(points[:, None, :] - points[None, :, :]), axis=2) <= _DEDUP_TOL
    dropped = np.zeros(n, dtype=bool)
    keep = []
    for i in range(n):
        if not dropped[i]:
            keep.append(i)
            dropped |= close[i]
    return points[keep]


def _hull_2d(coords: np.ndarray) -> np.ndarray:
    """Indices of the strict hull vertices of 2-D points (monotone chain)."""
    order = np.lexsort((coords[:, 1], coords[:, 0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(idx):
        out: list[int] = []
        for i in idx:
            while (
                len(out) >= 2
                and cross(coords[out[-2]], coords[out[-1]], coords[i]) <= 1e-12
            ):
                out.pop()
            out.append(i)
        return out

    lower = half(order)
    upper = half(order[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=int)


def prune_redundant(
    points: Sequence[np.ndarray], max_points: int = DEFAULT_PRUNE_CAP
) -> list[np.ndarray]:
    """Minimal sublist of `points` with the same convex hull.

    A point is dropped iff it is a convex combination of the remaining
    points.  Inputs larger than `max_points` are returned (deduplicated)
    without hull work.
    """
    if len(points) == 0:
        raise ValueError("prune_redundant of an empty point set")
    stack = np.asarray(points, dtype=float)
    if stack.ndim != 2:
        raise ValueError("points must share one dimension")
    stack = _dedup(stack)
    n = stack.shape[0]
    if n <= 2:
        return [v for v in stack]
    if n > max_points:
        return [v for v in stack]

    # Work in affine coordinates: rank detection collapses the simplex facet
    # (and any other flat) so the cheap low-dimensional cases fire often.
    base = stack[0]
    M = stack - base
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 0.0)))
    if rank == 0:
        return [stack[0]]
    coords = M @ vt[:rank].T

    if rank == 1:
        t = coords[:, 0]
        lo, hi = int(np.argmin(t)), int(np.argmax(t))
        return [stack[lo], stack[hi]]
    if rank == 2:
        keep = sorted(_hull_2d(coords))
        return [stack[i] for i in keep]

    # General case: one feasibility problem per candidate, run in the reduced
    # coordinates.  A cheap sweep against directional-extreme seeds discards
    # most interior points first (sound: the seed hull underestimates the
    # full hull), then the survivors are filtered exactly.
    extra = np.random.default_rng(0x5EED).standard_normal((3 * rank, rank))
    directions = np.vstack([np.eye(rank), extra])
    scores = coords @ directions.T
    seeds = np.unique(np.r_[scores.argmin(axis=0), scores.argmax(axis=0)])
    alive = np.ones(n, dtype=bool)
    if seeds.size >= rank + 1:
        seed_pts = coords[seeds]
        is_seed = np.zeros(n, dtype=bool)
        is_seed[seeds] = True
        for i in range(n):
            if not is_seed[i] and _in_convex_hull(coords[i], seed_pts):
                alive[i] = False
    for i in range(n):
        if not alive[i]:
            continue
        alive[i] = False
        others = coords[alive]
        alive[i] = not _in_convex_hull(coords[i], others)
    return [stack[i] for i in range(n) if alive[i]]


# ---------------------------------------------------------------------------
# vertices of {p : lower <= p <= upper, sum(p) = 1}
# ---------------------------------------------------------------------------


def interval_credal_vertices(intervals: IntervalPotential) -> list[np.ndarray]:
    """All vertices of the largest credal set with the given per-category bounds.

    Every vertex pins each coordinate to one of its bounds except at most one
    free coordinate, which absorbs the normalization residue.  Enumerates all
    such patterns and keeps the feasible, distinct ones.
    """
    lo, up = intervals.lower, intervals.upper
    d = lo.size
    if not intervals.is_feasible():
        raise InfeasibleIntervalsError(
            f"no distribution fits: sum(lower)={lo.sum():.6g}, sum(upper)={up.sum():.6g}"
        )
    if d == 1:
        return [np.array([1.0])]

    out: list[np.ndarray] = []

    def push(v: np.ndarray):
        if not any(np.max(np.abs(v - w)) <= _DEDUP_TOL for w in out):
            v = v.copy()
            v.flags.writeable = False
            out.append(v)

    # free coordinate j, all others at a bound
    for j in range(d):
        rest = [k for k in range(d) if k != j]
        for mask in range(1 << (d - 1)):
            v = np.empty(d)
            for pos, k in enumerate(rest):
                v[k] = up[k] if (mask >> pos) & 1 else lo[k]
            v[j] = 1.0 - (v.sum() - v[j])
            if lo[j] - 1e-12 <= v[j] <= up[j] + 1e-12:
                v[j] = min(max(v[j], lo[j]), up[j])
                push(v)
    return out


# ---------------------------------------------------------------------------
# exact linear optimization over the box-simplex
# ---------------------------------------------------------------------------


def constrained_extreme_mass(
    coeffs: Sequence[float],
    bounds: IntervalPotential | Sequence,
    direction: str,
) -> tuple[np.ndarray, float]:
    """Optimize sum(coeffs * q) over {q : bounds, sum(q) = 1}, exactly.

    Greedy: start every coordinate at its lower bound and pour the remaining
    mass into coordinates in ascending (min) or descending (max) coefficient
    order, capping at the upper bounds.  Ties break on coordinate index, so
    the assignment is deterministic.
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    if not isinstance(bounds, IntervalPotential):
        pairs = [(b.lower, b.upper) if hasattr(b, "lower") else tuple(b) for b in bounds]
        bounds = IntervalPotential([p[0] for p in pairs], [p[1] for p in pairs])
    c = np.asarray(coeffs, dtype=float)
    if c.size != bounds.size:
        raise ValueError(f"{c.size} coefficients for {bounds.size} bounds")
    lo, up = bounds.lower, bounds.upper
    residual = 1.0 - float(lo.sum())
    if residual < -_FEAS_TOL or float(up.sum()) < 1.0 - _FEAS_TOL:
        raise InfeasibleIntervalsError("bounds admit no distribution")

    q = lo.copy()
    residual = max(residual, 0.0)
    order = np.argsort(c, kind="stable")
    if direction == "max":
        order = np.argsort(-c, kind="stable")
    for k in order:
        if residual <= 0.0:
            break
        add = min(residual, up[k] - lo[k])
        q[k] += add
        residual -= add
    return q, float(c @ q)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_simplex(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """One point drawn uniformly from the probability simplex.

    Exponential spacings: d iid Exp(1) draws, normalized.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if dimension == 1:
        return np.array([1.0])
    e = rng.exponential(size=dimension)
    return e / e.sum()
