"""Shared fixtures and independent reference implementations.

The reference routines here deliberately avoid the library's computational
machinery: joint probabilities come from brute-force summation over all
joint states, and polytope vertices come from direct bound-pattern
enumeration.  Tests compare the fast paths against these.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from polycredal import (
    ConditionalCredalTable,
    CredalNetwork,
    GeneratorConfig,
    IntervalPotential,
    LocalSetId,
    Variable,
    count_potential_vertices,
    random_polytree,
)


# ---------------------------------------------------------------------------
# independent reference implementations
# ---------------------------------------------------------------------------


def naive_joint_vector(net: CredalNetwork, query: str, evidence: dict) -> np.ndarray:
    """p(query = c, evidence) for every c, by summing the full joint table.

    Requires an all-singleton network.  Exponential and proud of it.
    """
    names = list(net.names)
    cards = [net.card(n) for n in names]
    qpos = names.index(query)
    out = np.zeros(net.card(query))
    for state in itertools.product(*[range(c) for c in cards]):
        if any(state[names.index(v)] != c for v, c in evidence.items()):
            continue
        p = 1.0
        for i, name in enumerate(names):
            digits = [state[names.index(par)] for par in net.parents(name)]
            cfg = net.config_index(name, digits)
            vertex = net.vertices(LocalSetId(name, cfg))[0]
            p *= vertex[state[i]]
        out[state[qpos]] += p
    return out


def naive_conditional(net: CredalNetwork, query: str, evidence: dict) -> np.ndarray:
    vec = naive_joint_vector(net, query, evidence)
    return vec / vec.sum()


def box_simplex_vertices(lower, upper) -> list[np.ndarray]:
    """Vertices of {p : lower <= p <= upper, sum(p) = 1} by pattern enumeration.

    Each vertex pins every coordinate except at most one at a bound; the free
    coordinate absorbs the slack.
    """
    lo = np.asarray(lower, float)
    up = np.asarray(upper, float)
    d = lo.size
    if d == 1:
        return [np.array([1.0])]
    out: list[np.ndarray] = []
    for j in range(d):
        rest = [k for k in range(d) if k != j]
        for pattern in itertools.product(*[(lo[k], up[k]) for k in rest]):
            v = np.empty(d)
            for k, val in zip(rest, pattern):
                v[k] = val
            v[j] = 1.0 - sum(pattern)
            if lo[j] - 1e-12 <= v[j] <= up[j] + 1e-12:
                v[j] = min(max(v[j], lo[j]), up[j])
                if not any(np.max(np.abs(v - w)) <= 1e-10 for w in out):
                    out.append(v)
    return out


def support_function_equal(points_a, points_b, rng, n_dirs=400, tol=1e-9) -> bool:
    """Whether two point sets have the same convex hull, probed by support values."""
    a = np.asarray(points_a, float)
    b = np.asarray(points_b, float)
    dirs = rng.standard_normal((n_dirs, a.shape[1]))
    sup_a = (a @ dirs.T).max(axis=0)
    sup_b = (b @ dirs.T).max(axis=0)
    return bool(np.max(np.abs(sup_a - sup_b)) <= tol)


# ---------------------------------------------------------------------------
# network builders
# ---------------------------------------------------------------------------


def make_net(spec: dict) -> CredalNetwork:
    """Compact builder: {name: (categories, parents, entries)}."""
    variables = []
    tables = []
    for name, (n_cats, parents, entries) in spec.items():
        variables.append(Variable(name, tuple(f"{name.lower()}{j}" for j in range(n_cats))))
        tables.append(ConditionalCredalTable(name, parents, entries))
    return CredalNetwork(variables, tables)


def single_root(vertices, name="X") -> CredalNetwork:
    n_cats = len(vertices[0])
    return make_net({name: (n_cats, [], [vertices])})


@pytest.fixture
def collider_bn() -> CredalNetwork:
    """Binary X -> Y <- Z with point tables; p(y0) = 0.448 by hand."""
    return make_net(
        {
            "X": (2, [], [[[0.6, 0.4]]]),
            "Z": (2, [], [[[0.3, 0.7]]]),
            "Y": (
                2,
                ["X", "Z"],
                [
                    [[0.9, 0.1]],  # x0 z0
                    [[0.5, 0.5]],  # x0 z1
                    [[0.4, 0.6]],  # x1 z0
                    [[0.1, 0.9]],  # x1 z1
                ],
            ),
        }
    )


def oracle_ensemble(n_instances, max_nodes=8, cats=(2, 3), verts=(1, 3), max_count=2**16,
                    base_seed=1000):
    """Seeded random instances small enough for the exhaustive oracle."""
    nets = []
    seed = base_seed
    while len(nets) < n_instances:
        seed += 1
        node_rng = np.random.default_rng(seed)
        cfg = GeneratorConfig(
            node_count=int(node_rng.integers(2, max_nodes + 1)),
            category_range=cats,
            vertex_range=verts,
            seed=seed,
        )
        net = random_polytree(cfg)
        if count_potential_vertices(net) <= max_count:
            nets.append((seed, net))
    return nets
