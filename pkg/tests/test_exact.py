import itertools

import numpy as np
import pytest

from polycredal import (
    EnumerationCapError,
    InvalidNetworkError,
    LocalSetId,
    ZeroEvidenceError,
    count_potential_vertices,
    evidence_probability,
    exhaustive_bounds,
    exhaustive_scan,
    marginal,
    restrict,
)
from conftest import make_net, naive_conditional, naive_joint_vector, oracle_ensemble, single_root


class TestMarginal:
    def test_chain_identity_table(self):
        net = make_net(
            {
                "X": (2, [], [[[0.5, 0.5]]]),
                "Y": (2, ["X"], [[[1.0, 0.0]], [[0.0, 1.0]]]),
            }
        )
        np.testing.assert_allclose(marginal(net, "Y"), [0.5, 0.5])

    def test_root_query_returns_prior(self):
        net = single_root([[0.3, 0.7]])
        np.testing.assert_allclose(marginal(net, "X"), [0.3, 0.7])

    def test_collider_hand_value(self, collider_bn):
        # 0.6*(0.3*0.9 + 0.7*0.5) + 0.4*(0.3*0.4 + 0.7*0.1) = 0.448
        np.testing.assert_allclose(marginal(collider_bn, "Y")[0], 0.448, atol=1e-12)

    def test_conditioning_flows_upstream(self, collider_bn):
        post = marginal(collider_bn, "X", {"Y": 0})
        # p(x0 | y0) = 0.6*(0.27+0.35) / 0.448
        assert post[0] == pytest.approx(0.372 / 0.448, abs=1e-12)

    def test_zero_evidence_distinct_error(self):
        net = make_net(
            {
                "X": (2, [], [[[1.0, 0.0]]]),
                "Y": (2, ["X"], [[[1.0, 0.0]], [[0.0, 1.0]]]),
            }
        )
        with pytest.raises(ZeroEvidenceError):
            marginal(net, "X", {"Y": 1})

    def test_requires_all_singleton(self):
        net = single_root([[0.3, 0.7], [0.5, 0.5]])
        with pytest.raises(InvalidNetworkError):
            marginal(net, "X")

    def test_matches_naive_joint_on_random_networks(self):
        for seed, net in oracle_ensemble(12, max_nodes=6, verts=(1, 1)):
            query = net.names[0]
            evidence = {net.names[-1]: 0} if len(net.names) > 1 else {}
            expected = naive_conditional(net, query, evidence)
            np.testing.assert_allclose(
                marginal(net, query, evidence), expected, atol=1e-12
            )


class TestEvidenceProbability:
    def test_empty_evidence(self, collider_bn):
        assert evidence_probability(collider_bn, {}) == 1.0

    def test_root_observation(self, collider_bn):
        assert evidence_probability(collider_bn, {"Z": 0}) == pytest.approx(0.3, abs=1e-12)

    def test_collider_child(self, collider_bn):
        assert evidence_probability(collider_bn, {"Y": 0}) == pytest.approx(0.448, abs=1e-12)

    def test_impossible_evidence_is_zero(self):
        net = make_net(
            {
                "X": (2, [], [[[1.0, 0.0]]]),
                "Y": (2, ["X"], [[[1.0, 0.0]], [[0.0, 1.0]]]),
            }
        )
        assert evidence_probability(net, {"Y": 1}) == 0.0

    def test_all_variables_observed(self, collider_bn):
        p = evidence_probability(collider_bn, {"X": 0, "Z": 0, "Y": 0})
        assert p == pytest.approx(0.6 * 0.3 * 0.9, abs=1e-12)


class TestExhaustive:
    def test_single_node_equals_projection(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5]])
        interval = exhaustive_bounds(net, "X", 0)
        assert (interval.lower, interval.upper) == (0.2, 0.5)

    def test_all_singleton_degenerate(self, collider_bn):
        interval = exhaustive_bounds(collider_bn, "Y", 0)
        assert interval.lower == interval.upper == pytest.approx(0.448, abs=1e-12)

    def test_chain_with_eight_selections_matches_loop(self):
        two = [[0.9, 0.1], [0.4, 0.6]]
        net = make_net({"X": (2, [], [two]), "Y": (2, ["X"], [two, two])})
        # reference: restrict to every one of the 8 selections, query Y
        ids = net.local_set_ids()
        values = []
        for combo in itertools.product(range(2), repeat=3):
            sub = restrict(net, dict(zip(ids, combo)))
            values.append(naive_conditional(sub, "Y", {})[0])
        interval = exhaustive_bounds(net, "Y", 0)
        assert interval.lower == pytest.approx(min(values), abs=1e-12)
        assert interval.upper == pytest.approx(max(values), abs=1e-12)

    def test_cap_enforced(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5], [0.1, 0.9]])
        with pytest.raises(EnumerationCapError):
            exhaustive_bounds(net, "X", 0, cap=2)

    def test_witnesses_reproduce_bounds(self):
        for seed, net in oracle_ensemble(8, max_nodes=5, verts=(1, 2), max_count=2**10):
            query = net.names[0]
            evidence = {net.names[-1]: 0} if len(net.names) > 1 else {}
            scan = exhaustive_scan(net, query, evidence)
            for c in range(net.card(query)):
                for witness, endpoint in (
                    (scan.argmin[c], scan.intervals.lower[c]),
                    (scan.argmax[c], scan.intervals.upper[c]),
                ):
                    sub = restrict(net, witness)
                    value = naive_conditional(sub, query, evidence)[c]
                    assert value == pytest.approx(endpoint, abs=1e-12)

    def test_selections_with_zero_evidence_are_skipped(self):
        # one vertex makes the evidence impossible, the other does not
        net = make_net(
            {
                "X": (2, [], [[[1.0, 0.0]]]),
                "Y": (2, ["X"], [[[1.0, 0.0], [0.5, 0.5]], [[0.0, 1.0]]]),
            }
        )
        scan = exhaustive_scan(net, "X", {"Y": 1})
        assert scan.n_zero_evidence == 1
        assert scan.intervals.lower[0] == scan.intervals.upper[0] == 1.0

    def test_all_zero_evidence_raises(self):
        net = make_net(
            {
                "X": (2, [], [[[1.0, 0.0]]]),
                "Y": (2, ["X"], [[[1.0, 0.0]], [[0.0, 1.0]]]),
            }
        )
        with pytest.raises(ZeroEvidenceError):
            exhaustive_scan(net, "X", {"Y": 1})

    def test_matches_selectionwise_naive_joint(self):
        # the scan agrees with the slowest possible double loop
        for seed, net in oracle_ensemble(6, max_nodes=5, cats=(2, 2), verts=(1, 2),
                                         max_count=2**8, base_seed=2000):
            query = net.names[0]
            ids = [sid for sid in net.local_set_ids() if len(net.vertices(sid)) > 1]
            sizes = [len(net.vertices(sid)) for sid in ids]
            best = np.full(net.card(query), -np.inf)
            worst = np.full(net.card(query), np.inf)
            for combo in itertools.product(*[range(s) for s in sizes]):
                sub = restrict(net, dict(zip(ids, combo)))
                vec = naive_joint_vector(sub, query, {})
                cond = vec / vec.sum()
                best = np.maximum(best, cond)
                worst = np.minimum(worst, cond)
            scan = exhaustive_scan(net, query, {})
            np.testing.assert_allclose(scan.intervals.lower, worst, atol=1e-12)
            np.testing.assert_allclose(scan.intervals.upper, best, atol=1e-12)
