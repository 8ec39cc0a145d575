import numpy as np
import pytest

from polycredal import (
    LocalSetId,
    ZeroEvidenceError,
    best_vertex_for_set,
    exhaustive_scan,
    marginal,
    multistart,
    optimize,
    restrict,
)
from polycredal.local_search import default_ordering
from conftest import make_net, oracle_ensemble, single_root


class TestBestVertexForSet:
    def test_singleton_list_returns_index_zero(self, collider_bn):
        sid = collider_bn.local_set_ids()[0]
        sel = {s: 0 for s in collider_bn.local_set_ids()}
        idx, value = best_vertex_for_set(collider_bn, sel, sid, "Y", 0, {}, "max")
        assert idx == 0
        assert value == pytest.approx(0.448, abs=1e-12)

    def test_single_node_maximum(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5]])
        sid = net.local_set_ids()[0]
        idx, value = best_vertex_for_set(net, {sid: 0}, sid, "X", 0, {}, "max")
        assert idx == 1
        assert value == pytest.approx(0.5)

    def test_agrees_with_candidate_loop(self):
        two = [[0.9, 0.1], [0.4, 0.6]]
        net = make_net({"X": (2, [], [two]), "Y": (2, ["X"], [two, two])})
        ids = net.local_set_ids()
        sel = {sid: 0 for sid in ids}
        for sid in ids:
            idx, value = best_vertex_for_set(net, sel, sid, "Y", 0, {}, "min")
            candidates = []
            for v in range(2):
                trial = dict(sel)
                trial[sid] = v
                candidates.append(marginal(restrict(net, trial), "Y")[0])
            assert value == pytest.approx(min(candidates), abs=1e-12)
            assert candidates[idx] == pytest.approx(min(candidates), abs=1e-12)

    def test_all_zero_evidence_raises(self):
        # X is pinned to x0 and every vertex of K(Y | x0) puts no mass on y1,
        # so no candidate at (Y, 0) can revive the evidence Y = y1
        net = make_net(
            {
                "X": (2, [], [[[1.0, 0.0]]]),
                "Y": (2, ["X"], [[[1.0, 0.0]], [[0.0, 1.0], [0.5, 0.5]]]),
            }
        )
        sid = LocalSetId("Y", 0)
        sel = {s: 0 for s in net.local_set_ids()}
        with pytest.raises(ZeroEvidenceError):
            best_vertex_for_set(net, sel, sid, "X", 0, {"Y": 1}, "max")


class TestOptimize:
    def test_all_singleton_converges_immediately(self, collider_bn):
        state = optimize(collider_bn, "Y", 0, {}, "max", rng=np.random.default_rng(0))
        assert state.value == pytest.approx(0.448, abs=1e-12)
        assert state.cycles <= 1

    def test_single_credal_node_reaches_exact_bound(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5]])
        hi = optimize(net, "X", 0, {}, "max", rng=np.random.default_rng(0))
        lo = optimize(net, "X", 0, {}, "min", rng=np.random.default_rng(0))
        assert hi.value == pytest.approx(0.5)
        assert lo.value == pytest.approx(0.2)

    def test_selection_reproduces_value(self):
        for seed, net in oracle_ensemble(10, max_count=2**10):
            query = net.names[0]
            state = optimize(net, query, 0, {}, "max", rng=np.random.default_rng(seed))
            replay = marginal(restrict(net, state.selection), query)[0]
            assert replay == pytest.approx(state.value, abs=1e-9)

    def test_trajectory_monotone_and_terminates(self):
        for seed, net in oracle_ensemble(10, max_count=2**12, base_seed=6000):
            query = net.names[0]
            for direction in ("max", "min"):
                state = optimize(
                    net, query, 0, {}, direction, rng=np.random.default_rng(seed)
                )
                assert not state.capped
                steps = np.array(state.trajectory)
                diffs = np.diff(steps[np.isfinite(steps)])
                if direction == "max":
                    assert np.all(diffs >= -1e-12)
                else:
                    assert np.all(diffs <= 1e-12)

    def test_inner_bound_soundness(self):
        for k, (seed, net) in enumerate(oracle_ensemble(20, max_count=2**12, base_seed=7000)):
            query = net.names[0]
            evidence = {net.names[-1]: 0} if (k % 3 == 0 and len(net.names) > 1) else {}
            scan = exhaustive_scan(net, query, evidence)
            hi = optimize(net, query, 0, evidence, "max", rng=np.random.default_rng(seed))
            lo = optimize(net, query, 0, evidence, "min", rng=np.random.default_rng(seed))
            assert hi.value <= scan.intervals.upper[0] + 1e-9
            assert lo.value >= scan.intervals.lower[0] - 1e-9

    def test_ordering_must_cover_all_sets(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5]])
        with pytest.raises(Exception):
            optimize(net, "X", 0, {}, "max", ordering=[], rng=np.random.default_rng(0))

    def test_default_ordering_is_topological(self, collider_bn):
        order = default_ordering(collider_bn)
        names = [sid.variable for sid in order]
        assert names.index("X") < names.index("Y")
        assert names.index("Z") < names.index("Y")


class TestMultistart:
    def test_one_restart_equals_optimize(self):
        net = single_root([[0.2, 0.8], [0.5, 0.5]])
        a = multistart(net, "X", 0, {}, "max", restarts=1, rng=np.random.default_rng(9))
        b = optimize(net, "X", 0, {}, "max", rng=np.random.default_rng(9))
        assert a.value == b.value
        assert a.selection == b.selection

    def test_degenerate_network_same_for_any_restarts(self, collider_bn):
        values = {
            multistart(
                collider_bn, "Y", 0, {}, "max", restarts=k, rng=np.random.default_rng(0)
            ).value
            for k in (1, 2, 5)
        }
        assert len(values) == 1

    def test_more_restarts_never_worse(self):
        # restarts share the random stream, so the k-restart run includes the
        # 1-restart run's starting point
        for seed, net in oracle_ensemble(10, base_seed=8000):
            query = net.names[0]
            one = multistart(net, query, 0, {}, "max", restarts=1,
                             rng=np.random.default_rng(seed))
            eight = multistart(net, query, 0, {}, "max", restarts=8,
                               rng=np.random.default_rng(seed))
            assert eight.value >= one.value - 1e-15

    def test_attainment_improves_with_restarts(self):
        hits_one = hits_eight = 0
        for seed, net in oracle_ensemble(15, max_count=2**12, base_seed=9000):
            query = net.names[0]
            exact_hi = exhaustive_scan(net, query, {}).intervals.upper[0]
            one = multistart(net, query, 0, {}, "max", restarts=1,
                             rng=np.random.default_rng(seed))
            eight = multistart(net, query, 0, {}, "max", restarts=8,
                               rng=np.random.default_rng(seed))
            hits_one += abs(one.value - exact_hi) <= 1e-6
            hits_eight += abs(eight.value - exact_hi) <= 1e-6
        assert hits_eight >= hits_one
        assert hits_eight >= 8  # most cases reach the exact optimum
