import numpy as np
import pytest

from pdopt.errors import InvariantViolation, Uncalibratable
from pdopt.netgen import (
    ExtendedDsm, aggregate_investment_by_task, calibrate_extended_dsm,
    centralities, default_interval_distribution, generate_graph,
    run_boundary_experiment, _hub_scores,
)
from pdopt.optimize import AllocationResult

from conftest import rho_of


class TestGenerateGraph:
    def test_frozen_edge_counts_at_seed_zero(self):
        # pinned so report regressions surface as diffs, not flakes
        assert int(generate_graph("er", 20, seed=0).sum()) // 2 == 32
        assert int(generate_graph("ws", 20, seed=0).sum()) // 2 == 40
        assert int(generate_graph("ba", 20, seed=0).sum()) // 2 == 37

    def test_simple_symmetric_zero_diagonal(self):
        for model in ("er", "ws", "ba"):
            adj = generate_graph(model, 16, seed=3)
            assert np.array_equal(adj, adj.T)
            assert np.all(np.diag(adj) == 0)
            assert set(np.unique(adj)) <= {0.0, 1.0}

    def test_deterministic_per_seed(self):
        a = generate_graph("er", 24, seed=5)
        b = generate_graph("er", 24, seed=5)
        assert np.array_equal(a, b)
        c = generate_graph("er", 24, seed=6)
        assert not np.array_equal(a, c)

    def test_watts_strogatz_keeps_ring_edge_count(self):
        for seed in range(4):
            adj = generate_graph("ws", 30, seed=seed, ring_degree=6)
            assert int(adj.sum()) // 2 == 30 * 6 // 2

    def test_barabasi_albert_edge_count_formula(self):
        # complete seed graph on attach+1 nodes, then attach edges per node
        adj = generate_graph("ba", 50, seed=9, attach=3)
        assert int(adj.sum()) // 2 == 4 * 3 // 2 + 3 * (50 - 4)

    def test_er_probability_extremes(self):
        assert generate_graph("er", 10, seed=0, edge_prob=0.0).sum() == 0
        full = generate_graph("er", 10, seed=0, edge_prob=1.0)
        assert int(full.sum()) == 10 * 9

    def test_rejects_bad_parameters(self):
        with pytest.raises(InvariantViolation):
            generate_graph("tree", 10)
        with pytest.raises(InvariantViolation):
            generate_graph("er", 1)
        with pytest.raises(InvariantViolation):
            generate_graph("er", 10, edge_prob=1.5)
        with pytest.raises(InvariantViolation):
            generate_graph("ws", 10, ring_degree=3)
        with pytest.raises(InvariantViolation):
            generate_graph("ws", 10, rewire_prob=-0.1)
        with pytest.raises(InvariantViolation):
            generate_graph("ba", 10, attach=10)


class TestExtendedDsm:
    def test_block_orientation(self, m2_instance):
        dsms, _ = m2_instance
        ext = ExtendedDsm.from_dsms(dsms)
        m = dsms.m
        assert np.array_equal(ext.omega[:m, m:], dsms.omega_ls)
        assert np.array_equal(ext.omega[m:, :m], dsms.omega_sl)
        back = ext.to_dsms()
        assert np.array_equal(back.omega_l, dsms.omega_l)
        assert np.array_equal(back.omega_s, dsms.omega_s)
        assert np.array_equal(back.omega_ls, dsms.omega_ls)
        assert np.array_equal(back.omega_sl, dsms.omega_sl)

    def test_rejects_odd_or_negative(self):
        with pytest.raises(InvariantViolation):
            ExtendedDsm(np.eye(3))
        with pytest.raises(InvariantViolation):
            ExtendedDsm(-np.eye(4))


class TestCalibration:
    def test_lands_on_the_boundary(self):
        dist = default_interval_distribution()
        adj = generate_graph("er", 12, seed=1)
        ext, coupling = calibrate_extended_dsm(adj, dist)
        assert coupling > 0
        assert abs(rho_of(ext.to_dsms(), dist) - 1.0) <= 1e-8
        # structure preserved: couplings scale adj, diagonal pinned
        off = np.array(ext.omega)
        np.fill_diagonal(off, 0.0)
        assert np.allclose(off, coupling * adj, atol=1e-15)
        assert np.all(np.diag(ext.omega) == 1.0)

    def test_custom_diagonal(self):
        dist = default_interval_distribution()
        adj = generate_graph("ws", 12, seed=2)
        ext, _ = calibrate_extended_dsm(adj, dist, diag_value=0.7)
        assert np.all(np.diag(ext.omega) == 0.7)
        assert abs(rho_of(ext.to_dsms(), dist) - 1.0) <= 1e-8

    def test_empty_graph_is_uncalibratable(self):
        with pytest.raises(Uncalibratable):
            calibrate_extended_dsm(np.zeros((4, 4)),
                                   default_interval_distribution())

    def test_rejects_bad_adjacency(self):
        dist = default_interval_distribution()
        with pytest.raises(InvariantViolation):
            calibrate_extended_dsm(np.zeros((3, 3)), dist)
        asym = np.zeros((4, 4))
        asym[0, 1] = 1.0
        with pytest.raises(InvariantViolation):
            calibrate_extended_dsm(asym, dist)
        loops = np.eye(4)
        with pytest.raises(InvariantViolation):
            calibrate_extended_dsm(loops, dist)
        with pytest.raises(InvariantViolation):
            calibrate_extended_dsm(np.zeros((4, 4)), dist, diag_value=0.0)


class TestCentralities:
    def test_isolated_nodes_measure_zero(self):
        rep = centralities(ExtendedDsm(np.eye(4)))
        assert np.array_equal(rep.betweenness, np.zeros(4))
        assert np.array_equal(rep.hub, np.zeros(4))
        # pagerank is uniform on an empty graph and rescales to one per node
        assert np.allclose(rep.pagerank, np.ones(4), atol=1e-12)

    def test_directed_path_betweenness(self):
        # omega[i][j] != 0 is the edge j -> i: build 0 -> 1 -> 2
        omega = np.eye(4)
        omega[1, 0] = 0.5
        omega[2, 1] = 0.5
        rep = centralities(ExtendedDsm(omega))
        assert np.allclose(rep.betweenness, [0.0, 4.0, 0.0, 0.0], atol=1e-12)

    def test_hub_rewards_heavy_out_edges(self):
        # node 1's out-edge (1 -> 0, weight 0.5) beats node 0's (0.3)
        rep = centralities(ExtendedDsm(np.array([[1.0, 0.5], [0.3, 1.0]])))
        assert rep.hub[1] == pytest.approx(2.0, abs=1e-9)
        assert rep.hub[0] == pytest.approx(0.0, abs=1e-9)

    def test_hub_scores_match_dense_eigenvector(self):
        rng = np.random.default_rng(2)
        weights = rng.uniform(0, 1, (8, 8)) * (rng.random((8, 8)) < 0.4)
        np.fill_diagonal(weights, 0.0)
        got = _hub_scores(weights, tol=1e-12, max_iter=10_000)
        _, vecs = np.linalg.eigh(weights @ weights.T)
        want = np.abs(vecs[:, -1])
        want /= want.sum()
        assert np.allclose(got, want, atol=1e-10)

    def test_normalization_sums_to_node_count(self):
        dist = default_interval_distribution()
        ext, _ = calibrate_extended_dsm(generate_graph("ba", 12, seed=4), dist)
        rep = centralities(ext)
        for arr in (rep.betweenness, rep.pagerank, rep.hub):
            assert arr.sum() == pytest.approx(12.0, abs=1e-9)
            assert np.all(arr >= 0)


class TestAggregateInvestment:
    def test_spend_lands_on_both_endpoints(self):
        spend = {
            ("L", 2, 1): 0.10,
            ("S", 1, 3): 0.20,
            ("LS", 2, 3): 0.30,
            ("SL", 3, 3): 0.40,
            ("LS", 1, 1): 0.50,
        }
        result = AllocationResult(
            psi={}, spend=spend, total_cost=1.5, rho_before=1.0,
            rho_after=0.9, iterations=0, converged=True,
        )
        inv = aggregate_investment_by_task(result, 3)
        assert np.allclose(inv, [0.60, 0.40, 0.40, 0.70, 0.0, 0.90],
                           atol=1e-15)
        assert inv.sum() == pytest.approx(2 * 1.5, abs=1e-12)


class TestBoundaryExperiment:
    def test_er_experiment_end_to_end(self):
        res = run_boundary_experiment("er", 6, seed=3)
        assert res.model == "er" and res.m == 6 and res.seed == 3
        assert abs(res.allocation.rho_before - 1.0) <= 1e-6
        assert res.allocation.rho_after < 1.0
        capacity = sum(res.extended.to_dsms().value(c)
                       for c in res.allocation.psi)
        assert res.budget == pytest.approx(0.1 * capacity, rel=1e-9)
        assert res.allocation.total_cost <= res.budget * (1 + 1e-6)
        assert res.investment.shape == (12,)
        assert np.all(res.investment >= 0)
        assert res.investment.sum() == pytest.approx(
            2 * sum(res.allocation.spend.values()), rel=1e-9)
        rows = list(res.rows())
        assert [r[0] for r in rows] == list(range(1, 13))
        assert {r[1] for r in rows[:6]} == {"L"}
        assert {r[1] for r in rows[6:]} == {"S"}

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvariantViolation):
            run_boundary_experiment("er", 1)
        with pytest.raises(InvariantViolation):
            run_boundary_experiment("er", 4, budget_fraction=-0.5)


def test_default_interval_distribution_values():
    dist = default_interval_distribution()
    assert dict(dist.pmf) == {4: 0.125, 5: 0.125, 6: 0.5, 7: 0.125, 8: 0.125}
