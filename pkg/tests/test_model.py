import numpy as np
import pytest

from pdopt.errors import InvariantViolation
from pdopt.model import (
    DsmSet, FeedbackDistribution, ProjectState, apply_allocation,
    assemble_transitions, build_wtms, generalized_wtm, project_matrix,
    tunable_coordinates,
)

from conftest import make_rng, random_dsms, random_pmf


def diag_dsms(omega_l, omega_s, omega_ls, omega_sl):
    return DsmSet(omega_l=np.asarray(omega_l, dtype=float),
                  omega_s=np.asarray(omega_s, dtype=float),
                  omega_ls=np.asarray(omega_ls, dtype=float),
                  omega_sl=np.asarray(omega_sl, dtype=float))


class TestWtmConstruction:
    def test_local_block_fixed_values(self):
        dsms = diag_dsms(
            [[0.8, 0.2], [0.1, 0.9]],
            [[0.7, 0.0], [0.0, 0.6]],
            [[0.5, 0.3], [0.0, 0.4]],
            [[0.2, 0.0], [0.1, 0.6]],
        )
        wtms = build_wtms(dsms)
        # W_ii = 1 - Omega_ii, W_ij = Omega_ij * Omega_jj
        assert np.allclose(wtms.w_l, [[0.2, 0.18], [0.08, 0.1]], atol=1e-15)
        assert np.allclose(wtms.w_s, [[0.3, 0.0], [0.0, 0.4]], atol=1e-15)
        # cross blocks scale by the source-team completion coefficient
        assert np.allclose(wtms.w_ls, [[0.5 * 0.8, 0.3 * 0.9],
                                       [0.0, 0.4 * 0.9]], atol=1e-15)
        assert np.allclose(wtms.w_sl, [[0.2 * 0.7, 0.0],
                                       [0.1 * 0.7, 0.6 * 0.6]], atol=1e-15)
        assert np.array_equal(wtms.w_sh, wtms.w_sl)

    def test_transition_block_layout(self, m3_instance):
        dsms, _ = m3_instance
        wtms = build_wtms(dsms)
        pair = assemble_transitions(wtms)
        m = dsms.m
        eye = np.eye(m)
        zero = np.zeros((m, m))
        a1 = np.block([[wtms.w_l, wtms.w_sl, eye],
                       [wtms.w_ls, wtms.w_s, zero],
                       [zero, zero, zero]])
        a2 = np.block([[wtms.w_l, zero, zero],
                       [wtms.w_ls, wtms.w_s, zero],
                       [zero, wtms.w_sh, eye]])
        assert np.array_equal(pair.a1, a1)
        assert np.array_equal(pair.a2, a2)
        assert pair.n == 3 * m

    def test_generalized_wtm_mixes_interval_powers(self, m3_instance):
        dsms, _ = m3_instance
        pair = assemble_transitions(build_wtms(dsms))
        dist = FeedbackDistribution({2: 0.3, 5: 0.7})
        got = generalized_wtm(pair, dist)
        expect = (0.3 * np.linalg.matrix_power(pair.a2, 1) @ pair.a1
                  + 0.7 * np.linalg.matrix_power(pair.a2, 4) @ pair.a1)
        assert np.allclose(got, expect, atol=1e-14)

    def test_project_matrix_psi_override(self, m3_instance):
        dsms, dist = m3_instance
        coord = ("LS", 1, 1)
        replaced = dsms.omega_ls.copy()
        replaced[0, 0] = 0.37
        manual = DsmSet(omega_l=dsms.omega_l, omega_s=dsms.omega_s,
                        omega_ls=replaced, omega_sl=dsms.omega_sl)
        got = project_matrix(dsms, dist, psi={coord: 0.37})
        want = generalized_wtm(assemble_transitions(build_wtms(manual)), dist)
        assert np.allclose(got, want, atol=1e-15)


class TestValidation:
    def test_rejects_zero_completion_coefficient(self):
        with pytest.raises(InvariantViolation, match=r"omega_l\[1\]\[1\]"):
            diag_dsms([[0.5, 0.0], [0.0, 0.0]], np.eye(2) * 0.5,
                      np.zeros((2, 2)), np.zeros((2, 2)))

    def test_rejects_completion_coefficient_above_one(self):
        with pytest.raises(InvariantViolation):
            diag_dsms(np.eye(2) * 1.2, np.eye(2) * 0.5,
                      np.zeros((2, 2)), np.zeros((2, 2)))

    def test_rejects_negative_entries(self):
        with pytest.raises(InvariantViolation, match=r"omega_ls\[0\]\[1\]"):
            diag_dsms(np.eye(2) * 0.5, np.eye(2) * 0.5,
                      [[0.0, -0.1], [0.0, 0.0]], np.zeros((2, 2)))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvariantViolation):
            diag_dsms(np.eye(2) * 0.5, np.eye(3) * 0.5,
                      np.zeros((2, 2)), np.zeros((2, 2)))

    def test_invariant_violation_is_value_error(self):
        assert issubclass(InvariantViolation, ValueError)

    def test_matrices_are_frozen(self, m3_instance):
        dsms, _ = m3_instance
        with pytest.raises(ValueError):
            dsms.omega_l[0, 0] = 0.1


class TestFeedbackDistribution:
    def test_drops_zero_probability_intervals(self):
        dist = FeedbackDistribution({1: 0.0, 2: 0.5, 4: 0.5})
        assert dict(dist.pmf) == {2: 0.5, 4: 0.5}
        assert dist.h_min == 2
        assert dist.h_max == 4
        assert np.array_equal(dist.support, [2, 4])

    def test_rejects_bad_mass(self):
        with pytest.raises(InvariantViolation):
            FeedbackDistribution({2: 0.5, 3: 0.6})
        with pytest.raises(InvariantViolation):
            FeedbackDistribution({2: 1.0, 3: -0.1})
        with pytest.raises(InvariantViolation):
            FeedbackDistribution({0: 1.0})
        with pytest.raises(InvariantViolation):
            FeedbackDistribution({2.5: 1.0})

    def test_tolerates_rounding_noise(self):
        third = 1.0 / 3.0
        dist = FeedbackDistribution({1: third, 2: third, 3: 1.0 - 2 * third})
        assert abs(sum(dist.probabilities) - 1.0) <= 1e-12

    def test_sampling_stays_on_support(self):
        dist = FeedbackDistribution({3: 0.2, 6: 0.8})
        draws = dist.sample_intervals(make_rng(5), 500)
        assert set(np.unique(draws)) <= {3, 6}
        again = dist.sample_intervals(make_rng(5), 500)
        assert np.array_equal(draws, again)


class TestTunableCoordinates:
    def test_order_and_exclusions(self):
        dsms = diag_dsms(
            [[0.5, 0.2], [0.0, 0.6]],
            [[0.5, 0.0], [0.3, 0.7]],
            [[0.4, 0.0], [0.0, 0.0]],
            [[0.0, 0.1], [0.2, 0.3]],
        )
        assert tunable_coordinates(dsms) == (
            ("L", 1, 2),
            ("S", 2, 1),
            ("LS", 1, 1),
            ("SL", 1, 2), ("SL", 2, 1), ("SL", 2, 2),
        )

    def test_random_instances_never_expose_dsm_diagonals(self):
        rng = make_rng(11)
        for _ in range(20):
            dsms = random_dsms(rng, int(rng.integers(1, 5)))
            for sigma, i, j in tunable_coordinates(dsms):
                assert dsms.value((sigma, i, j)) > 0
                if sigma in ("L", "S"):
                    assert i != j


class TestApplyAllocation:
    def test_replaces_values(self, m3_instance):
        dsms, _ = m3_instance
        out = apply_allocation(dsms, {("L", 1, 2): 0.21, ("SL", 3, 1): 0.05})
        assert out.omega_l[0, 1] == 0.21
        assert out.omega_sl[2, 0] == 0.05
        assert dsms.omega_l[0, 1] == 0.3  # original untouched

    def test_clamps_rounding_overshoot(self, m3_instance):
        dsms, _ = m3_instance
        out = apply_allocation(dsms, {("L", 1, 2): 0.3 * (1 + 1e-13)})
        assert out.omega_l[0, 1] == 0.3

    def test_rejects_untunable_or_out_of_range(self, m3_instance):
        dsms, _ = m3_instance
        with pytest.raises(InvariantViolation):
            apply_allocation(dsms, {("L", 1, 1): 0.4})
        with pytest.raises(InvariantViolation):
            apply_allocation(dsms, {("L", 2, 1): 0.1})  # structural zero
        with pytest.raises(InvariantViolation):
            apply_allocation(dsms, {("L", 1, 2): 0.0})
        with pytest.raises(InvariantViolation):
            apply_allocation(dsms, {("L", 1, 2): 0.4})  # above nominal


class TestProjectState:
    def test_vector_round_trip(self):
        state = ProjectState(l=np.array([1.0, 2.0]), s=np.array([0.5, 0.0]),
                             h=np.array([0.0, 3.0]))
        vec = state.as_vector()
        assert np.array_equal(vec, [1.0, 2.0, 0.5, 0.0, 0.0, 3.0])
        back = ProjectState.from_vector(vec)
        assert np.array_equal(back.l, state.l)
        assert np.array_equal(back.h, state.h)

    def test_uniform_start(self):
        state = ProjectState.uniform_start(3)
        assert np.array_equal(state.l, np.ones(3))
        assert np.array_equal(state.s, np.ones(3))
        assert np.array_equal(state.h, np.zeros(3))

    def test_unfinished_excludes_handoff_buffer(self):
        state = ProjectState(l=np.array([1.0]), s=np.array([2.0]),
                             h=np.array([10.0]))
        assert state.total_unfinished == 3.0

    def test_rejects_negative_work(self):
        with pytest.raises(InvariantViolation):
            ProjectState(l=np.array([-1.0]), s=np.array([0.0]), h=np.array([0.0]))


def test_random_pmf_factory_valid():
    rng = make_rng(3)
    for _ in range(10):
        dist = random_pmf(rng)
        assert abs(float(dist.probabilities.sum()) - 1.0) < 1e-9
