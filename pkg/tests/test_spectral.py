import numpy as np
import pytest

from pdopt.errors import DegenerateSpectrum
from pdopt.model import (
    DsmSet, FeedbackDistribution, assemble_transitions, build_wtms,
    generalized_wtm, tunable_coordinates,
)
from pdopt.spectral import (
    CoordinateLayout, fd_grad_log_rho, grad_log_rho, log_rho_at,
    perron_pair, spectral_radius,
)

from conftest import make_rng, random_dsms, random_pmf, rho_of


def test_spectral_radius_matches_dense_eigvals():
    rng = make_rng(7)
    mat = rng.uniform(0, 1, size=(8, 8))
    assert spectral_radius(mat) == pytest.approx(
        float(np.abs(np.linalg.eigvals(mat)).max()), abs=1e-12)


def test_single_task_deterministic_interval_closed_form():
    # h == 1 collapses M to A1, whose nonzero spectrum is the 2x2 block
    # [[w_l, w_sl], [w_ls, w_s]]
    dsms = DsmSet(omega_l=[[0.7]], omega_s=[[0.6]],
                  omega_ls=[[0.5]], omega_sl=[[0.4]])
    dist = FeedbackDistribution({1: 1.0})
    wl, ws = 1 - 0.7, 1 - 0.6
    wls, wsl = 0.5 * 0.7, 0.4 * 0.6
    closed = (wl + ws) / 2 + np.sqrt((wl - ws) ** 2 / 4 + wsl * wls)
    assert rho_of(dsms, dist) == pytest.approx(closed, abs=1e-14)


class TestPerronPair:
    def test_residuals_and_normalization(self, m3_instance):
        dsms, dist = m3_instance
        mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
        pair = perron_pair(mat)
        left, right = pair.residuals(mat)
        scale = max(pair.rho, 1.0)
        assert left <= 1e-9 * scale and right <= 1e-9 * scale
        assert float(pair.u @ pair.v) == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.norm(pair.v) == pytest.approx(1.0, abs=1e-12)
        assert pair.v.min() >= 0 and pair.u.min() >= 0
        assert pair.rho == pytest.approx(rho_of(dsms, dist), abs=1e-10)

    def test_warm_start_converges(self, m3_instance):
        dsms, dist = m3_instance
        mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
        cold = perron_pair(mat)
        warm = perron_pair(mat, v0=cold.v, u0=cold.u)
        assert warm.rho == pytest.approx(cold.rho, abs=1e-12)
        assert warm.iterations <= cold.iterations

    def test_jordan_block_raises(self):
        with pytest.raises(DegenerateSpectrum):
            perron_pair(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_random_instances_certify(self):
        rng = make_rng(19)
        for _ in range(25):
            dsms = random_dsms(rng, int(rng.integers(2, 5)))
            dist = random_pmf(rng)
            mat = generalized_wtm(assemble_transitions(build_wtms(dsms)), dist)
            pair = perron_pair(mat)
            left, right = pair.residuals(mat)
            assert max(left, right) <= 1e-9 * max(pair.rho, 1.0)


class TestCoordinateLayout:
    def test_positions_recover_transition_entries(self, m3_instance):
        dsms, _ = m3_instance
        coords = tunable_coordinates(dsms)
        layout = CoordinateLayout.from_dsms(dsms, coords)
        pair = assemble_transitions(build_wtms(dsms))
        psi = np.array([dsms.value(c) for c in coords])
        assert np.allclose(pair.a1[layout.a1_rows, layout.a1_cols],
                           layout.kappa * psi, atol=1e-15)
        assert np.allclose(pair.a2[layout.a2_rows, layout.a2_cols],
                           layout.kappa * psi, atol=1e-15)

    def test_feedback_coordinates_split_across_transitions(self, m2_instance):
        dsms, _ = m2_instance
        layout = CoordinateLayout.from_dsms(dsms)
        m = dsms.m
        for c, (sigma, i, j) in enumerate(layout.coords):
            if sigma == "SL":
                assert layout.a1_rows[c] == i - 1          # rework into L
                assert layout.a2_rows[c] == 2 * m + i - 1  # accumulation into H
            else:
                assert layout.a1_rows[c] == layout.a2_rows[c]
                assert layout.a1_cols[c] == layout.a2_cols[c]


class TestGradients:
    def test_matches_finite_differences_at_nominal(self, m3_instance):
        dsms, dist = m3_instance
        analytic = grad_log_rho(dsms, dist)
        numeric = fd_grad_log_rho(dsms, dist)
        for coord, g in analytic.items():
            assert g == pytest.approx(numeric[coord], rel=1e-5, abs=1e-8)
            assert g >= -1e-12  # rho is entrywise monotone

    def test_matches_finite_differences_at_tuned_point(self, m2_instance):
        dsms, dist = m2_instance
        psi = {c: 0.6 * dsms.value(c) for c in tunable_coordinates(dsms)}
        analytic = grad_log_rho(dsms, dist, psi=psi)
        numeric = fd_grad_log_rho(dsms, dist, psi=psi)
        for coord, g in analytic.items():
            assert g == pytest.approx(numeric[coord], rel=1e-5, abs=1e-8)

    def test_random_instances(self):
        rng = make_rng(29)
        for _ in range(5):
            dsms = random_dsms(rng, 3, density=0.7)
            dist = random_pmf(rng)
            analytic = grad_log_rho(dsms, dist)
            numeric = fd_grad_log_rho(dsms, dist)
            for coord, g in analytic.items():
                assert g == pytest.approx(numeric[coord], rel=2e-5, abs=1e-7)


class TestLogRhoAt:
    def test_nominal_consistency(self, m3_instance):
        dsms, dist = m3_instance
        coords = tunable_coordinates(dsms)
        values = [dsms.value(c) for c in coords]
        assert log_rho_at(dsms, dist, coords, values) == pytest.approx(
            np.log(rho_of(dsms, dist)), abs=1e-12)

    def test_floor_on_vanishing_spectrum(self):
        # all couplings zeroed leaves a nilpotent step matrix
        dsms = DsmSet(omega_l=[[0.5]], omega_s=[[0.5]],
                      omega_ls=[[0.4]], omega_sl=[[0.4]])
        dist = FeedbackDistribution({1: 1.0})
        coords = tunable_coordinates(dsms)
        val = log_rho_at(dsms, dist, coords, [1e-300] * len(coords))
        assert np.isfinite(val)
