import numpy as np
import pytest

from isacopt.model import (
    CorrelationMatrix,
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    trial_rng,
)
from isacopt.numerics import MisalignedCorrelationsError, psd_project, trace_inverse
from isacopt.training import (
    design_training,
    design_training_ls,
    design_training_mi,
    design_training_structured,
    recover_training,
    training_objective,
)


def aligned_pair(lam_h, lam_g, seed=0):
    """Correlations sharing a random eigenbasis with the given spectra."""
    rng = trial_rng(seed, 0)
    m = len(lam_h)
    a = complex_gaussian(rng, (m, m))
    q, _ = np.linalg.qr(a)
    r_h = CorrelationMatrix.from_matrix(q @ np.diag(lam_h) @ q.conj().T)
    r_g = CorrelationMatrix.from_matrix(q @ np.diag(lam_g) @ q.conj().T)
    return r_h, r_g


class TestGeneralDesign:
    def test_symmetric_optimum(self):
        m, p_ce = 4, 6.0
        r_h = identity_correlation(m)
        r_g = exponential_correlation(m, 0.5)
        design = design_training(r_h, r_g, 1.0, p_ce, 1.0, m)
        assert np.allclose(design.r_x, (p_ce / m) * np.eye(m), atol=1e-4)

    def test_matches_structured_on_aligned(self):
        r_h, r_g = aligned_pair([2.0, 1.0, 0.5, 0.25], [1.2, 0.9, 0.8, 0.6], seed=1)
        general = design_training(r_h, r_g, 1.0, 5.0, 0.5, 4)
        _, structured = design_training_structured(r_h, r_g, 1.0, 5.0, 0.5, 4)
        rel = abs(general.objective - structured.objective) / structured.objective
        assert rel < 1e-5

    def test_matches_grid_on_two_antennas(self):
        lam_h = np.array([1.8, 0.7])
        lam_g = np.array([1.1, 0.9])
        r_h, r_g = aligned_pair(lam_h, lam_g, seed=2)
        p_ce = 4.0
        design = design_training(r_h, r_g, 1.0, p_ce, 0.5, 2)

        # Budget is active, so scan the 1-D split between the directions.
        x1 = np.linspace(0.0, p_ce, 401)
        vals = 0.5 / 2 * (1.0 / (1.0 / lam_h[0] + x1) + 1.0 / (1.0 / lam_h[1] + p_ce - x1))
        vals += 0.5 / 2 * (1.0 / (1.0 / lam_g[0] + x1) + 1.0 / (1.0 / lam_g[1] + p_ce - x1))
        assert abs(design.objective - vals.min()) < 1e-3

    def test_power_constraint_active(self):
        r_h = exponential_correlation(4, 0.5)
        r_g = identity_correlation(4)
        design = design_training(r_h, r_g, 1.0, 5.0, 0.3, 4)
        assert abs(np.trace(design.r_x).real - 5.0) < 1e-6 * 5.0

    def test_beats_random_feasible_points(self):
        r_h = exponential_correlation(4, 0.5)
        r_g = identity_correlation(4)
        p_ce = 5.0
        design = design_training(r_h, r_g, 1.0, p_ce, 0.6, 4)
        rng = trial_rng(3, 0)
        for _ in range(100):
            cand = complex_gaussian(rng, (4, 4))
            r_x = psd_project(cand @ cand.conj().T, p_ce)
            assert design.objective <= training_objective(r_x, r_h, r_g, 1.0, 0.6) + 1e-8


class TestStructuredDesign:
    def test_equal_eigenvalues_equal_split(self):
        r_h, r_g = aligned_pair([1.3] * 4, [0.7] * 4, seed=4)
        alloc, _ = design_training_structured(r_h, r_g, 1.0, 6.0, 1.0, 4)
        assert np.allclose(alloc.x, 1.5, atol=1e-6)

    def test_single_direction_takes_all(self):
        r_h, r_g = aligned_pair([1.5], [0.5], seed=5)
        alloc, _ = design_training_structured(r_h, r_g, 1.0, 3.0, 0.4, 1)
        assert abs(alloc.x[0] - 3.0) < 1e-8

    def test_matches_general_solver(self):
        r_h, r_g = aligned_pair([2.0, 1.0, 0.5, 0.25], [1.0] * 4, seed=6)
        alloc, structured = design_training_structured(r_h, r_g, 1.0, 6.0, 0.5, 4)
        general = design_training(r_h, r_g, 1.0, 6.0, 0.5, 4)
        assert abs(structured.objective - general.objective) / general.objective < 1e-5

    def test_stationarity_residuals(self):
        lam_h = np.array([2.0, 1.0, 0.5, 0.25])
        lam_g = np.ones(4)
        r_h, r_g = aligned_pair(lam_h, lam_g, seed=7)
        m, sigma2, omega1 = 4, 1.0, 0.5
        alloc, _ = design_training_structured(r_h, r_g, sigma2, 6.0, omega1, 4)
        for lam_hm, lam_gm, xm in zip(lam_h, lam_g, alloc.x):
            value = omega1 / (m * sigma2) * (1 / lam_hm + xm / sigma2) ** -2
            value += (1 - omega1) / (m * sigma2) * (1 / lam_gm + xm / sigma2) ** -2
            if xm > 0:
                assert abs(value - alloc.mu) < 1e-6
            else:
                assert value <= alloc.mu + 1e-12

    def test_budget_met(self):
        r_h, r_g = aligned_pair([2.0, 0.8, 0.3], [1.0, 1.0, 1.0], seed=8)
        alloc, design = design_training_structured(r_h, r_g, 1.0, 4.0, 0.7, 4)
        assert abs(alloc.x.sum() - 4.0) < 1e-8
        assert np.allclose(design.signal.gram, design.r_x, atol=1e-9)

    def test_inactive_direction_at_low_budget(self):
        # Tiny budget with a very weak direction: complementary slackness
        # zeroes it while the water level sits above its shutoff point.
        r_h, r_g = aligned_pair([4.0, 0.05], [4.0, 0.05], seed=9)
        alloc, _ = design_training_structured(r_h, r_g, 1.0, 0.5, 0.5, 2)
        assert alloc.x[1] == 0.0
        assert abs(alloc.x.sum() - 0.5) < 1e-8
        assert alloc.mu > alloc.mu_bar  # only valid with an inactive direction

    def test_misaligned_rejected(self):
        rng = trial_rng(10, 0)
        r_h = exponential_correlation(3, 0.5)
        a = complex_gaussian(rng, (3, 3))
        r_g = CorrelationMatrix.from_matrix(a @ a.conj().T + np.eye(3))
        with pytest.raises(MisalignedCorrelationsError):
            design_training_structured(r_h, r_g, 1.0, 2.0, 0.5, 3)


class TestLsDesign:
    def test_equal_diagonal(self):
        design = design_training_ls(4, 8.0, 6, sigma2=1.0)
        assert np.allclose(design.r_x, 2.0 * np.eye(4))

    def test_budget_exact(self):
        design = design_training_ls(5, 7.5, 8)
        assert abs(np.trace(design.r_x).real - 7.5) < 1e-12

    def test_ls_error_closed_form(self):
        m, p_ce, sigma2 = 4, 8.0, 1.3
        design = design_training_ls(m, p_ce, 6, sigma2=sigma2)
        gram_inv_trace = np.trace(np.linalg.inv(design.signal.gram)).real
        assert abs(sigma2 * gram_inv_trace - sigma2 * m * m / p_ce) < 1e-10
        assert abs(design.objective - sigma2 * m * m / p_ce) < 1e-12


class TestMiDesign:
    def test_symmetric_optimum(self):
        m, p_ce = 4, 6.0
        r_h = identity_correlation(m)
        r_g = exponential_correlation(m, 0.4)
        design = design_training_mi(r_h, r_g, 1.0, p_ce, 1.0, m)
        assert np.allclose(design.r_x, (p_ce / m) * np.eye(m), atol=1e-4)
        assert abs(design.objective - np.log(1.0 + p_ce / m)) < 1e-6

    def test_diagonal_waterfill_oracle(self):
        lam = np.array([2.0, 1.0, 0.5, 0.25])
        r_h = CorrelationMatrix.from_matrix(np.diag(lam).astype(complex))
        r_g = identity_correlation(4)
        p_ce = 6.0
        design = design_training_mi(r_h, r_g, 1.0, p_ce, 1.0, 4)

        def spilled(level):
            return float(np.clip(level - 1.0 / lam, 0.0, None).sum())

        lo, hi = 0.0, 100.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if spilled(mid) < p_ce else (lo, mid)
        oracle = np.clip(0.5 * (lo + hi) - 1.0 / lam, 0.0, None)
        oracle_obj = float(np.sum(np.log(1.0 + lam * oracle)) / 4)
        assert abs(design.objective - oracle_obj) < 1e-6

    def test_mixed_weights_match_grid(self):
        lam_h = np.array([1.6, 0.6])
        lam_g = np.array([0.9, 1.1])
        r_h = CorrelationMatrix.from_matrix(np.diag(lam_h).astype(complex))
        r_g = CorrelationMatrix.from_matrix(np.diag(lam_g).astype(complex))
        p_ce, omega1 = 3.0, 0.55
        design = design_training_mi(r_h, r_g, 1.0, p_ce, omega1, 2)
        x1 = np.linspace(0.0, p_ce, 2001)
        x2 = p_ce - x1
        vals = omega1 / 2 * (np.log(1 + lam_h[0] * x1) + np.log(1 + lam_h[1] * x2))
        vals += (1 - omega1) / 2 * (np.log(1 + lam_g[0] * x1) + np.log(1 + lam_g[1] * x2))
        assert abs(design.objective - vals.max()) < 1e-3


class TestRecoverTraining:
    def test_identity_gram(self):
        sig = recover_training(np.eye(3, dtype=complex), 3)
        assert np.allclose(sig.x, np.eye(3))

    def test_gram_reconstruction(self):
        rng = trial_rng(11, 0)
        a = complex_gaussian(rng, (4, 4))
        r_x = a @ a.conj().T
        sig = recover_training(r_x, 6)
        assert np.linalg.norm(sig.gram - r_x) < 1e-9 * max(1.0, np.linalg.norm(r_x))

    def test_padding_zero_columns(self):
        sig = recover_training(np.eye(3, dtype=complex), 5)
        assert np.allclose(sig.x[:, 3:], 0.0)

    def test_short_block_rejected(self):
        with pytest.raises(ValueError):
            recover_training(np.eye(4, dtype=complex), 3)
