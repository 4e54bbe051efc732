import numpy as np
import pytest

from isacopt.metrics import (
    mi_ce,
    mi_com,
    mi_com_avg,
    mi_rad,
    mmse_receiver,
    mse_ce,
    mse_com,
    mse_com_avg,
    mse_rad,
    receiver_mse,
)
from isacopt.model import (
    CorrelationMatrix,
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    synthesize_channel,
    trial_rng,
)
from isacopt.numerics import evd, hermitize, logdet_spd, spd_inverse


def random_setup(seed, m=4, n_com=3, d=2, p_ce=5.0):
    rng = trial_rng(seed, 0)
    r_h = exponential_correlation(m, 0.5)
    x = np.sqrt(p_ce / m) * np.eye(m, dtype=complex)
    h = synthesize_channel(r_h, n_com, rng)
    h_hat = h  # any fixed matrix works for metric algebra
    r_delta = spd_inverse(r_h.inverse() + x @ x.conj().T)
    w = complex_gaussian(rng, (m, d))
    return r_h, x, h_hat, r_delta, w, rng


class TestMseCe:
    def test_zero_training(self):
        r = exponential_correlation(4, 0.5)
        assert abs(mse_ce(r, np.zeros((4, 4), dtype=complex), 1.0) - np.trace(r.matrix).real) < 1e-12

    def test_identity_case(self):
        r = identity_correlation(2)
        x = np.eye(2, dtype=complex)
        assert abs(mse_ce(r, x, 1.0) - 1.0) < 1e-12

    def test_scaling_invariance(self):
        r = exponential_correlation(4, 0.4)
        rng = trial_rng(0, 0)
        x = complex_gaussian(rng, (4, 6))
        c = 3.7
        assert abs(mse_ce(r, x, 1.3) - mse_ce(r, c * x, c * c * 1.3)) < 1e-10

    def test_psd_increment_monotone(self):
        r = exponential_correlation(4, 0.4)
        rng = trial_rng(1, 0)
        for _ in range(10):
            x = complex_gaussian(rng, (4, 6))
            extra = complex_gaussian(rng, (4, 2))
            bigger = np.concatenate([x, extra], axis=1)
            assert mse_ce(r, bigger, 1.0) <= mse_ce(r, x, 1.0) + 1e-12


class TestMmseReceiver:
    def test_zero_beamformer(self):
        r_h, x, h_hat, r_delta, w, _ = random_setup(2)
        v = mmse_receiver(h_hat, np.zeros_like(w), r_delta, 1.0)
        assert np.allclose(v, 0.0)

    def test_optimality_under_perturbation(self):
        r_h, x, h_hat, r_delta, w, rng = random_setup(3)
        v_star = mmse_receiver(h_hat, w, r_delta, 1.0)
        base = receiver_mse(h_hat, w, r_delta, 1.0, v_star)
        for _ in range(20):
            e = 0.1 * complex_gaussian(rng, v_star.shape)
            assert receiver_mse(h_hat, w, r_delta, 1.0, v_star + e) >= base - 1e-12

    def test_receiver_substitution_identity(self):
        # Plugging the optimal receiver back reproduces the closed form.
        r_h, x, h_hat, r_delta, w, _ = random_setup(4)
        v_star = mmse_receiver(h_hat, w, r_delta, 1.0)
        d = w.shape[1]
        direct = mse_com(h_hat, w, r_delta, 1.0) * d
        assert abs(receiver_mse(h_hat, w, r_delta, 1.0, v_star) - direct) < 1e-10


class TestMseCom:
    def test_zero_beamformer_is_one(self):
        r_h, x, h_hat, r_delta, w, _ = random_setup(5)
        assert abs(mse_com(h_hat, np.zeros_like(w), r_delta, 1.0) - 1.0) < 1e-12

    def test_scalar_decoupling(self):
        # Perfect CSI, identity channel, equal-power streams: (1+p)^{-1} each.
        d = 3
        p = 2.5
        h_hat = np.eye(d, dtype=complex)
        w = np.sqrt(p) * np.eye(d, dtype=complex)
        r_delta = np.zeros((d, d), dtype=complex)
        assert abs(mse_com(h_hat, w, r_delta, 1.0) - 1.0 / (1.0 + p)) < 1e-12


class TestMseComAvg:
    def test_zero_beamformer(self):
        r_h = exponential_correlation(4, 0.5)
        r_delta = 0.3 * np.eye(4, dtype=complex)
        r_hhat = hermitize(r_h.matrix - r_delta)
        w = np.zeros((4, 2), dtype=complex)
        assert abs(mse_com_avg(r_hhat, w, r_delta, 1.0, 3) - 1.0) < 1e-12

    def test_rank_one_scalar_form(self):
        u = np.array([[1.0], [1j]], dtype=complex) / np.sqrt(2)
        r_hhat = 0.8 * (u @ u.conj().T)
        r_delta = 0.1 * np.eye(2, dtype=complex)
        w = np.array([[0.6], [0.3 - 0.2j]], dtype=complex)
        n_com = 3
        kappa = np.trace(w @ w.conj().T @ r_delta).real + 1.0
        gain = n_com * (w.conj().T @ r_hhat @ w)[0, 0].real
        expected = 1.0 / (1.0 + gain / kappa)
        assert abs(mse_com_avg(r_hhat, w, r_delta, 1.0, n_com) - expected) < 1e-12

    def test_jensen_direction(self):
        # Sample mean of the realized metric stays above the average bound.
        m, n_com, d = 4, 3, 2
        r_h = exponential_correlation(m, 0.5)
        x = np.sqrt(1.5) * np.eye(m, dtype=complex)
        r_delta = spd_inverse(r_h.inverse() + x @ x.conj().T)
        r_hhat = hermitize(r_h.matrix - r_delta)
        r_hhat_corr = CorrelationMatrix.from_matrix(r_hhat)
        rng = trial_rng(6, 0)
        w = complex_gaussian(rng, (m, d))
        bound = mse_com_avg(r_hhat, w, r_delta, 1.0, n_com)
        vals = [
            mse_com(synthesize_channel(r_hhat_corr, n_com, trial_rng(6, t + 1)), w, r_delta, 1.0)
            for t in range(10_000)
        ]
        stderr = np.std(vals) / np.sqrt(len(vals))
        assert np.mean(vals) >= bound - 3.0 * stderr


class TestMseRad:
    def test_zero_signals(self):
        r_g = identity_correlation(4)
        gram = np.zeros((4, 4), dtype=complex)
        w = np.zeros((4, 2), dtype=complex)
        assert abs(mse_rad(r_g, gram, w, 16, 1.0) - 1.0) < 1e-12

    def test_orthogonal_symbols_make_exact_equal_approx(self):
        m, d, l_dt = 3, 2, 8
        r_g = identity_correlation(m)
        rng = trial_rng(7, 0)
        gram = np.eye(m, dtype=complex) * 2.0
        w = complex_gaussian(rng, (m, d))
        # Rows orthogonal with S S^H = l_dt I (scaled DFT rows).
        k = np.arange(l_dt)
        s = np.exp(2j * np.pi * np.outer(np.arange(d), k) / l_dt)
        exact = mse_rad(r_g, gram, w, l_dt, 1.0, symbols=s)
        approx = mse_rad(r_g, gram, w, l_dt, 1.0)
        assert abs(exact - approx) < 1e-12

    def test_monotone_in_data_energy(self):
        r_g = exponential_correlation(4, 0.3)
        rng = trial_rng(8, 0)
        gram = np.eye(4, dtype=complex)
        w = complex_gaussian(rng, (4, 2))
        assert mse_rad(r_g, gram, 2 * w, 16, 1.0) <= mse_rad(r_g, gram, w, 16, 1.0)


class TestMutualInformation:
    def test_zero_training_zero_mi(self):
        r_h = exponential_correlation(4, 0.5)
        assert abs(mi_ce(r_h, np.zeros((4, 4), dtype=complex), 1.0)) < 1e-12

    def test_identity_closed_form(self):
        m, p = 4, 6.0
        r_h = identity_correlation(m)
        gram = (p / m) * np.eye(m, dtype=complex)
        assert abs(mi_ce(r_h, gram, 1.0) - np.log(1.0 + p / m)) < 1e-12

    def test_logdet_dual_path(self):
        # Same logdet through the eigenvalue route and the Cholesky route.
        r_h = exponential_correlation(5, 0.6)
        rng = trial_rng(9, 0)
        x = complex_gaussian(rng, (5, 7))
        gram = x @ x.conj().T
        half = r_h.sqrt()
        core = hermitize(np.eye(5) + half @ gram @ half)
        via_chol = logdet_spd(core)
        via_evd = float(np.sum(np.log(evd(core).eigenvalues.real)))
        assert abs(via_chol - via_evd) < 1e-9

    def test_mi_com_nonnegative(self):
        r_h, x, h_hat, r_delta, w, _ = random_setup(10)
        assert mi_com(h_hat, w, r_delta, 1.0) >= 0.0
        r_hhat = hermitize(r_h.matrix - r_delta)
        assert mi_com_avg(r_hhat, w, r_delta, 1.0, 3) >= 0.0
        assert mi_rad(identity_correlation(4), x @ x.conj().T, w, 16, 1.0) >= 0.0

    def test_mi_rad_identity_case(self):
        m, p = 4, 8.0
        r_g = identity_correlation(m)
        gram = (p / m) * np.eye(m, dtype=complex)
        w = np.zeros((m, 2), dtype=complex)
        assert abs(mi_rad(r_g, gram, w, 10, 1.0) - np.log(1.0 + p / m)) < 1e-12
