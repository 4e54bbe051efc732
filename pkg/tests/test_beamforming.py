import numpy as np
import pytest

from isacopt.beamforming import (
    SurrogateCoefficients,
    beamforming_objective,
    default_beamformer_start,
    existing_scheme,
    mm_beamformer,
    mm_beamformer_mi,
    solve_surrogate,
    surrogate_coefficients,
    surrogate_coefficients_mi,
    surrogate_value,
)
from isacopt.metrics import mi_com, mi_rad
from isacopt.model import (
    SystemConfig,
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    lmmse_channel_estimate,
    synthesize_channel,
    trial_rng,
)
from isacopt.numerics import SolverSettings, hermitize, logdet_spd, pgd_minimize, spd_inverse
from isacopt.training import design_training


def make_instance(seed, omega1=0.5, gamma_ce_db=1.0, gamma_dt_db=8.0):
    cfg = SystemConfig(
        p_ce=10 ** (gamma_ce_db / 10) * 8,
        p_dt=10 ** (gamma_dt_db / 10),
        omega1=omega1,
    )
    r_h = exponential_correlation(cfg.m, 0.5)
    r_g = identity_correlation(cfg.m)
    training = design_training(r_h, r_g, cfg.sigma2, cfg.p_ce, omega1, cfg.l_ce)
    rng = trial_rng(seed, 0)
    h = synthesize_channel(r_h, cfg.n_com, rng)
    noise = np.sqrt(cfg.sigma2) * complex_gaussian(rng, (cfg.n_com, cfg.l_ce))
    est = lmmse_channel_estimate(h @ training.signal.x + noise, training.signal, r_h, cfg.sigma2)
    r_gprime = hermitize(r_g.inverse() + training.signal.gram / cfg.sigma2)
    return cfg, r_h, r_g, training, est, r_gprime, rng


def random_feasible(rng, shape, p_dt):
    w = complex_gaussian(rng, shape)
    return w * np.sqrt(p_dt / np.sum(np.abs(w) ** 2))


class TestSurrogateCoefficients:
    def test_zero_expansion_point(self):
        cfg, r_h, r_g, training, est, r_gprime, _ = make_instance(0)
        w0 = np.zeros((cfg.m, cfg.d), dtype=complex)
        coeffs = surrogate_coefficients(
            est.h_hat, est.r_delta, r_gprime, w0, cfg.sigma2, cfg.l_dt, cfg.omega1
        )
        assert np.allclose(coeffs.psi, 0.0)
        assert np.allclose(coeffs.pi, 0.0)
        assert coeffs.lam == pytest.approx(1e-12)

    def test_tight_at_expansion_point(self):
        for seed in range(5):
            cfg, r_h, r_g, training, est, r_gprime, rng = make_instance(seed)
            w0 = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
            coeffs = surrogate_coefficients(
                est.h_hat, est.r_delta, r_gprime, w0, cfg.sigma2, cfg.l_dt, cfg.omega1
            )
            truth = beamforming_objective(
                est.h_hat, est.r_delta, training.signal.gram, r_g, w0,
                cfg.sigma2, cfg.l_dt, cfg.omega1,
            )
            assert abs(surrogate_value(coeffs, w0) - truth) < 1e-9

    def test_dominates_everywhere(self):
        cfg, r_h, r_g, training, est, r_gprime, rng = make_instance(1)
        w0 = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
        coeffs = surrogate_coefficients(
            est.h_hat, est.r_delta, r_gprime, w0, cfg.sigma2, cfg.l_dt, cfg.omega1
        )
        for _ in range(20):
            w = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
            truth = beamforming_objective(
                est.h_hat, est.r_delta, training.signal.gram, r_g, w,
                cfg.sigma2, cfg.l_dt, cfg.omega1,
            )
            assert surrogate_value(coeffs, w) >= truth - 1e-9

    def test_gradient_match_at_expansion(self):
        cfg, r_h, r_g, training, est, r_gprime, rng = make_instance(2)
        w0 = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
        coeffs = surrogate_coefficients(
            est.h_hat, est.r_delta, r_gprime, w0, cfg.sigma2, cfg.l_dt, cfg.omega1
        )

        def truth(w):
            return beamforming_objective(
                est.h_hat, est.r_delta, training.signal.gram, r_g, w,
                cfg.sigma2, cfg.l_dt, cfg.omega1,
            )

        eps = 1e-6
        for _ in range(10):
            direction = complex_gaussian(rng, w0.shape)
            direction /= np.linalg.norm(direction)
            d_true = (truth(w0 + eps * direction) - truth(w0 - eps * direction)) / (2 * eps)
            d_surr = (
                surrogate_value(coeffs, w0 + eps * direction)
                - surrogate_value(coeffs, w0 - eps * direction)
            ) / (2 * eps)
            assert abs(d_true - d_surr) < 1e-5 * max(1.0, abs(d_true))


class TestSolveSurrogate:
    def test_zero_linear_term(self):
        m, d = 4, 2
        coeffs = SurrogateCoefficients(
            psi=np.eye(m, dtype=complex),
            lam=1.0,
            pi=np.zeros((m, d), dtype=complex),
            q0=np.eye(2, dtype=complex),
            xi0=np.eye(d, dtype=complex),
            r_gprime=np.eye(m, dtype=complex),
            constant=0.0,
            omega1=0.5,
            d=d,
            m=m,
        )
        assert np.allclose(solve_surrogate(coeffs, 2.0), 0.0)

    def test_scalar_hand_case(self):
        # Quadratic weight 1, linear coefficient 2, unit budget: the
        # unconstrained minimizer 2 exceeds the budget, so mu = 1, w = 1.
        coeffs = SurrogateCoefficients(
            psi=np.zeros((1, 1), dtype=complex),
            lam=1.0,
            pi=np.array([[2.0]], dtype=complex),
            q0=np.eye(1, dtype=complex),
            xi0=np.eye(1, dtype=complex),
            r_gprime=np.eye(1, dtype=complex),
            constant=0.0,
            omega1=0.0,
            d=1,
            m=1,
        )
        w = solve_surrogate(coeffs, 1.0)
        assert abs(w[0, 0] - 1.0) < 1e-6

    def test_power_equality_when_active(self):
        rng = trial_rng(3, 0)
        for _ in range(10):
            m, d = 4, 2
            a = complex_gaussian(rng, (m, m))
            psi = hermitize(a @ a.conj().T)
            pi = 3.0 * complex_gaussian(rng, (m, d))
            coeffs = SurrogateCoefficients(
                psi=psi,
                lam=0.5,
                pi=pi,
                q0=np.eye(2, dtype=complex),
                xi0=np.eye(d, dtype=complex),
                r_gprime=np.eye(m, dtype=complex),
                constant=0.0,
                omega1=0.5,
                d=d,
                m=m,
            )
            p_dt = 0.25
            w = solve_surrogate(coeffs, p_dt)
            power = np.sum(np.abs(w) ** 2)
            assert power <= p_dt + 1e-12
            assert abs(power - p_dt) < 1e-8


class TestMmBeamformer:
    def test_monotone_descent(self):
        cfg, r_h, r_g, training, est, _, _ = make_instance(4)
        _, trace = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, cfg.omega1, cfg.d,
        )
        diffs = np.diff(trace.objectives)
        assert np.all(diffs <= 1e-12)
        assert trace.converged

    def test_sensing_only_matches_projected_gradient(self):
        cfg, r_h, r_g, training, est, r_gprime, _ = make_instance(5, omega1=0.0)
        beam, trace = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, 0.0, cfg.d,
        )

        def objective(w):
            b = hermitize(r_gprime + (cfg.l_dt / cfg.sigma2) * (w @ w.conj().T))
            return float(np.trace(np.linalg.inv(b)).real) / cfg.m

        def gradient(w):
            b_inv = spd_inverse(r_gprime + (cfg.l_dt / cfg.sigma2) * (w @ w.conj().T))
            return -(2.0 * cfg.l_dt / (cfg.m * cfg.sigma2)) * (b_inv @ b_inv @ w)

        def project(w):
            power = np.sum(np.abs(w) ** 2)
            return w * np.sqrt(cfg.p_dt / power) if power > cfg.p_dt else w

        res = pgd_minimize(
            objective, gradient, project,
            default_beamformer_start(est.h_hat, cfg.d, cfg.p_dt),
        )
        assert abs(trace.objectives[-1] - res.objective) < 1e-5 * abs(res.objective)

    def test_default_config_converges(self):
        cfg, r_h, r_g, training, est, _, _ = make_instance(6)
        _, trace = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, cfg.omega1, cfg.d,
        )
        assert trace.converged and trace.iterations <= 500

    def test_multi_start_agreement(self):
        cfg, r_h, r_g, training, est, _, rng = make_instance(7)
        finals = []
        for _ in range(2):
            w0 = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
            _, trace = mm_beamformer(
                est.h_hat, est.r_delta, training.signal.gram, r_g,
                cfg.sigma2, cfg.l_dt, cfg.p_dt, cfg.omega1, cfg.d, w0=w0,
            )
            finals.append(trace.objectives[-1])
        assert abs(finals[0] - finals[1]) < 1e-4 * max(map(abs, finals))

    def test_multiplier_complementarity(self):
        cfg, r_h, r_g, training, est, _, _ = make_instance(8)
        beam, _ = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, cfg.omega1, cfg.d,
        )
        # At these budgets both metrics strictly improve with power, so the
        # constraint stays active at every fixed point.
        assert abs(beam.power - cfg.p_dt) < 1e-8 * cfg.p_dt


class TestMmBeamformerMi:
    def test_monotone_in_power(self):
        cfg, r_h, r_g, training, est, _, _ = make_instance(9, omega1=1.0)
        prev = -np.inf
        for p_dt in (1.0, 2.0, 4.0, 8.0):
            beam, _ = mm_beamformer_mi(
                est.h_hat, est.r_delta, training.signal.gram, r_g,
                cfg.sigma2, cfg.l_dt, p_dt, 1.0, cfg.d,
            )
            value = mi_com(est.h_hat, beam.w, est.r_delta, cfg.sigma2)
            assert value >= prev - 1e-10
            prev = value

    def test_tight_and_dominant(self):
        cfg, r_h, r_g, training, est, r_gprime, rng = make_instance(10)
        w0 = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
        coeffs = surrogate_coefficients_mi(
            est.h_hat, est.r_delta, r_gprime, w0, cfg.sigma2, cfg.l_dt, cfg.omega1,
            logdet_rg=logdet_spd(r_g.matrix),
        )

        def negated(w):
            return -(
                cfg.omega1 * mi_com(est.h_hat, w, est.r_delta, cfg.sigma2)
                + cfg.omega2 * mi_rad(r_g, training.signal.gram, w, cfg.l_dt, cfg.sigma2)
            )

        assert abs(surrogate_value(coeffs, w0) - negated(w0)) < 1e-9
        for _ in range(20):
            w = random_feasible(rng, (cfg.m, cfg.d), cfg.p_dt)
            assert surrogate_value(coeffs, w) >= negated(w) - 1e-9

    def test_sensing_end_agrees_with_mse_criterion(self):
        cfg, r_h, r_g, training, est, _, _ = make_instance(11, omega1=0.0)
        b_mse, _ = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, 0.0, cfg.d,
        )
        b_mi, _ = mm_beamformer_mi(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, 0.0, cfg.d,
        )
        mi1 = mi_rad(r_g, training.signal.gram, b_mse.w, cfg.l_dt, cfg.sigma2)
        mi2 = mi_rad(r_g, training.signal.gram, b_mi.w, cfg.l_dt, cfg.sigma2)
        assert abs(mi1 - mi2) < 1e-4 * abs(mi2)


class TestExistingScheme:
    def test_weight_collapse_equals_communication_design(self):
        # With full weight on communication, reusing comm-only training makes
        # the baseline identical to the communication-oriented pipeline.
        cfg, r_h, r_g, training, est, _, _ = make_instance(12, omega1=1.0)
        result = existing_scheme(est.h_hat, est.r_delta, training.signal, r_h, r_g, cfg)
        beam, trace = mm_beamformer(
            est.h_hat, est.r_delta, training.signal.gram, r_g,
            cfg.sigma2, cfg.l_dt, cfg.p_dt, 1.0, cfg.d,
        )
        assert result.scheme == "existing"
        assert abs(result.objective - trace.objectives[-1]) < 1e-12
        assert np.allclose(result.w, beam.w)
