"""Built-in invariant suite, runnable without pytest via `isacopt selftest`."""

from __future__ import annotations

import numpy as np

from .beamforming import mm_beamformer, surrogate_coefficients, surrogate_value
from .experiments import ExperimentConfig, run_scheme
from .metrics import mse_ce
from .model import (
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    lmmse_channel_estimate,
    synthesize_channel,
    trial_rng,
)
from .numerics import evd, hermitize, psd_project, spd_inverse
from .training import design_training_structured


def _random_hermitian(rng, n):
    a = complex_gaussian(rng, (n, n))
    return hermitize(a + a.conj().T)


def run(seed: int = 0) -> bool:
    """Run a compact invariant sweep; prints one line per check."""
    rng = trial_rng(seed, 0)
    checks: list[tuple[str, bool]] = []

    a = _random_hermitian(rng, 8)
    dec = evd(a)
    checks.append(
        (
            "evd reconstruction",
            np.linalg.norm(dec.reconstruct() - a) <= 1e-9 * max(1.0, np.linalg.norm(a)),
        )
    )

    p = psd_project(a, 3.0)
    checks.append(("psd projection idempotent", np.linalg.norm(psd_project(p, 3.0) - p) < 1e-12))

    spd = hermitize(a @ a.conj().T + 0.5 * np.eye(8))
    checks.append(
        (
            "spd inverse residual",
            np.linalg.norm(spd @ spd_inverse(spd) - np.eye(8)) < 1e-8 * np.linalg.norm(spd),
        )
    )

    r_h = exponential_correlation(8, 0.5)
    r_g = identity_correlation(8)
    cfg = ExperimentConfig(trials=200).system(1.0, 8.0, 0.5)
    alloc, design = design_training_structured(
        r_h, r_g, cfg.sigma2, cfg.p_ce, cfg.omega1, cfg.l_ce
    )
    checks.append(("waterfill powers on budget", abs(alloc.x.sum() - cfg.p_ce) < 1e-6 * cfg.p_ce))

    # Monte Carlo estimation error against the closed form, 2000 draws.
    errs = []
    for t in range(2000):
        g = trial_rng(seed, t)
        h = synthesize_channel(r_h, cfg.n_com, g)
        noise = np.sqrt(cfg.sigma2) * complex_gaussian(g, (cfg.n_com, cfg.l_ce))
        est = lmmse_channel_estimate(h @ design.signal.x + noise, design.signal, r_h, cfg.sigma2)
        errs.append(np.sum(np.abs(h - est.h_hat) ** 2) / cfg.n_com)
    analytic = mse_ce(r_h, design.signal.x, cfg.sigma2)
    checks.append(("estimation error matches closed form", abs(np.mean(errs) - analytic) < 0.05 * analytic))

    # MM descent plus surrogate dominance on one instance.
    g = trial_rng(seed, 99)
    h_hat = synthesize_channel(r_h, cfg.n_com, g)
    r_delta = spd_inverse(r_h.inverse() + design.signal.gram / cfg.sigma2)
    beam, trace = mm_beamformer(
        h_hat, r_delta, design.signal.gram, r_g, cfg.sigma2, cfg.l_dt, cfg.p_dt, 0.5, cfg.d
    )
    diffs = np.diff(trace.objectives)
    checks.append(("MM descent", bool(np.all(diffs <= 1e-12))))

    r_gprime = hermitize(r_g.inverse() + design.signal.gram / cfg.sigma2)
    coeffs = surrogate_coefficients(
        h_hat, r_delta, r_gprime, beam.w, cfg.sigma2, cfg.l_dt, 0.5
    )
    from .beamforming import beamforming_objective

    dominated = True
    for _ in range(10):
        w = complex_gaussian(g, beam.w.shape)
        w *= np.sqrt(cfg.p_dt / np.sum(np.abs(w) ** 2))
        truth = beamforming_objective(
            h_hat, r_delta, design.signal.gram, r_g, w, cfg.sigma2, cfg.l_dt, 0.5
        )
        if surrogate_value(coeffs, w) < truth - 1e-9:
            dominated = False
    checks.append(("surrogate dominates objective", dominated))

    exp = ExperimentConfig(trials=50)
    res1 = run_scheme("sequential", exp, 1.0, 8.0)
    res2 = run_scheme("sequential", exp, 1.0, 8.0)
    checks.append(
        ("scheme run deterministic", res1.analytic.mse_com == res2.analytic.mse_com)
    )

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok &= passed
    return ok
