"""Experiment orchestration: config ingestion, Monte Carlo sweeps, CSV output.

Power levels enter through SNRs: p_ce = gamma_ce * l_ce * sigma2 and
p_dt = gamma_dt * sigma2, converted from dB exactly once at config time.
Per-trial randomness is keyed by (master seed, trial index) only, so trial
results are independent of execution order and shared across sweep points
(common random numbers keep sweeps trend-clean).
"""

from __future__ import annotations

import configparser
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .beamforming import mm_beamformer
from .joint import (
    communication_oriented,
    joint_design_ao,
    joint_design_gp,
    sensing_oriented,
)
from .metrics import (
    MetricReport,
    mi_com,
    mi_rad,
    mse_ce,
    mse_com,
    mse_rad,
)
from .model import (
    CorrelationMatrix,
    SystemConfig,
    TrainingSignal,
    complex_gaussian,
    exponential_correlation,
    identity_correlation,
    lmmse_channel_estimate,
    lmmse_trm_estimate,
    qpsk_symbols,
    synthesize_channel,
    trial_rng,
)
from .numerics import NumericalFailure, SolverSettings
from .results import DesignResult
from .training import design_training

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "ExperimentConfig",
    "KNOWN_SCHEMES",
    "algorithm_comparison",
    "approximation_study",
    "emit_csv",
    "emit_table",
    "load_config",
    "mse_region_sweep",
    "run_scheme",
    "run_sweep",
]

CSV_HEADER = (
    "scheme,omega1,gamma_ce_db,gamma_dt_db,trials,mse_com,mse_rad,mse_ce,"
    "mi_com,mi_rad,objective,wallclock_ms,converged"
)

KNOWN_SCHEMES = (
    "sequential",
    "joint",
    "joint-gp",
    "existing",
    "communication",
    "communication-joint",
    "sensing",
)


class ConfigError(ValueError):
    """The experiment configuration file or values are invalid."""


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a full experiment run."""

    m: int = 8
    n_com: int = 4
    n_rad: int = 8
    d: int = 4
    l_ce: int = 8
    l_dt: int = 32
    sigma2: float = 1.0
    rho: float = 0.5
    r_g_model: str = "identity"
    omega1: float = 0.5
    gamma_ce_db: list[float] = field(default_factory=lambda: [1.0])
    gamma_dt_db: list[float] = field(default_factory=lambda: [0.0, 4.0, 8.0, 12.0])
    omega1_grid: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    l_dt_grid: list[int] = field(default_factory=lambda: [8, 14, 20, 26, 32, 40])
    trials: int = 1000
    schemes: list[str] = field(
        default_factory=lambda: ["sequential", "joint", "existing", "communication", "sensing"]
    )
    master_seed: int = 12345
    threads: int = 1
    timing: bool = False
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.gamma_ce_db or not self.gamma_dt_db:
            raise ConfigError("SNR grids must be nonempty")
        for scheme in self.schemes:
            if scheme not in KNOWN_SCHEMES:
                raise ConfigError(
                    f"unknown scheme {scheme!r}; known: {', '.join(KNOWN_SCHEMES)}"
                )

    def correlations(self) -> tuple[CorrelationMatrix, CorrelationMatrix]:
        r_h = exponential_correlation(self.m, self.rho)
        spec = self.r_g_model.split()
        if spec[0] == "identity":
            r_g = identity_correlation(self.m)
        elif spec[0] == "exponential":
            r_g = exponential_correlation(self.m, float(spec[1]))
        else:
            raise ConfigError(f"unknown r_g model {self.r_g_model!r}")
        return r_h, r_g

    def system(self, gamma_ce_db: float, gamma_dt_db: float, omega1: float) -> SystemConfig:
        gamma_ce = 10.0 ** (gamma_ce_db / 10.0)
        gamma_dt = 10.0 ** (gamma_dt_db / 10.0)
        return SystemConfig(
            m=self.m,
            n_com=self.n_com,
            n_rad=self.n_rad,
            d=self.d,
            l_ce=self.l_ce,
            l_dt=self.l_dt,
            sigma2=self.sigma2,
            p_ce=gamma_ce * self.l_ce * self.sigma2,
            p_dt=gamma_dt * self.sigma2,
            omega1=omega1,
        )


def _parse_floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def load_config(path: str) -> ExperimentConfig:
    """Read the sectioned key-value config file ([system]/[sweep]/[solver]/[schemes])."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")
    kwargs: dict = {}
    try:
        if parser.has_section("system"):
            sec = parser["system"]
            for key in ("m", "n_com", "n_rad", "d", "l_ce", "l_dt"):
                if key in sec:
                    kwargs[key] = sec.getint(key)
            for key in ("sigma2", "rho", "omega1"):
                if key in sec:
                    kwargs[key] = sec.getfloat(key)
            if "r_g" in sec:
                kwargs["r_g_model"] = sec.get("r_g").strip()
        if parser.has_section("sweep"):
            sec = parser["sweep"]
            for key in ("gamma_ce_db", "gamma_dt_db", "omega1_grid"):
                if key in sec:
                    kwargs[key] = _parse_floats(sec.get(key))
            if "l_dt_grid" in sec:
                kwargs["l_dt_grid"] = [int(v) for v in _parse_floats(sec.get("l_dt_grid"))]
            if "trials" in sec:
                kwargs["trials"] = sec.getint("trials")
            if "seed" in sec:
                kwargs["master_seed"] = sec.getint("seed")
        if parser.has_section("schemes"):
            if "run" in parser["schemes"]:
                kwargs["schemes"] = parser["schemes"].get("run").replace(",", " ").split()
        if parser.has_section("solver"):
            overrides = {}
            defaults = SolverSettings()
            for key, raw in parser["solver"].items():
                if not hasattr(defaults, key):
                    raise ConfigError(f"unknown solver setting {key!r}")
                current = getattr(defaults, key)
                overrides[key] = int(raw) if isinstance(current, int) else float(raw)
            kwargs["settings"] = defaults.with_overrides(**overrides)
    except (ValueError, configparser.Error) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# Per-trial Monte Carlo machinery
# ---------------------------------------------------------------------------


@dataclass
class _TrialOutcome:
    mse_com: float
    mse_rad: float
    mi_com: float
    mi_rad: float
    objective: float
    converged: bool
    err_ce: float
    err_rad: float


def _empirical_rad(rng, training, w, r_g, cfg: SystemConfig) -> float:
    g = synthesize_channel(r_g, cfg.n_rad, rng)
    symbols = qpsk_symbols(cfg.d, cfg.l_dt, rng)
    block = np.concatenate([training.x, w @ symbols], axis=1)
    noise = math.sqrt(cfg.sigma2) * complex_gaussian(rng, (cfg.n_rad, block.shape[1]))
    echoes = g @ block + noise
    g_hat = lmmse_trm_estimate(echoes, block, r_g, cfg.sigma2)
    return float(np.sum(np.abs(g - g_hat) ** 2)) / cfg.n_rad


def _run_trial(
    trial: int,
    scheme: str,
    training: TrainingSignal,
    fixed_w: np.ndarray | None,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    master_seed: int,
    settings: SolverSettings,
) -> _TrialOutcome:
    rng = trial_rng(master_seed, trial)
    h = synthesize_channel(r_h, cfg.n_com, rng)
    noise = math.sqrt(cfg.sigma2) * complex_gaussian(rng, (cfg.n_com, training.x.shape[1]))
    y = h @ training.x + noise
    est = lmmse_channel_estimate(y, training, r_h, cfg.sigma2)
    err_ce = float(np.sum(np.abs(h - est.h_hat) ** 2)) / cfg.n_com

    if fixed_w is None:
        beam, trace = mm_beamformer(
            est.h_hat,
            est.r_delta,
            training.gram,
            r_g,
            cfg.sigma2,
            cfg.l_dt,
            cfg.p_dt,
            cfg.omega1,
            cfg.d,
            settings=settings,
        )
        w = beam.w
        objective = trace.objectives[-1]
        converged = trace.converged
    else:
        w = fixed_w
        objective = math.nan
        converged = True

    err_rad = _empirical_rad(rng, training, w, r_g, cfg)
    return _TrialOutcome(
        mse_com=mse_com(est.h_hat, w, est.r_delta, cfg.sigma2),
        mse_rad=mse_rad(r_g, training.gram, w, cfg.l_dt, cfg.sigma2),
        mi_com=mi_com(est.h_hat, w, est.r_delta, cfg.sigma2),
        mi_rad=mi_rad(r_g, training.gram, w, cfg.l_dt, cfg.sigma2),
        objective=objective,
        converged=converged,
        err_ce=err_ce,
        err_rad=err_rad,
    )


def _monte_carlo(
    scheme: str,
    training: TrainingSignal,
    fixed_w: np.ndarray | None,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    trials: int,
    master_seed: int,
    settings: SolverSettings,
    threads: int,
) -> list[_TrialOutcome]:
    args = (scheme, training, fixed_w, r_h, r_g, cfg, master_seed, settings)
    if threads <= 1:
        return [_run_trial(t, *args) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_run_trial, t, *args) for t in range(trials)]
        # Reduce in trial-index order for deterministic aggregation.
        return [f.result() for f in futures]


def _aggregate(
    scheme: str,
    training: TrainingSignal,
    representative_w: np.ndarray | None,
    outcomes: list[_TrialOutcome],
    r_h: CorrelationMatrix,
    cfg: SystemConfig,
    design_objective: float | None,
    analytic: MetricReport | None,
    converged_design: bool,
    objective_trace: list[float] | None = None,
    trace_seconds: list[float] | None = None,
) -> DesignResult:
    mean = lambda vals: float(np.mean(vals))
    ce_analytic = mse_ce(r_h, training.x, cfg.sigma2) / cfg.m
    trial_report = MetricReport(
        mse_ce=ce_analytic,
        mse_com=mean([o.mse_com for o in outcomes]),
        mse_rad_approx=mean([o.mse_rad for o in outcomes]),
        mi_com=mean([o.mi_com for o in outcomes]),
        mi_rad=mean([o.mi_rad for o in outcomes]),
        mse_com_avg=analytic.mse_com_avg if analytic else None,
        mi_ce=analytic.mi_ce if analytic else None,
        mi_com_avg=analytic.mi_com_avg if analytic else None,
    )
    empirical = MetricReport(
        mse_ce=mean([o.err_ce for o in outcomes]) / cfg.m,
        mse_rad_exact=mean([o.err_rad for o in outcomes]) / cfg.m,
    )
    if design_objective is None:
        objective = mean([o.objective for o in outcomes])
    else:
        objective = design_objective
    converged = converged_design and all(o.converged for o in outcomes)
    return DesignResult(
        scheme=scheme,
        x=training.x,
        w=representative_w,
        objective=objective,
        analytic=trial_report,
        empirical=empirical,
        objective_trace=objective_trace or [],
        trace_seconds=trace_seconds or [],
        converged=converged,
    )


def run_scheme(
    scheme: str,
    exp: ExperimentConfig,
    gamma_ce_db: float,
    gamma_dt_db: float,
    omega1: float | None = None,
    trials: int | None = None,
) -> DesignResult:
    """Execute one scheme's full pipeline at one sweep point.

    Per-realization schemes design the beamformer from each trial's channel
    estimate; statistical schemes design once from the correlations and are
    then evaluated on the same trial stream.
    """
    r_h, r_g = exp.correlations()
    omega1 = exp.omega1 if omega1 is None else omega1
    trials = exp.trials if trials is None else trials
    cfg = exp.system(gamma_ce_db, gamma_dt_db, omega1)
    settings = exp.settings
    start = time.perf_counter()

    if scheme in ("sequential", "existing", "communication"):
        if scheme == "sequential":
            train_omega = omega1
            run_cfg = cfg
        elif scheme == "existing":
            train_omega = 1.0  # training optimized for channel estimation only
            run_cfg = cfg
        else:
            train_omega = 1.0
            run_cfg = replace(cfg, omega1=1.0)
        design = design_training(
            r_h, r_g, cfg.sigma2, cfg.p_ce, train_omega, cfg.l_ce, settings
        )
        outcomes = _monte_carlo(
            scheme, design.signal, None, r_h, r_g, run_cfg, trials, exp.master_seed,
            settings, exp.threads,
        )
        result = _aggregate(
            scheme, design.signal, None, outcomes, r_h, run_cfg, None, None, True
        )
    elif scheme in ("joint", "joint-gp", "communication-joint", "sensing"):
        if scheme == "joint":
            design_result, _ = joint_design_ao(r_h, r_g, cfg, settings=settings)
        elif scheme == "joint-gp":
            design_result, _ = joint_design_gp(r_h, r_g, cfg, settings=settings)
        elif scheme == "communication-joint":
            design_result = communication_oriented(r_h, r_g, cfg, "joint", settings=settings)
        else:
            design_result = sensing_oriented(r_h, r_g, cfg, settings=settings)
        training = TrainingSignal.from_matrix(design_result.x)
        outcomes = _monte_carlo(
            scheme, training, design_result.w, r_h, r_g, cfg, trials, exp.master_seed,
            settings, exp.threads,
        )
        result = _aggregate(
            scheme,
            training,
            design_result.w,
            outcomes,
            r_h,
            cfg,
            design_result.objective,
            design_result.analytic,
            design_result.converged,
            objective_trace=design_result.objective_trace,
            trace_seconds=design_result.trace_seconds,
        )
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")

    result.wallclock_ms = (time.perf_counter() - start) * 1e3
    return result


def run_sweep(exp: ExperimentConfig) -> list[dict]:
    """Full sweep over the configured SNR grids and scheme list."""
    rows = []
    for gamma_ce in exp.gamma_ce_db:
        for gamma_dt in exp.gamma_dt_db:
            for scheme in exp.schemes:
                result = run_scheme(scheme, exp, gamma_ce, gamma_dt)
                rows.append(_result_row(result, exp, gamma_ce, gamma_dt, exp.omega1))
    return rows


def _result_row(
    result: DesignResult,
    exp: ExperimentConfig,
    gamma_ce_db: float,
    gamma_dt_db: float,
    omega1: float,
) -> dict:
    report = result.analytic
    return {
        "scheme": result.scheme,
        "omega1": omega1,
        "gamma_ce_db": gamma_ce_db,
        "gamma_dt_db": gamma_dt_db,
        "trials": exp.trials,
        "mse_com": report.mse_com,
        "mse_rad": report.mse_rad_approx,
        "mse_ce": report.mse_ce,
        "mi_com": report.mi_com,
        "mi_rad": report.mi_rad,
        "objective": result.objective,
        "wallclock_ms": result.wallclock_ms if exp.timing else 0.0,
        "converged": result.converged,
    }


def mse_region_sweep(exp: ExperimentConfig, omega_grid: list[float] | None = None) -> list[dict]:
    """Trade-off boundary: one (mse_com, mse_rad) pair per weight per family.

    The instantaneous-CSI family is the sequential scheme, the statistical
    family the joint design.  Each family's boundary must be Pareto-monotone;
    a violation beyond statistical slack raises ``NumericalFailure``.
    """
    grid = exp.omega1_grid if omega_grid is None else list(omega_grid)
    if not grid or min(grid) < 0.0 or max(grid) > 1.0:
        raise ConfigError("omega grid must be nonempty within [0, 1]")
    gamma_ce = exp.gamma_ce_db[0]
    gamma_dt = exp.gamma_dt_db[0]
    rows = []
    for family in ("sequential", "joint"):
        family_rows = []
        for omega1 in grid:
            result = run_scheme(family, exp, gamma_ce, gamma_dt, omega1=omega1)
            family_rows.append(_result_row(result, exp, gamma_ce, gamma_dt, omega1))
        _assert_pareto(family_rows)
        rows.extend(family_rows)
    return rows


def _assert_pareto(rows: list[dict], rel_tol: float = 1e-6) -> None:
    ordered = sorted(rows, key=lambda r: r["mse_com"])
    last = math.inf
    for row in ordered:
        if row["mse_rad"] > last * (1.0 + rel_tol):
            raise NumericalFailure(
                f"trade-off boundary is not Pareto-monotone near omega1={row['omega1']}"
            )
        last = min(last, row["mse_rad"])


def approximation_study(
    exp: ExperimentConfig,
    l_dt_grid: list[int] | None = None,
    n_channels: int = 20,
    n_symbol_draws: int = 25,
) -> list[dict]:
    """Exact-vs-approximate sensing MSE gap as the data block grows.

    For each block length, beamformers are designed per channel estimate by
    the sequential method, then the exact metric (realized symbol Gram) is
    averaged over fresh symbol draws and compared with the approximation.
    """
    grid = exp.l_dt_grid if l_dt_grid is None else list(l_dt_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("l_dt grid must be strictly increasing")
    r_h, r_g = exp.correlations()
    gamma_ce = exp.gamma_ce_db[0]
    gamma_dt = exp.gamma_dt_db[0]
    settings = exp.settings
    rows = []
    for l_dt in grid:
        local = replace(exp, l_dt=l_dt)
        cfg = local.system(gamma_ce, gamma_dt, exp.omega1)
        design = design_training(
            r_h, r_g, cfg.sigma2, cfg.p_ce, cfg.omega1, cfg.l_ce, settings
        )
        exact_vals = []
        approx_vals = []
        for ch in range(n_channels):
            rng = trial_rng(exp.master_seed, ch)
            h = synthesize_channel(r_h, cfg.n_com, rng)
            noise = math.sqrt(cfg.sigma2) * complex_gaussian(rng, (cfg.n_com, cfg.l_ce))
            est = lmmse_channel_estimate(h @ design.signal.x + noise, design.signal, r_h, cfg.sigma2)
            beam, _ = mm_beamformer(
                est.h_hat,
                est.r_delta,
                design.signal.gram,
                r_g,
                cfg.sigma2,
                cfg.l_dt,
                cfg.p_dt,
                cfg.omega1,
                cfg.d,
                settings=settings,
            )
            approx_vals.append(
                mse_rad(r_g, design.signal.gram, beam.w, cfg.l_dt, cfg.sigma2)
            )
            for _ in range(n_symbol_draws):
                symbols = qpsk_symbols(cfg.d, cfg.l_dt, rng)
                exact_vals.append(
                    mse_rad(r_g, design.signal.gram, beam.w, cfg.l_dt, cfg.sigma2, symbols=symbols)
                )
        exact = float(np.mean(exact_vals))
        approx = float(np.mean(approx_vals))
        rows.append(
            {
                "l_dt": l_dt,
                "mse_rad_exact": exact,
                "mse_rad_approx": approx,
                "rel_gap": abs(exact - approx) / approx,
            }
        )
    return rows


def algorithm_comparison(exp: ExperimentConfig) -> list[dict]:
    """Convergence traces (objective vs wall-clock) of the two joint solvers."""
    r_h, r_g = exp.correlations()
    gamma_ce = exp.gamma_ce_db[0]
    gamma_dt = exp.gamma_dt_db[0]
    cfg = exp.system(gamma_ce, gamma_dt, exp.omega1)
    ao_result, _ = joint_design_ao(r_h, r_g, cfg, settings=exp.settings)
    gp_result, _ = joint_design_gp(r_h, r_g, cfg, settings=exp.settings)
    rows = []
    for name, result in (("ao", ao_result), ("gp", gp_result)):
        for i, (obj, sec) in enumerate(zip(result.objective_trace, result.trace_seconds)):
            rows.append(
                {"algorithm": name, "iteration": i, "seconds": sec, "objective": obj}
            )
    final_ao = ao_result.objective
    final_gp = gp_result.objective
    if abs(final_ao - final_gp) > 0.01 * max(abs(final_ao), abs(final_gp)):
        raise NumericalFailure(
            f"joint solvers disagree: {final_ao:.6g} vs {final_gp:.6g}"
        )
    return rows


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def emit_table(rows: list[dict], header: list[str], path: str, overwrite: bool = False) -> None:
    """Write rows as locale-independent UTF-8 CSV; refuse silent overwrites."""
    if os.path.exists(path) and not overwrite:
        raise FileExistsError(f"refusing to overwrite existing file: {path}")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(row[col]) for col in header))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_csv(rows: list[dict], path: str, overwrite: bool = False) -> None:
    """Write sweep results under the fixed schema."""
    emit_table(rows, CSV_HEADER.split(","), path, overwrite=overwrite)
