"""MM-based robust transmit beamforming for the joint data/sensing objective.

Each iteration majorizes the weighted objective at the current beamformer by
a convex quadratic Tr{W^H (a Psi + b I) W} - 2 Re Tr{Pi^H W} + const whose
minimizer under the power budget has a semi-closed form: a matrix inverse
plus (when the budget binds) a bisection on the Lagrange multiplier.  The
construction guarantees monotone descent of the true objective to a
stationary point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Beamformer, CorrelationMatrix, SystemConfig, TrainingSignal
from .metrics import MetricReport, mi_ce, mi_com, mi_rad, mse_ce, mse_com, mse_rad
from .results import DesignResult
from .numerics import (
    NumericalFailure,
    SolverSettings,
    bisect,
    evd,
    hermitize,
    logdet_spd,
    spd_inverse,
)

__all__ = [
    "MMTrace",
    "SurrogateCoefficients",
    "beamforming_objective",
    "default_beamformer_start",
    "existing_scheme",
    "mm_beamformer",
    "mm_beamformer_mi",
    "solve_surrogate",
    "surrogate_coefficients",
    "surrogate_coefficients_mi",
    "surrogate_value",
]

_LAMBDA_FLOOR = 1e-12


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class SurrogateCoefficients:
    """One MM iteration's quadratic majorant of the weighted objective.

    The majorant is  q(W) = Tr{W^H (omega1/d Psi + lam omega2/m I) W}
    - 2 Re Tr{Pi^H W} + constant  and satisfies q(W) >= objective(W) with
    equality and matching gradient at the expansion point.
    """

    psi: np.ndarray
    lam: float
    pi: np.ndarray
    q0: np.ndarray
    xi0: np.ndarray
    r_gprime: np.ndarray
    constant: float
    omega1: float
    d: int
    m: int

    @property
    def quadratic(self) -> np.ndarray:
        omega2 = 1.0 - self.omega1
        return (self.omega1 / self.d) * self.psi + (
            self.lam * omega2 / self.m
        ) * np.eye(self.m)


@dataclass(frozen=True, eq=False)
class MMTrace:
    """Objective trajectory of one MM run; the sequence is nonincreasing."""

    objectives: list[float]
    converged: bool
    iterations: int


def beamforming_objective(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    gram_x: np.ndarray,
    r_g: CorrelationMatrix,
    w: np.ndarray,
    sigma2: float,
    l_dt: int,
    omega1: float,
) -> float:
    """Weighted sum of the normalized data MSE and sensing MSE at ``w``."""
    omega2 = 1.0 - omega1
    val = 0.0
    if omega1 > 0.0:
        val += omega1 * mse_com(h_hat, w, r_delta, sigma2)
    if omega2 > 0.0:
        val += omega2 * mse_rad(r_g, gram_x, w, l_dt, sigma2)
    return val


def _max_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_sym(a))[-1])


def surrogate_coefficients(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    r_gprime: np.ndarray,
    w0: np.ndarray,
    sigma2: float,
    l_dt: int,
    omega1: float,
    rg_inv: np.ndarray | None = None,
) -> SurrogateCoefficients:
    """Expansion of the weighted MSE objective around ``w0``.

    The data term is linearized through the joint convexity of
    Tr{A B^{-1} A^H}; the sensing term additionally bounds its residual
    quadratic by ``lam`` times the identity, with

        lam = max_eig(Xi0^{-1} W0^H Rg'^{-2} W0 Xi0^{-1}) * max_eig(Rg'^{-1}).

    ``lam`` is floored at a tiny positive value so the quadratic stays
    strongly convex even at a degenerate zero expansion point.
    """
    m, d = w0.shape
    omega2 = 1.0 - omega1
    n_com = h_hat.shape[0]

    # Data-transmission part.
    hw0 = h_hat @ w0
    kappa0 = float(np.trace(w0 @ w0.conj().T @ r_delta).real) + sigma2
    q0 = _sym(hw0 @ hw0.conj().T + kappa0 * np.eye(n_com))
    q0_inv = _sym(np.linalg.inv(q0))
    t0 = _sym(h_hat.conj().T @ q0_inv @ h_hat)  # m x m
    k0 = t0 @ w0  # m x d
    qh_w0 = q0_inv @ hw0
    trace_q = float(np.sum(np.abs(qh_w0) ** 2))
    psi = _sym(k0 @ k0.conj().T + trace_q * r_delta)
    c_com = d + sigma2 * trace_q

    # Sensing part.
    if rg_inv is None:
        rg_inv = spd_inverse(r_gprime)
    rg_inv2 = rg_inv @ rg_inv
    xi0 = _sym((sigma2 / l_dt) * np.eye(d) + w0.conj().T @ rg_inv @ w0)
    xi0_inv = _sym(np.linalg.inv(xi0))
    b0 = _sym(xi0_inv @ w0.conj().T @ rg_inv2 @ w0 @ xi0_inv)
    lam = max(_max_eig(b0) * _max_eig(rg_inv), _LAMBDA_FLOOR)

    a0 = rg_inv @ w0
    pi_rad_h = xi0_inv @ w0.conj().T @ rg_inv2 + lam * w0.conj().T - b0 @ w0.conj().T @ rg_inv
    t1 = float(np.trace(a0 @ xi0_inv @ a0.conj().T).real)
    t2 = float(np.trace(xi0_inv @ w0.conj().T @ rg_inv2 @ w0).real)
    t3 = float(np.trace(b0 @ w0.conj().T @ rg_inv @ w0).real)
    p0 = float(np.sum(np.abs(w0) ** 2))
    c_rad = float(np.trace(rg_inv).real) - t1 + 2.0 * t2 - 2.0 * t3 + lam * p0

    pi_h = (omega1 / d) * (w0.conj().T @ t0) + (omega2 / m) * pi_rad_h
    constant = (omega1 / d) * c_com + (omega2 / m) * c_rad
    return SurrogateCoefficients(
        psi=psi,
        lam=lam,
        pi=pi_h.conj().T,
        q0=q0,
        xi0=xi0,
        r_gprime=hermitize(r_gprime),
        constant=constant,
        omega1=omega1,
        d=d,
        m=m,
    )


def surrogate_coefficients_mi(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    r_gprime: np.ndarray,
    w0: np.ndarray,
    sigma2: float,
    l_dt: int,
    omega1: float,
    logdet_rg: float = 0.0,
) -> SurrogateCoefficients:
    """Expansion of the negated weighted MI objective around ``w0``.

    Identical quadratic structure; only psi, lam, and pi change, via
    a0 = Rg'^{-1} - Rg'^{-1} W0 Xi0^{-1} W0^H Rg'^{-1}  and
    b0 = I_d - W0^H H^H Q0^{-1} H W0.  The constant is pinned so the
    majorant touches the negated objective at ``w0``.
    """
    m, d = w0.shape
    omega2 = 1.0 - omega1
    n_com = h_hat.shape[0]

    hw0 = h_hat @ w0
    kappa0 = float(np.trace(w0 @ w0.conj().T @ r_delta).real) + sigma2
    q0 = hermitize(hw0 @ hw0.conj().T + kappa0 * np.eye(n_com))
    q0_inv = spd_inverse(q0)
    t0 = hermitize(h_hat.conj().T @ q0_inv @ h_hat)
    b0 = hermitize(np.eye(d) - w0.conj().T @ t0 @ w0)
    b0_inv = spd_inverse(b0)

    k0 = t0 @ w0 @ b0_inv  # m x d
    core = q0_inv @ hw0 @ b0_inv @ hw0.conj().T @ q0_inv
    trace_q = float(np.trace(core).real)
    psi = hermitize(t0 @ w0 @ b0_inv @ w0.conj().T @ t0 + trace_q * r_delta)

    rg_inv = spd_inverse(r_gprime)
    xi0 = hermitize((sigma2 / l_dt) * np.eye(d) + w0.conj().T @ rg_inv @ w0)
    xi0_inv = spd_inverse(xi0)
    a0 = hermitize(rg_inv - rg_inv @ w0 @ xi0_inv @ w0.conj().T @ rg_inv)
    a0_inv = spd_inverse(a0)
    middle = xi0_inv @ w0.conj().T @ rg_inv @ a0_inv @ rg_inv
    lam = max(_max_eig(middle @ w0 @ xi0_inv) * _max_eig(rg_inv), _LAMBDA_FLOOR)

    pi_rad_h = middle + lam * w0.conj().T - middle @ w0 @ xi0_inv @ w0.conj().T @ rg_inv
    pi_h = (omega1 / d) * (b0_inv @ w0.conj().T @ t0) + (omega2 / m) * pi_rad_h
    pi = pi_h.conj().T

    # Pin the constant so the majorant is tight at the expansion point.
    neg_obj0 = -(
        omega1 * mi_com(h_hat, w0, r_delta, sigma2)
        + omega2 * (logdet_rg + _mi_rad_from_prior(r_gprime, w0, l_dt, sigma2)) / m
    )
    quad = hermitize((omega1 / d) * psi + (lam * omega2 / m) * np.eye(m))
    quad_at_w0 = float(
        np.trace(w0.conj().T @ quad @ w0).real - 2.0 * np.trace(pi.conj().T @ w0).real
    )
    return SurrogateCoefficients(
        psi=psi,
        lam=lam,
        pi=pi,
        q0=q0,
        xi0=xi0,
        r_gprime=hermitize(r_gprime),
        constant=neg_obj0 - quad_at_w0,
        omega1=omega1,
        d=d,
        m=m,
    )


def _mi_rad_from_prior(r_gprime: np.ndarray, w: np.ndarray, l_dt: int, sigma2: float) -> float:
    """Sensing MI up to the constant log det(r_g): log det(Rg' + l W W^H / s2)."""
    sign, logdet = np.linalg.slogdet(r_gprime + (l_dt / sigma2) * (w @ w.conj().T))
    return float(logdet.real)


def surrogate_value(coeffs: SurrogateCoefficients, w: np.ndarray) -> float:
    """Majorant value at ``w`` including its constant term."""
    quad = coeffs.quadratic
    return float(
        np.trace(w.conj().T @ quad @ w).real
        - 2.0 * np.trace(coeffs.pi.conj().T @ w).real
        + coeffs.constant
    )


def solve_surrogate(
    coeffs: SurrogateCoefficients,
    p_dt: float,
    settings: SolverSettings | None = None,
) -> np.ndarray:
    """Minimize the quadratic majorant under the transmit power budget.

    The unconstrained minimizer is (quadratic)^{-1} Pi; if it violates the
    budget the multiplier mu shifts the spectrum until the power meets the
    budget with equality, found by bisection on the strictly decreasing
    power curve.
    """
    s = settings or SolverSettings()
    eigs, basis = np.linalg.eigh(_sym(coeffs.quadratic))
    sigma = np.clip(eigs.real, 0.0, None)
    pi_t = basis.conj().T @ coeffs.pi
    weights = (np.abs(pi_t) ** 2).sum(axis=1)

    def power(mu: float) -> float:
        # Zero-weight spectral rows contribute nothing even at sigma + mu = 0;
        # nonzero weight over a vanishing denominator means unbounded power.
        denom = sigma + mu
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(weights == 0.0, 0.0, weights / (denom * denom))
        return float(vals.sum())

    def beamformer(mu: float) -> np.ndarray:
        denom = (sigma + mu)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(np.abs(pi_t) == 0.0, 0.0, pi_t / denom)
        return basis @ scaled

    if power(0.0) <= p_dt:
        return beamformer(0.0)
    hi = max(1.0, float(np.sqrt(weights.sum() / p_dt)))
    while power(hi) > p_dt:
        hi *= 2.0
        if hi > 1e200:
            raise NumericalFailure("failed to bracket the power multiplier")
    mu = bisect(power, 0.0, hi, tol=1e-12 * max(1.0, p_dt), target=p_dt)
    w = beamformer(mu)
    # The bisection leaves the power within tolerance of the budget on either
    # side; rescale the residual so the constraint is met exactly.
    actual = float(np.sum(np.abs(w) ** 2))
    if actual > p_dt:
        w = w * np.sqrt(p_dt / actual)
    return w


def default_beamformer_start(h_hat: np.ndarray, d: int, p_dt: float) -> np.ndarray:
    """Feasible deterministic start: scaled right singular directions of H."""
    _, _, vh = np.linalg.svd(h_hat)
    w0 = vh.conj().T[:, :d]
    if w0.shape[1] < d:
        extra = np.eye(h_hat.shape[1], dtype=complex)[:, : d - w0.shape[1]]
        w0 = np.concatenate([w0, extra], axis=1)
    return w0 * np.sqrt(p_dt / d)


def _mm_loop(
    coeff_fn,
    objective_fn,
    w0: np.ndarray,
    p_dt: float,
    settings: SolverSettings,
) -> tuple[Beamformer, MMTrace]:
    w = w0
    objectives = [objective_fn(w)]
    converged = False
    it = 0
    for it in range(1, settings.mm_max_iter + 1):
        coeffs = coeff_fn(w)
        w = solve_surrogate(coeffs, p_dt, settings)
        obj = objective_fn(w)
        if not np.isfinite(obj):
            raise NumericalFailure("non-finite objective in MM iteration", snapshot=w)
        prev = objectives[-1]
        objectives.append(obj)
        if abs(prev - obj) < settings.mm_obj_tol * max(1.0, abs(prev)):
            converged = True
            break
    return Beamformer.from_matrix(w, power_budget=p_dt * (1.0 + 1e-9)), MMTrace(
        objectives=objectives, converged=converged, iterations=it
    )


def mm_beamformer(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    gram_x: np.ndarray,
    r_g: CorrelationMatrix,
    sigma2: float,
    l_dt: int,
    p_dt: float,
    omega1: float,
    d: int,
    w0: np.ndarray | None = None,
    settings: SolverSettings | None = None,
) -> tuple[Beamformer, MMTrace]:
    """Robust ISAC beamformer by majorization-minimization.

    Convergence is declared on the relative change of the true weighted
    objective, re-evaluated at every iterate.
    """
    s = settings or SolverSettings()
    r_gprime = hermitize(r_g.inverse() + gram_x / sigma2)
    rg_inv = spd_inverse(r_gprime)
    if w0 is None:
        w0 = default_beamformer_start(h_hat, d, p_dt)
    omega2 = 1.0 - omega1
    m = r_gprime.shape[0]
    eye_d = np.eye(d)

    def coeff_fn(w):
        return surrogate_coefficients(
            h_hat, r_delta, r_gprime, w, sigma2, l_dt, omega1, rg_inv=rg_inv
        )

    def objective_fn(w):
        val = 0.0
        if omega1 > 0.0:
            kappa = float(np.trace(w @ w.conj().T @ r_delta).real) + sigma2
            hw = h_hat @ w
            core = _sym(eye_d + (hw.conj().T @ hw) / kappa)
            val += omega1 * float(np.trace(np.linalg.inv(core)).real) / d
        if omega2 > 0.0:
            b = _sym(r_gprime + (l_dt / sigma2) * (w @ w.conj().T))
            val += omega2 * float(np.trace(np.linalg.inv(b)).real) / m
        return val

    return _mm_loop(coeff_fn, objective_fn, w0, p_dt, s)


def mm_beamformer_mi(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    gram_x: np.ndarray,
    r_g: CorrelationMatrix,
    sigma2: float,
    l_dt: int,
    p_dt: float,
    omega1: float,
    d: int,
    w0: np.ndarray | None = None,
    settings: SolverSettings | None = None,
) -> tuple[Beamformer, MMTrace]:
    """MI-criterion variant: maximizes the weighted MI sum.

    The loop is identical with the MI surrogate coefficients; descent is
    tracked on the negated objective, so the recorded trace is
    -(omega1 mi_com + omega2 mi_rad) per iterate.
    """
    s = settings or SolverSettings()
    omega2 = 1.0 - omega1
    r_gprime = hermitize(r_g.inverse() + gram_x / sigma2)
    logdet_rg = logdet_spd(r_g.matrix)
    if w0 is None:
        w0 = default_beamformer_start(h_hat, d, p_dt)

    def coeff_fn(w):
        return surrogate_coefficients_mi(
            h_hat, r_delta, r_gprime, w, sigma2, l_dt, omega1, logdet_rg=logdet_rg
        )

    def objective_fn(w):
        return -(
            omega1 * mi_com(h_hat, w, r_delta, sigma2)
            + omega2 * mi_rad(r_g, gram_x, w, l_dt, sigma2)
        )

    return _mm_loop(coeff_fn, objective_fn, w0, p_dt, s)


def realized_design_result(
    scheme: str,
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    training: TrainingSignal,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    w: Beamformer,
    trace: MMTrace,
    cfg: SystemConfig,
) -> DesignResult:
    """Package one realization's design into the uniform result bundle."""
    report = MetricReport(
        mse_ce=mse_ce(r_h, training.x, cfg.sigma2) / cfg.m,
        mse_com=mse_com(h_hat, w.w, r_delta, cfg.sigma2),
        mse_rad_approx=mse_rad(r_g, training.gram, w.w, cfg.l_dt, cfg.sigma2),
        mi_ce=mi_ce(r_h, training.gram, cfg.sigma2),
        mi_com=mi_com(h_hat, w.w, r_delta, cfg.sigma2),
        mi_rad=mi_rad(r_g, training.gram, w.w, cfg.l_dt, cfg.sigma2),
    )
    return DesignResult(
        scheme=scheme,
        x=training.x,
        w=w.w,
        objective=trace.objectives[-1],
        analytic=report,
        objective_trace=list(trace.objectives),
        converged=trace.converged,
    )


def existing_scheme(
    h_hat: np.ndarray,
    r_delta: np.ndarray,
    training: TrainingSignal,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    w0: np.ndarray | None = None,
    settings: SolverSettings | None = None,
) -> DesignResult:
    """Baseline that reuses communication-only training for sensing.

    ``training`` must be the design that minimizes the channel-estimation
    MSE alone; the beamformer still optimizes the full weighted objective
    for that fixed training signal.
    """
    w, trace = mm_beamformer(
        h_hat,
        r_delta,
        training.gram,
        r_g,
        cfg.sigma2,
        cfg.l_dt,
        cfg.p_dt,
        cfg.omega1,
        cfg.d,
        w0=w0,
        settings=settings,
    )
    return realized_design_result(
        "existing", h_hat, r_delta, training, r_h, r_g, w, trace, cfg
    )
