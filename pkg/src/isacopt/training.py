"""Training-signal designs for simultaneous channel and target estimation.

The design variable is the Gram R_X = X X^H: the weighted estimation-MSE
objective is convex in R_X over the PSD cone with a trace budget, so the
general solver is projected gradient descent with an exact projection.  When
the two correlation matrices share an eigenbasis the problem collapses to a
per-eigendirection power allocation solved by bisection on the water level,
with each direction's power from a quartic stationarity equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CorrelationMatrix, TrainingSignal
from .numerics import (
    MisalignedCorrelationsError,
    SolverSettings,
    bisect,
    hermitize,
    pgd_minimize,
    psd_project,
    psd_sqrt,
    quartic_positive_root,
    spd_inverse,
    trace_inverse,
)

__all__ = [
    "TrainingDesign",
    "WaterfillAllocation",
    "design_training",
    "design_training_ls",
    "design_training_mi",
    "design_training_structured",
    "recover_training",
    "require_aligned",
]


@dataclass(frozen=True, eq=False)
class TrainingDesign:
    """A solved training design: Gram matrix, recovered signal, and objective."""

    r_x: np.ndarray
    signal: TrainingSignal
    objective: float
    method: str


@dataclass(frozen=True, eq=False)
class WaterfillAllocation:
    """Per-eigendirection training powers with the matching water level.

    ``mu`` is the Lagrange multiplier of the power constraint; ``mu_bar`` is
    the level at which the weakest direction would shut off when every
    direction stays active.
    """

    x: np.ndarray
    mu: float
    mu_bar: float


def recover_training(r_x: np.ndarray, l_ce: int) -> TrainingSignal:
    """Recover a training matrix X with X X^H = r_x, padded to l_ce columns.

    Any right-unitary factor leaves the Gram (and hence every metric)
    unchanged; the identity is used for reproducibility.
    """
    m = r_x.shape[0]
    if l_ce < m:
        raise ValueError(f"l_ce ({l_ce}) must be at least the antenna count ({m})")
    root = psd_sqrt(r_x)
    x = np.concatenate([root, np.zeros((m, l_ce - m), dtype=complex)], axis=1)
    return TrainingSignal.from_matrix(x)


def training_objective(
    r_x: np.ndarray,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    sigma2: float,
    omega1: float,
) -> float:
    """Weighted, antenna-normalized sum of the two estimation MSEs."""
    m = r_x.shape[0]
    omega2 = 1.0 - omega1
    val = 0.0
    if omega1 > 0.0:
        val += omega1 * trace_inverse(r_h.inverse() + r_x / sigma2) / m
    if omega2 > 0.0:
        val += omega2 * trace_inverse(r_g.inverse() + r_x / sigma2) / m
    return val


def design_training(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    sigma2: float,
    p_ce: float,
    omega1: float,
    l_ce: int,
    settings: SolverSettings | None = None,
) -> TrainingDesign:
    """General training design by projected gradient on the Gram matrix.

    The objective is convex and smooth on the feasible set, so the
    stationary point found is the global optimum.  Gradient:
    -(omega1 / (m sigma2)) A_h^{-2} - (omega2 / (m sigma2)) A_g^{-2} with
    A = R^{-1} + R_X / sigma2.
    """
    m = r_h.dim
    omega2 = 1.0 - omega1
    r_h_inv = r_h.inverse() if omega1 > 0.0 else None
    r_g_inv = r_g.inverse() if omega2 > 0.0 else None

    def objective(r_x):
        val = 0.0
        if r_h_inv is not None:
            val += omega1 * float(np.trace(np.linalg.inv(r_h_inv + r_x / sigma2)).real) / m
        if r_g_inv is not None:
            val += omega2 * float(np.trace(np.linalg.inv(r_g_inv + r_x / sigma2)).real) / m
        return val

    def gradient(r_x):
        grad = np.zeros((m, m), dtype=complex)
        if r_h_inv is not None:
            a_inv = np.linalg.inv(r_h_inv + r_x / sigma2)
            grad -= (omega1 / (m * sigma2)) * (a_inv @ a_inv.conj().T)
        if r_g_inv is not None:
            a_inv = np.linalg.inv(r_g_inv + r_x / sigma2)
            grad -= (omega2 / (m * sigma2)) * (a_inv @ a_inv.conj().T)
        return hermitize(grad)

    start = (p_ce / m) * np.eye(m, dtype=complex)
    result = pgd_minimize(
        objective, gradient, lambda r: psd_project(r, p_ce), start, settings
    )
    r_x = hermitize(result.x)
    return TrainingDesign(
        r_x=r_x,
        signal=recover_training(r_x, l_ce),
        objective=result.objective,
        method="pgd",
    )


def require_aligned(
    r_h: CorrelationMatrix, r_g: CorrelationMatrix, tol: float = 1e-8
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared eigenbasis of two commuting correlation matrices.

    Returns (basis, lambda_h, lambda_g) with the basis ordered by descending
    lambda_h.  Raises ``MisalignedCorrelationsError`` when the commutator is
    not negligible.
    """
    comm = r_h.matrix @ r_g.matrix - r_g.matrix @ r_h.matrix
    scale = max(
        1.0,
        float(np.linalg.norm(r_h.matrix) * np.linalg.norm(r_g.matrix)),
    )
    if np.linalg.norm(comm) > tol * scale:
        raise MisalignedCorrelationsError(
            "correlation matrices do not share an eigenbasis "
            f"(commutator norm {np.linalg.norm(comm):.3e})"
        )
    basis = r_h.evd.basis
    lam_h = r_h.evd.eigenvalues.real.copy()
    projected = basis.conj().T @ r_g.matrix @ basis
    lam_g = np.diag(projected).real.copy()
    return basis, lam_h, lam_g


def _stationarity_value(x: float, lam_h: float, lam_g: float, sigma2: float, m: int, omega1: float) -> float:
    omega2 = 1.0 - omega1
    return (
        omega1 / (m * sigma2) * (1.0 / lam_h + x / sigma2) ** -2
        + omega2 / (m * sigma2) * (1.0 / lam_g + x / sigma2) ** -2
    )


def _direction_power(mu: float, lam_h: float, lam_g: float, sigma2: float, m: int, omega1: float) -> float:
    """Power on one eigendirection at water level mu (complementary slackness)."""
    if mu >= _stationarity_value(0.0, lam_h, lam_g, sigma2, m, omega1):
        return 0.0
    omega2 = 1.0 - omega1
    a = 1.0 / lam_h
    b = 1.0 / lam_g
    c = a + b
    d = a * b
    k = mu * m * sigma2
    y = quartic_positive_root(
        k,
        2.0 * k * c,
        k * (c * c + 2.0 * d) - (omega1 + omega2),
        2.0 * k * c * d - 2.0 * (omega1 * b + omega2 * a),
        k * d * d - (omega1 * b * b + omega2 * a * a),
    )
    return sigma2 * y


def design_training_structured(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    sigma2: float,
    p_ce: float,
    omega1: float,
    l_ce: int,
    settings: SolverSettings | None = None,
) -> tuple[WaterfillAllocation, TrainingDesign]:
    """Structured training design when the correlations share an eigenbasis.

    The optimal signal transmits along the shared eigenvectors; the per-
    direction powers x_m solve the stationarity condition

        omega1/(m s2) (1/lam_h + x/s2)^-2 + omega2/(m s2) (1/lam_g + x/s2)^-2 = mu

    (a quartic in x), with the water level mu found by bisection until the
    powers sum to the budget.  Directions whose stationarity value at zero
    power already falls below mu receive no power.
    """
    s = settings or SolverSettings()
    basis, lam_h, lam_g = require_aligned(r_h, r_g)
    m = r_h.dim

    mu_hat = np.array(
        [_stationarity_value(0.0, lh, lg, sigma2, m, omega1) for lh, lg in zip(lam_h, lam_g)]
    )
    mu_bar = float(mu_hat.min())

    def total_power(mu: float) -> float:
        return sum(
            _direction_power(mu, lh, lg, sigma2, m, omega1) for lh, lg in zip(lam_h, lam_g)
        )

    hi = float(mu_hat.max())
    lo = mu_bar
    while total_power(lo) < p_ce:
        lo *= 0.5
        if lo < 1e-300:
            raise ArithmeticError("failed to bracket the water level from below")
    # The bracket-width fallback inside bisect limits the power residual, so
    # the tolerance here sits well below the 1e-8 budget-accuracy target.
    mu = bisect(total_power, lo, hi, tol=1e-4 * s.bisect_tol * max(1.0, p_ce), target=p_ce)
    x = np.array([_direction_power(mu, lh, lg, sigma2, m, omega1) for lh, lg in zip(lam_h, lam_g)])

    r_x = hermitize((basis * x) @ basis.conj().T)
    diag = np.concatenate([np.diag(np.sqrt(x)), np.zeros((m, l_ce - m))], axis=1)
    signal = TrainingSignal.from_matrix(basis @ diag)
    objective = training_objective(r_x, r_h, r_g, sigma2, omega1)
    allocation = WaterfillAllocation(x=x, mu=float(mu), mu_bar=mu_bar)
    return allocation, TrainingDesign(
        r_x=r_x, signal=signal, objective=objective, method="waterfill"
    )


def design_training_ls(m: int, p_ce: float, l_ce: int, sigma2: float = 1.0) -> TrainingDesign:
    """Least-squares-optimal training: equal power, X X^H = (p_ce / m) I.

    The stored objective is the LS estimation MSE sigma2 * m^2 / p_ce.
    """
    r_x = (p_ce / m) * np.eye(m, dtype=complex)
    return TrainingDesign(
        r_x=r_x,
        signal=recover_training(r_x, l_ce),
        objective=sigma2 * m * m / p_ce,
        method="ls",
    )


def design_training_mi(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    sigma2: float,
    p_ce: float,
    omega1: float,
    l_ce: int,
    settings: SolverSettings | None = None,
) -> TrainingDesign:
    """Mutual-information training design (weighted logdet maximization).

    The concave objective is maximized by projected gradient on its
    negation; the stored objective is the achieved weighted MI sum (nats,
    normalized by the antenna count).
    """
    m = r_h.dim
    omega2 = 1.0 - omega1
    eye = np.eye(m)

    def mi_value(r_x):
        val = 0.0
        for weight, corr in ((omega1, r_h), (omega2, r_g)):
            if weight > 0.0:
                sign, logdet = np.linalg.slogdet(eye + corr.matrix @ r_x / sigma2)
                val += weight * logdet.real / m
        return val

    def objective(r_x):
        return -mi_value(r_x)

    def gradient(r_x):
        grad = np.zeros((m, m), dtype=complex)
        for weight, corr in ((omega1, r_h), (omega2, r_g)):
            if weight > 0.0:
                inner = np.linalg.solve(eye + corr.matrix @ r_x / sigma2, corr.matrix)
                grad -= (weight / (m * sigma2)) * inner
        return hermitize(grad)

    start = (p_ce / m) * np.eye(m, dtype=complex)
    result = pgd_minimize(
        objective, gradient, lambda r: psd_project(r, p_ce), start, settings
    )
    r_x = hermitize(result.x)
    return TrainingDesign(
        r_x=r_x,
        signal=recover_training(r_x, l_ce),
        objective=-result.objective,
        method="pgd-mi",
    )
