"""System configuration, channel statistics, synthesis, and LMMSE estimators.

Channels follow the block-fading matrix model: a communication link H of
shape (n_com, m) and a target response matrix G of shape (n_rad, m), both
row-i.i.d. with transmit-side correlation r_h, r_g.  All randomness flows
through explicit counter-based generators so Monte Carlo runs are
reproducible and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import (
    EigenDecomposition,
    SingularMatrixError,
    evd,
    hermitize,
    spd_inverse,
)

__all__ = [
    "Beamformer",
    "ChannelEstimate",
    "ChannelRealization",
    "CorrelationMatrix",
    "SystemConfig",
    "TrainingSignal",
    "complex_gaussian",
    "exponential_correlation",
    "lmmse_channel_estimate",
    "lmmse_trm_estimate",
    "qpsk_symbols",
    "synthesize_channel",
    "trial_rng",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters for one link configuration.

    Powers and noise are linear units.  ``omega1`` weights the communication
    objective, ``omega2 = 1 - omega1`` the sensing objective.
    """

    m: int = 8
    n_com: int = 4
    n_rad: int = 8
    d: int = 4
    l_ce: int = 8
    l_dt: int = 32
    sigma2: float = 1.0
    p_ce: float = 10.0
    p_dt: float = 10.0
    omega1: float = 0.5

    def __post_init__(self):
        if self.l_ce < self.m:
            raise ValueError(f"l_ce ({self.l_ce}) must be at least m ({self.m})")
        if self.d > min(self.m, self.n_com):
            raise ValueError(f"d ({self.d}) must not exceed min(m, n_com)")
        if not 0.0 <= self.omega1 <= 1.0:
            raise ValueError("omega1 must lie in [0, 1]")
        for name in ("sigma2", "p_ce", "p_dt"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("m", "n_com", "n_rad", "d", "l_ce", "l_dt"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def l_total(self) -> int:
        return self.l_ce + self.l_dt

    @property
    def omega2(self) -> float:
        return 1.0 - self.omega1

    def with_omega1(self, omega1: float) -> "SystemConfig":
        return replace(self, omega1=omega1)


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Hermitian PSD transmit correlation with a cached eigendecomposition."""

    matrix: np.ndarray
    evd: EigenDecomposition

    @staticmethod
    def from_matrix(matrix: np.ndarray) -> "CorrelationMatrix":
        m = hermitize(matrix)
        dec = evd(m)
        if dec.eigenvalues[-1] < -1e-10:
            raise ValueError(
                f"correlation matrix is not PSD (min eigenvalue {dec.eigenvalues[-1]:.3e})"
            )
        return CorrelationMatrix(matrix=m, evd=dec)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.evd.eigenvalues[-1])

    def inverse(self) -> np.ndarray:
        if self.min_eigenvalue <= 1e-10:
            raise SingularMatrixError(
                f"correlation matrix not invertible (min eigenvalue {self.min_eigenvalue:.3e})"
            )
        return spd_inverse(self.matrix)

    def sqrt(self) -> np.ndarray:
        w = np.sqrt(np.clip(self.evd.eigenvalues, 0.0, None))
        return hermitize((self.evd.basis * w) @ self.evd.basis.conj().T)


def exponential_correlation(dim: int, rho: float) -> CorrelationMatrix:
    """Exponential correlation model: entry (i, j) = rho^|i-j|."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    idx = np.arange(dim)
    matrix = rho ** np.abs(idx[:, None] - idx[None, :])
    return CorrelationMatrix.from_matrix(matrix.astype(complex))


def identity_correlation(dim: int) -> CorrelationMatrix:
    return CorrelationMatrix.from_matrix(np.eye(dim, dtype=complex))


@dataclass(frozen=True, eq=False)
class TrainingSignal:
    """Training matrix X (m x l_ce) with its cached Gram XX^H."""

    x: np.ndarray
    gram: np.ndarray

    @staticmethod
    def from_matrix(x: np.ndarray, power_budget: float | None = None) -> "TrainingSignal":
        x = np.asarray(x, dtype=complex)
        gram = hermitize(x @ x.conj().T)
        if power_budget is not None:
            power = float(np.trace(gram).real)
            if power > power_budget * (1.0 + 1e-9):
                raise ValueError(
                    f"training power {power:.6g} exceeds budget {power_budget:.6g}"
                )
        return TrainingSignal(x=x, gram=gram)

    @property
    def power(self) -> float:
        return float(np.trace(self.gram).real)


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Transmit beamforming matrix W (m x d) under a total power budget."""

    w: np.ndarray

    @staticmethod
    def from_matrix(w: np.ndarray, power_budget: float | None = None) -> "Beamformer":
        w = np.asarray(w, dtype=complex)
        if power_budget is not None:
            power = float(np.sum(np.abs(w) ** 2))
            if power > power_budget * (1.0 + 1e-9):
                raise ValueError(
                    f"beamformer power {power:.6g} exceeds budget {power_budget:.6g}"
                )
        return Beamformer(w=w)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    """LMMSE channel estimate with its error and estimate covariances.

    The triple is internally consistent: r_delta is the error covariance for
    the training signal actually used, and r_hhat = r_h - r_delta.
    """

    h_hat: np.ndarray
    r_delta: np.ndarray
    r_hhat: np.ndarray


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One Monte Carlo draw of the pair (H, G), reproducible from its seed."""

    h: np.ndarray
    g: np.ndarray
    seed: int


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator keyed by (master seed, trial index).

    Adding trials never perturbs earlier trials, and trials may be drawn in
    any order (or in parallel) with identical results.
    """
    key = np.array([master_seed & _MASK64, trial & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex Gaussian entries, zero mean, unit variance.

    Box-Muller on uniform pairs: variance 1/2 per real/imaginary part.
    """
    u1 = rng.random(shape)
    u2 = rng.random(shape)
    radius = np.sqrt(-np.log1p(-u1))
    return radius * np.exp(2j * np.pi * u2)


def synthesize_channel(r: CorrelationMatrix, rows: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a rows x dim channel Z R^{1/2} with transmit correlation ``r``."""
    z = complex_gaussian(rng, (rows, r.dim))
    return z @ r.sqrt()


def qpsk_symbols(d: int, l_dt: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. unit-modulus QPSK symbols (+-1 +-1j)/sqrt(2), E{s s^H} = I."""
    re = 2 * rng.integers(0, 2, size=(d, l_dt)) - 1
    im = 2 * rng.integers(0, 2, size=(d, l_dt)) - 1
    return (re + 1j * im) / np.sqrt(2.0)


def error_covariance(r_h: CorrelationMatrix, gram_x: np.ndarray, sigma2: float) -> np.ndarray:
    """Estimation-error covariance (r_h^{-1} + XX^H / sigma2)^{-1}."""
    return spd_inverse(r_h.inverse() + gram_x / sigma2)


def lmmse_channel_estimate(
    y: np.ndarray,
    x: TrainingSignal | np.ndarray,
    r_h: CorrelationMatrix,
    sigma2: float,
) -> ChannelEstimate:
    """LMMSE estimate of H from training observations Y = H X + Z.

    H_hat = Y (X^H r_h X + sigma2 I)^{-1} X^H r_h, with the error covariance
    r_delta = (r_h^{-1} + X X^H / sigma2)^{-1} and r_hhat = r_h - r_delta.
    """
    xs = x if isinstance(x, TrainingSignal) else TrainingSignal.from_matrix(x)
    xm = xs.x
    l_ce = xm.shape[1]
    if y.shape[1] != l_ce:
        raise ValueError(f"Y has {y.shape[1]} columns, training has {l_ce}")
    inner = hermitize(xm.conj().T @ r_h.matrix @ xm + sigma2 * np.eye(l_ce))
    try:
        h_hat = y @ np.linalg.solve(inner, xm.conj().T @ r_h.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"training Gram system is singular: {exc}") from exc
    r_delta = error_covariance(r_h, xs.gram, sigma2)
    r_hhat = hermitize(r_h.matrix - r_delta)
    return ChannelEstimate(h_hat=h_hat, r_delta=r_delta, r_hhat=r_hhat)


def lmmse_trm_estimate(
    y_rad: np.ndarray,
    p: np.ndarray,
    r_g: CorrelationMatrix,
    sigma2: float,
) -> np.ndarray:
    """LMMSE estimate of the target response matrix from its echoes.

    Same estimator form as the channel case, applied to the full-block
    signal P = [X, W S]: G_hat = Y (P^H r_g P + sigma2 I)^{-1} P^H r_g.
    """
    l_total = p.shape[1]
    if y_rad.shape[1] != l_total:
        raise ValueError(f"echo block has {y_rad.shape[1]} columns, signal has {l_total}")
    inner = hermitize(p.conj().T @ r_g.matrix @ p + sigma2 * np.eye(l_total))
    try:
        return y_rad @ np.linalg.solve(inner, p.conj().T @ r_g.matrix)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"echo Gram system is singular: {exc}") from exc
