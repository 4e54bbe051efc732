"""Closed-form MSE and mutual-information evaluators for the ISAC link.

Conventions: communication metrics are normalized by the stream count d,
channel-estimation and sensing metrics by the transmit antenna count m.
Mutual information is in nats.  Traces of inverses go through Cholesky
solves; explicit inverses appear only where the inverse matrix itself is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CorrelationMatrix
from .numerics import hermitize, logdet_spd, trace_inverse

__all__ = [
    "MetricReport",
    "mi_ce",
    "mi_com",
    "mi_com_avg",
    "mi_rad",
    "mmse_receiver",
    "mse_ce",
    "mse_com",
    "mse_com_avg",
    "mse_rad",
    "receiver_mse",
]


@dataclass(frozen=True)
class MetricReport:
    """Normalized performance metrics; fields are None when not applicable."""

    mse_ce: float | None = None
    mse_com: float | None = None
    mse_com_avg: float | None = None
    mse_rad_exact: float | None = None
    mse_rad_approx: float | None = None
    mi_ce: float | None = None
    mi_com: float | None = None
    mi_com_avg: float | None = None
    mi_rad: float | None = None


def _gram(x: np.ndarray) -> np.ndarray:
    return hermitize(x @ x.conj().T)


def mse_ce(r_h: CorrelationMatrix, x: np.ndarray, sigma2: float) -> float:
    """Channel estimation MSE Tr{(r_h^{-1} + X X^H / sigma2)^{-1}} (unnormalized)."""
    return trace_inverse(r_h.inverse() + _gram(x) / sigma2)


def _interference_level(w: np.ndarray, r_delta: np.ndarray, sigma2: float) -> float:
    return float(np.trace(w @ w.conj().T @ r_delta).real) + sigma2


def mmse_receiver(
    h_hat: np.ndarray, w: np.ndarray, r_delta: np.ndarray, sigma2: float
) -> np.ndarray:
    """Optimal linear receiver for imperfect CSI.

    V = (H_hat W W^H H_hat^H + (Tr{W W^H r_delta} + sigma2) I)^{-1} H_hat W.
    """
    n_com = h_hat.shape[0]
    hw = h_hat @ w
    cov = hermitize(hw @ hw.conj().T) + _interference_level(w, r_delta, sigma2) * np.eye(n_com)
    return np.linalg.solve(cov, hw)


def receiver_mse(
    h_hat: np.ndarray,
    w: np.ndarray,
    r_delta: np.ndarray,
    sigma2: float,
    v: np.ndarray,
) -> float:
    """Per-block symbol MSE of an arbitrary linear receiver ``v`` (unnormalized).

    Expectation over symbols, noise, and the channel estimation error:
    Tr{V^H (H_hat W W^H H_hat^H + (Tr{W W^H r_delta} + sigma2) I) V}
    - 2 Re Tr{V^H H_hat W} + d.
    """
    d = w.shape[1]
    n_com = h_hat.shape[0]
    hw = h_hat @ w
    cov = hermitize(hw @ hw.conj().T) + _interference_level(w, r_delta, sigma2) * np.eye(n_com)
    quad = np.trace(v.conj().T @ cov @ v).real
    cross = np.trace(v.conj().T @ hw).real
    return float(quad - 2.0 * cross + d)


def _com_core(h_hat: np.ndarray, w: np.ndarray, kappa: float) -> np.ndarray:
    hw = h_hat @ w
    d = w.shape[1]
    return hermitize(np.eye(d) + (hw.conj().T @ hw) / kappa)


def mse_com(h_hat: np.ndarray, w: np.ndarray, r_delta: np.ndarray, sigma2: float) -> float:
    """Data-transmission MSE at the optimal receiver, normalized by d.

    Tr{(I_d + W^H H_hat^H H_hat W / (Tr{W W^H r_delta} + sigma2))^{-1}} / d.
    """
    d = w.shape[1]
    kappa = _interference_level(w, r_delta, sigma2)
    return trace_inverse(_com_core(h_hat, w, kappa)) / d


def mse_com_avg(
    r_hhat: np.ndarray,
    w: np.ndarray,
    r_delta: np.ndarray,
    sigma2: float,
    n_com: int,
) -> float:
    """Long-term average data MSE (Jensen lower bound on the estimate draw).

    Tr{(I_d + n_com W^H r_hhat W / (Tr{W W^H r_delta} + sigma2))^{-1}} / d.
    """
    d = w.shape[1]
    kappa = _interference_level(w, r_delta, sigma2)
    core = hermitize(np.eye(d) + n_com * (w.conj().T @ r_hhat @ w) / kappa)
    return trace_inverse(core) / d


def mse_rad(
    r_g: CorrelationMatrix,
    gram_x: np.ndarray,
    w: np.ndarray,
    l_dt: int,
    sigma2: float,
    symbols: np.ndarray | None = None,
) -> float:
    """Target-response estimation MSE, normalized by m.

    With ``symbols`` given the exact data Gram W S S^H W^H enters; otherwise
    the large-block approximation S S^H ~= l_dt I is used.
    """
    m = gram_x.shape[0]
    if symbols is None:
        data_gram = l_dt * (w @ w.conj().T)
    else:
        ws = w @ symbols
        data_gram = ws @ ws.conj().T
    core = r_g.inverse() + (gram_x + hermitize(data_gram)) / sigma2
    return trace_inverse(core) / m


def mi_ce(r_h: CorrelationMatrix, gram_x: np.ndarray, sigma2: float) -> float:
    """Training-stage MI log det(I + r_h X X^H / sigma2) / m, in nats."""
    m = gram_x.shape[0]
    half = r_h.sqrt()
    return logdet_spd(np.eye(m) + half @ gram_x @ half / sigma2) / m


def mi_com(h_hat: np.ndarray, w: np.ndarray, r_delta: np.ndarray, sigma2: float) -> float:
    """Data-transmission MI under the estimation-error noise floor, per stream."""
    d = w.shape[1]
    kappa = _interference_level(w, r_delta, sigma2)
    return logdet_spd(_com_core(h_hat, w, kappa)) / d


def mi_com_avg(
    r_hhat: np.ndarray,
    w: np.ndarray,
    r_delta: np.ndarray,
    sigma2: float,
    n_com: int,
) -> float:
    """Statistical-CSI data MI bound, per stream."""
    d = w.shape[1]
    kappa = _interference_level(w, r_delta, sigma2)
    core = hermitize(np.eye(d) + n_com * (w.conj().T @ r_hhat @ w) / kappa)
    return logdet_spd(core) / d


def mi_rad(
    r_g: CorrelationMatrix,
    gram_x: np.ndarray,
    w: np.ndarray,
    l_dt: int,
    sigma2: float,
) -> float:
    """Sensing MI log det(I + r_g (X X^H + l_dt W W^H) / sigma2) / m."""
    m = gram_x.shape[0]
    half = r_g.sqrt()
    energy = gram_x + l_dt * hermitize(w @ w.conj().T)
    return logdet_spd(np.eye(m) + half @ energy @ half / sigma2) / m
