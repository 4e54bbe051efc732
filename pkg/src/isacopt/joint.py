"""Statistical-CSI joint training and transmission design.

Two routes to the same weighted long-term objective:

* an alternating optimization that descends the smooth objective in the
  training Gram by projected gradient and in the beamformer by the MM
  machinery (with the channel estimate replaced by the statistical
  equivalent sqrt(n_com) R_hhat^{1/2}), and
* for correlations sharing an eigenbasis, a power-allocation reformulation
  in the log domain solved by successive convex approximation, each round a
  small barrier-Newton program.

The oriented baselines (pure communication, pure sensing) live here too.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .beamforming import (
    MMTrace,
    default_beamformer_start,
    mm_beamformer,
)
from .metrics import (
    MetricReport,
    mi_ce,
    mi_com_avg,
    mi_rad,
    mse_ce,
    mse_com_avg,
    mse_rad,
)
from .model import Beamformer, CorrelationMatrix, SystemConfig, TrainingSignal
from .numerics import (
    ExpAffineSum,
    NumericalFailure,
    SolverSettings,
    barrier_newton,
    hermitize,
    pgd_minimize,
    psd_project,
    spd_inverse,
)
from .results import DesignResult
from .training import (
    TrainingDesign,
    design_training,
    recover_training,
    require_aligned,
)

__all__ = [
    "AOTrace",
    "PowerAllocationState",
    "communication_oriented",
    "joint_design_ao",
    "joint_design_gp",
    "joint_objective",
    "sensing_oriented",
    "solve_training_subproblem",
    "structured_joint_objective",
]


@dataclass(frozen=True, eq=False)
class AOTrace:
    """Outer-loop trajectory of the alternating joint design."""

    iterates: list[tuple[np.ndarray, np.ndarray, float]]
    converged: bool

    @property
    def objectives(self) -> list[float]:
        return [obj for _, _, obj in self.iterates]


@dataclass(frozen=True, eq=False)
class PowerAllocationState:
    """Final allocation of the structured joint design.

    Log-domain images carry the same content; auxiliary entries equal their
    defining expressions at the returned (x, w).
    """

    x: np.ndarray
    w: np.ndarray
    xi: np.ndarray
    t: float
    kappa_com: np.ndarray
    kappa_rad: np.ndarray


def joint_objective(
    gram_x: np.ndarray,
    w: np.ndarray,
    r_h_inv: np.ndarray,
    r_h: np.ndarray,
    r_g_inv: np.ndarray,
    sigma2: float,
    l_dt: int,
    n_com: int,
    omega1: float,
) -> float:
    """Weighted sum of the average data MSE and the sensing MSE.

    Takes pre-inverted correlations so solver loops avoid refactorizations.
    """
    m = gram_x.shape[0]
    d = w.shape[1]
    omega2 = 1.0 - omega1
    val = 0.0
    if omega1 > 0.0:
        r_delta = np.linalg.inv(r_h_inv + gram_x / sigma2)
        r_delta = 0.5 * (r_delta + r_delta.conj().T)
        r_hhat = hermitize(r_h - r_delta)
        kappa = float(np.trace(w @ w.conj().T @ r_delta).real) + sigma2
        core = hermitize(np.eye(d) + n_com * (w.conj().T @ r_hhat @ w) / kappa)
        val += omega1 * float(np.trace(np.linalg.inv(core)).real) / d
    if omega2 > 0.0:
        b = hermitize(r_g_inv + gram_x / sigma2 + (l_dt / sigma2) * (w @ w.conj().T))
        val += omega2 * float(np.trace(np.linalg.inv(b)).real) / m
    return val


def solve_training_subproblem(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    w: np.ndarray,
    cfg: SystemConfig,
    start: np.ndarray | None = None,
    settings: SolverSettings | None = None,
) -> TrainingDesign:
    """Training-Gram update of the joint design for a fixed beamformer.

    Descends the smooth composite objective directly in R_X over the PSD
    cone with the training power budget, using the exact chain-rule
    gradient through the error covariance.
    """
    m = cfg.m
    sigma2 = cfg.sigma2
    omega1, omega2 = cfg.omega1, cfg.omega2
    n_com = cfg.n_com
    l_dt = cfg.l_dt
    r_h_inv = r_h.inverse()
    r_g_inv = r_g.inverse()
    ww = hermitize(w @ w.conj().T)
    d = w.shape[1]

    if omega1 == 0.0:
        # Sensing only: exact water-fill over the fixed-data level matrix.
        # The data-boosted directions make this subproblem numerically stiff
        # for projected gradient, while the closed form is immediate.
        return _sensing_waterfill_training(r_g_inv, ww, cfg)

    def objective(r_x):
        return joint_objective(
            r_x, w, r_h_inv, r_h.matrix, r_g_inv, sigma2, l_dt, n_com, omega1
        )

    def gradient(r_x):
        grad = np.zeros((m, m), dtype=complex)
        if omega1 > 0.0:
            a_inv = np.linalg.inv(r_h_inv + r_x / sigma2)
            a_inv = 0.5 * (a_inv + a_inv.conj().T)
            r_hhat = hermitize(r_h.matrix - a_inv)
            kappa = float(np.trace(ww @ a_inv).real) + sigma2
            core = hermitize(np.eye(d) + n_com * (w.conj().T @ r_hhat @ w) / kappa)
            e = np.linalg.inv(core)
            e2 = e @ e
            aw = a_inv @ w
            tr_term = float(np.trace(e2 @ (w.conj().T @ r_hhat @ w)).real)
            grad_com = -(n_com / (kappa**2 * sigma2)) * tr_term * (aw @ aw.conj().T)
            grad_com -= (n_com / (kappa * sigma2)) * (aw @ e2 @ aw.conj().T)
            grad += (omega1 / d) * grad_com
        if omega2 > 0.0:
            b_inv = np.linalg.inv(r_g_inv + r_x / sigma2 + (l_dt / sigma2) * ww)
            grad -= (omega2 / (m * sigma2)) * (b_inv @ b_inv.conj().T)
        return hermitize(grad)

    if start is None:
        start = (cfg.p_ce / m) * np.eye(m, dtype=complex)
    result = pgd_minimize(
        objective, gradient, lambda r: psd_project(r, cfg.p_ce), start, settings
    )
    r_x = hermitize(result.x)
    return TrainingDesign(
        r_x=r_x,
        signal=recover_training(r_x, cfg.l_ce),
        objective=result.objective,
        method="pgd-joint",
    )


def _sensing_waterfill_training(r_g_inv: np.ndarray, ww: np.ndarray, cfg: SystemConfig) -> TrainingDesign:
    from .numerics import bisect, evd

    dec = evd(hermitize(r_g_inv + (cfg.l_dt / cfg.sigma2) * ww))
    levels = dec.eigenvalues.real

    def spilled(level):
        return float(np.clip(cfg.sigma2 * (level - levels), 0.0, None).sum())

    hi = levels.max() + cfg.p_ce / cfg.sigma2
    nu = bisect(spilled, levels.min(), hi, tol=1e-12 * max(1.0, cfg.p_ce), target=cfg.p_ce)
    x = np.clip(cfg.sigma2 * (nu - levels), 0.0, None)
    r_x = hermitize((dec.basis * x) @ dec.basis.conj().T)
    objective = float(np.sum(1.0 / (levels + x / cfg.sigma2))) / cfg.m
    return TrainingDesign(
        r_x=r_x,
        signal=recover_training(r_x, cfg.l_ce),
        objective=objective,
        method="waterfill-joint",
    )


def _statistical_report(
    training: TrainingSignal,
    w: np.ndarray,
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
) -> MetricReport:
    r_delta = spd_inverse(r_h.inverse() + training.gram / cfg.sigma2)
    r_hhat = hermitize(r_h.matrix - r_delta)
    return MetricReport(
        mse_ce=mse_ce(r_h, training.x, cfg.sigma2) / cfg.m,
        mse_com_avg=mse_com_avg(r_hhat, w, r_delta, cfg.sigma2, cfg.n_com),
        mse_rad_approx=mse_rad(r_g, training.gram, w, cfg.l_dt, cfg.sigma2),
        mi_ce=mi_ce(r_h, training.gram, cfg.sigma2),
        mi_com_avg=mi_com_avg(r_hhat, w, r_delta, cfg.sigma2, cfg.n_com),
        mi_rad=mi_rad(r_g, training.gram, w, cfg.l_dt, cfg.sigma2),
    )


def joint_design_ao(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    w0: np.ndarray | None = None,
    settings: SolverSettings | None = None,
    scheme: str = "joint",
) -> tuple[DesignResult, AOTrace]:
    """Alternating joint design from channel statistics only.

    Each outer round updates the training Gram by projected gradient and the
    beamformer by MM against the statistical channel equivalent
    sqrt(n_com) R_hhat^{1/2}; both steps warm-start from the incumbent, so
    the objective is nonincreasing across rounds.
    """
    s = settings or SolverSettings()
    r_h_inv = r_h.inverse()
    r_g_inv = r_g.inverse()

    r_x = (cfg.p_ce / cfg.m) * np.eye(cfg.m, dtype=complex)
    if w0 is None:
        r_delta = spd_inverse(r_h_inv + r_x / cfg.sigma2)
        h_tilde = np.sqrt(cfg.n_com) * _psd_half(r_h.matrix - r_delta)
        w0 = default_beamformer_start(h_tilde, cfg.d, cfg.p_dt)
    w = w0

    def objective(r_x, w):
        return joint_objective(
            r_x, w, r_h_inv, r_h.matrix, r_g_inv, cfg.sigma2, cfg.l_dt, cfg.n_com, cfg.omega1
        )

    iterates: list[tuple[np.ndarray, np.ndarray, float]] = []
    obj = objective(r_x, w)
    iterates.append((r_x.copy(), w.copy(), obj))
    clock = time.perf_counter()
    seconds = [0.0]
    converged = False
    training = None
    mm_trace = None
    for _ in range(s.ao_max_iter):
        training = solve_training_subproblem(r_h, r_g, w, cfg, start=r_x, settings=s)
        r_x = training.r_x
        if cfg.omega1 > 0.0:
            r_delta = spd_inverse(r_h_inv + r_x / cfg.sigma2)
            h_tilde = np.sqrt(cfg.n_com) * _psd_half(r_h.matrix - r_delta)
        else:
            r_delta = spd_inverse(r_h_inv + r_x / cfg.sigma2)
            h_tilde = np.zeros((cfg.m, cfg.m), dtype=complex)
        beam, mm_trace = mm_beamformer(
            h_tilde,
            r_delta,
            training.signal.gram,
            r_g,
            cfg.sigma2,
            cfg.l_dt,
            cfg.p_dt,
            cfg.omega1,
            cfg.d,
            w0=w,
            settings=s,
        )
        w = beam.w
        new_obj = objective(r_x, w)
        iterates.append((r_x.copy(), w.copy(), new_obj))
        seconds.append(time.perf_counter() - clock)
        if abs(obj - new_obj) < s.ao_obj_tol * max(1.0, abs(obj)):
            obj = new_obj
            converged = True
            break
        obj = new_obj

    signal = training.signal if training is not None else recover_training(r_x, cfg.l_ce)
    result = DesignResult(
        scheme=scheme,
        x=signal.x,
        w=w,
        objective=obj,
        analytic=_statistical_report(signal, w, r_h, r_g, cfg),
        objective_trace=[o for _, _, o in iterates],
        trace_seconds=seconds,
        converged=converged,
    )
    return result, AOTrace(iterates=iterates, converged=converged)


def _psd_half(a: np.ndarray) -> np.ndarray:
    from .numerics import psd_sqrt

    return psd_sqrt(a)


# ---------------------------------------------------------------------------
# Structured power-allocation route (shared eigenbasis)
# ---------------------------------------------------------------------------


def structured_joint_objective(
    x: np.ndarray,
    w: np.ndarray,
    lam_h: np.ndarray,
    lam_g: np.ndarray,
    sigma2: float,
    l_dt: int,
    n_com: int,
    omega1: float,
) -> float:
    """Joint objective for eigen-aligned designs as a function of powers.

    ``x`` has one entry per eigendirection; ``w`` covers the first d
    directions, which carry the data streams.
    """
    m = x.size
    d = w.size
    omega2 = 1.0 - omega1
    val = 0.0
    if omega1 > 0.0:
        denom = float(
            np.sum(lam_h[:d] * sigma2 * w / (lam_h[:d] * x[:d] + sigma2)) + sigma2
        )
        snr = n_com * lam_h[:d] ** 2 * w * x[:d] / ((lam_h[:d] * x[:d] + sigma2) * denom)
        val += omega1 * float(np.sum(1.0 / (1.0 + snr))) / d
    if omega2 > 0.0:
        levels = 1.0 / lam_g + x / sigma2
        levels[:d] = levels[:d] + (l_dt / sigma2) * w
        val += omega2 * float(np.sum(1.0 / levels)) / m
    return val


class _GpLayout:
    """Index bookkeeping for the log-domain allocation variables."""

    def __init__(self, m: int, d: int, with_com: bool, with_rad: bool):
        self.with_com = with_com
        self.with_rad = with_rad
        self.n_x = m if with_rad else d
        self.d = d
        self.m = m
        cursor = 0
        self.ix = list(range(cursor, cursor + self.n_x))
        cursor += self.n_x
        self.iw = list(range(cursor, cursor + d))
        cursor += d
        if with_com:
            self.it = cursor
            cursor += 1
            self.ixi = list(range(cursor, cursor + d))
            cursor += d
            self.ikc = list(range(cursor, cursor + d))
            cursor += d
        if with_rad:
            self.ikr = list(range(cursor, cursor + self.n_x))
            cursor += self.n_x
        self.n = cursor


def _linearized(indices: list[int], anchor: float) -> tuple[np.ndarray, float, dict]:
    """Affine lower bound of exp(sum z_i) at the anchor value of the sum."""
    e = float(np.exp(anchor))
    lin = {i: e for i in indices}
    return e, e * (1.0 - anchor), lin


def _gp_constraints(
    layout: _GpLayout,
    lam_h: np.ndarray,
    lam_g: np.ndarray,
    cfg: SystemConfig,
    anchor_x: np.ndarray,
    anchor_w: np.ndarray,
    anchor_t: float,
) -> list[ExpAffineSum]:
    """One SCA round's convexified constraint set at the given anchors."""
    n = layout.n
    d, sigma2, l_dt, n_com = layout.d, cfg.sigma2, cfg.l_dt, cfg.n_com
    cons: list[ExpAffineSum] = []

    cons.append(
        ExpAffineSum.build(
            n,
            terms=[(1.0, {i: 1.0}, 0.0) for i in layout.ix],
            const=-cfg.p_ce,
        )
    )
    cons.append(
        ExpAffineSum.build(
            n,
            terms=[(1.0, {i: 1.0}, 0.0) for i in layout.iw],
            const=-cfg.p_dt,
        )
    )

    def affine(parts):
        lin = np.zeros(n)
        const = 0.0
        for scale, indices, anchor in parts:
            _, c0, lmap = _linearized(indices, anchor)
            const += scale * c0
            for i, v in lmap.items():
                lin[i] += scale * v
        return lin, const

    if layout.with_com:
        for j in range(d):
            lam = lam_h[j]
            lin, const = affine(
                [
                    (sigma2, [layout.it], anchor_t),
                    (lam, [layout.ix[j], layout.it], anchor_x[j] + anchor_t),
                    (
                        n_com * lam**2,
                        [layout.ix[j], layout.iw[j]],
                        anchor_x[j] + anchor_w[j],
                    ),
                ]
            )
            cons.append(
                ExpAffineSum.build(
                    n,
                    terms=[
                        (lam, {layout.ix[j]: 1.0, layout.ikc[j]: 1.0, layout.it: 1.0}, 0.0),
                        (sigma2, {layout.ikc[j]: 1.0, layout.it: 1.0}, 0.0),
                    ],
                    lin=-lin,
                    const=-const,
                )
            )
        for j in range(d):
            lam = lam_h[j]
            lin, const = affine([(lam, [layout.ix[j]], anchor_x[j])])
            cons.append(
                ExpAffineSum.build(
                    n,
                    terms=[(lam * sigma2, {layout.iw[j]: 1.0, layout.ixi[j]: -1.0}, 0.0)],
                    lin=-lin,
                    const=-const - sigma2,
                )
            )
        cons.append(
            ExpAffineSum.build(
                n,
                terms=[(1.0, {i: 1.0, layout.it: -1.0}, 0.0) for i in layout.ixi]
                + [(sigma2, {layout.it: -1.0}, 0.0)],
                const=-1.0,
            )
        )

    if layout.with_rad:
        for j in range(layout.n_x):
            parts = [(1.0 / sigma2, [layout.ix[j]], anchor_x[j])]
            if j < d:
                parts.append((l_dt / sigma2, [layout.iw[j]], anchor_w[j]))
            lin, const = affine(parts)
            cons.append(
                ExpAffineSum.build(
                    n,
                    terms=[(1.0, {layout.ikr[j]: 1.0}, 0.0)],
                    lin=-lin,
                    const=-const - 1.0 / lam_g[j],
                )
            )
    return cons


def _gp_objective(layout: _GpLayout, omega1: float) -> ExpAffineSum:
    omega2 = 1.0 - omega1
    terms = []
    if layout.with_com:
        terms += [(omega1 / layout.d, {i: -1.0}, 0.0) for i in layout.ikc]
    if layout.with_rad:
        terms += [(omega2 / layout.m, {i: -1.0}, 0.0) for i in layout.ikr]
    return ExpAffineSum.build(layout.n, terms=terms)


def _gp_feasible_start(
    layout: _GpLayout,
    constraints: list[ExpAffineSum],
    lam_h: np.ndarray,
    lam_g: np.ndarray,
    cfg: SystemConfig,
    x_prev: np.ndarray,
    w_prev: np.ndarray,
) -> np.ndarray:
    """Strictly feasible start near the previous allocation.

    Powers are pulled slightly inside their budgets; auxiliaries are set from
    their defining expressions with a margin, escalated until every
    linearized constraint holds strictly.
    """
    d, sigma2 = layout.d, cfg.sigma2
    for margin in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        x = np.maximum(x_prev, 1e-12) * (1.0 - margin)
        if x.sum() > cfg.p_ce * (1.0 - 0.5 * margin):
            x *= cfg.p_ce * (1.0 - margin) / x.sum()
        w = np.maximum(w_prev, 1e-12) * (1.0 - margin)
        if w.sum() > cfg.p_dt * (1.0 - 0.5 * margin):
            w *= cfg.p_dt * (1.0 - margin) / w.sum()

        z = np.zeros(layout.n)
        z[layout.ix] = np.log(x[: layout.n_x])
        z[layout.iw] = np.log(w)
        if layout.with_com:
            xi = (1.0 + margin) * lam_h[:d] * sigma2 * w / (lam_h[:d] * x[:d] + sigma2)
            t = (1.0 + margin) * (xi.sum() + sigma2)
            z[layout.ixi] = np.log(xi)
            z[layout.it] = np.log(t)
        # Auxiliary bounds from the already-linearized constraint values.
        if layout.with_com:
            for j in range(d):
                con = constraints[2 + j]
                probe = z.copy()
                probe[layout.ikc[j]] = 0.0
                slack = -(con.lin @ probe + con.const)  # linearized rhs value
                level = (lam_h[j] * x[j] + sigma2) * t
                z[layout.ikc[j]] = np.log(max(slack, 1e-300) / level) + np.log(1.0 - margin)
        if layout.with_rad:
            offset = 2 + (2 * d + 1 if layout.with_com else 0)
            for j in range(layout.n_x):
                con = constraints[offset + j]
                probe = z.copy()
                rhs = -(con.lin @ probe + con.const)
                z[layout.ikr[j]] = np.log(max(rhs, 1e-300)) + np.log(1.0 - margin)
        values = np.array([c.value(z) for c in constraints])
        if np.all(values < -1e-12):
            return z
    raise NumericalFailure("could not construct a strictly feasible start", snapshot=z)


def joint_design_gp(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    settings: SolverSettings | None = None,
) -> tuple[DesignResult, PowerAllocationState]:
    """Structured joint design for correlations sharing an eigenbasis.

    Both signals transmit along the shared eigenvectors (the first d
    directions carry the data streams), reducing the joint design to a power
    allocation.  The allocation problem is lifted to the log domain, its
    coupling constraints convexified by first-order lower bounds on the
    exponentials, and each round's convex program solved by barrier Newton,
    warm-started from the previous allocation.
    """
    s = settings or SolverSettings()
    basis, lam_h, lam_g = require_aligned(r_h, r_g)
    m, d = cfg.m, cfg.d
    with_com = cfg.omega1 > 0.0
    with_rad = cfg.omega1 < 1.0
    layout = _GpLayout(m, d, with_com, with_rad)

    x = np.full(m, cfg.p_ce / m)
    w = np.full(d, cfg.p_dt / d)
    anchor_t = float(
        np.log(np.sum(lam_h[:d] * cfg.sigma2 * w / (lam_h[:d] * x[:d] + cfg.sigma2)) + cfg.sigma2)
    )

    def true_objective(x, w):
        return structured_joint_objective(
            x, w, lam_h, lam_g, cfg.sigma2, cfg.l_dt, cfg.n_com, cfg.omega1
        )

    obj = true_objective(x, w)
    trace = [obj]
    clock = time.perf_counter()
    seconds = [0.0]
    converged = False
    z = None
    for _ in range(s.sca_max_iter):
        anchor_x = np.log(np.maximum(x[: layout.n_x], 1e-300))
        anchor_w = np.log(np.maximum(w, 1e-300))
        constraints = _gp_constraints(layout, lam_h, lam_g, cfg, anchor_x, anchor_w, anchor_t)
        if z is not None:
            chain = np.array([c.value(z) for c in constraints])
            if np.any(chain > 1e-7):
                raise NumericalFailure(
                    f"previous iterate infeasible for the new round (max {chain.max():.3e})",
                    snapshot=z,
                )
        z0 = _gp_feasible_start(layout, constraints, lam_h, lam_g, cfg, x, w)
        warm_t = 1.0 if z is None else 1e4  # warm rounds start deep on the barrier path
        z = barrier_newton(_gp_objective(layout, cfg.omega1), constraints, z0, s, t_start=warm_t)
        x_new = np.zeros(m)
        x_new[: layout.n_x] = np.exp(z[layout.ix])
        w_new = np.exp(z[layout.iw])
        if layout.with_com:
            anchor_t = float(z[layout.it])
        new_obj = true_objective(x_new, w_new)
        x, w = x_new, w_new
        trace.append(new_obj)
        seconds.append(time.perf_counter() - clock)
        if abs(obj - new_obj) < s.sca_obj_tol * max(1.0, abs(obj)):
            obj = new_obj
            converged = True
            break
        obj = new_obj

    xi = lam_h[:d] * cfg.sigma2 * w / (lam_h[:d] * x[:d] + cfg.sigma2)
    t = float(xi.sum() + cfg.sigma2)
    kappa_com = 1.0 + cfg.n_com * lam_h[:d] ** 2 * w * x[:d] / (
        t * (lam_h[:d] * x[:d] + cfg.sigma2)
    )
    kappa_rad = 1.0 / lam_g + x / cfg.sigma2
    kappa_rad[:d] = kappa_rad[:d] + (cfg.l_dt / cfg.sigma2) * w
    state = PowerAllocationState(
        x=x, w=w, xi=xi, t=t, kappa_com=kappa_com, kappa_rad=kappa_rad
    )

    diag_x = np.concatenate([np.diag(np.sqrt(x)), np.zeros((m, cfg.l_ce - m))], axis=1)
    signal = TrainingSignal.from_matrix(basis @ diag_x)
    w_mat = basis[:, :d] @ np.diag(np.sqrt(w)).astype(complex)
    result = DesignResult(
        scheme="joint-gp",
        x=signal.x,
        w=w_mat,
        objective=obj,
        analytic=_statistical_report(signal, w_mat, r_h, r_g, cfg),
        objective_trace=trace,
        trace_seconds=seconds,
        converged=converged,
    )
    return result, state


# ---------------------------------------------------------------------------
# Oriented baselines
# ---------------------------------------------------------------------------


def sensing_oriented(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    settings: SolverSettings | None = None,
) -> DesignResult:
    """Jointly pick training and beamformer to minimize the sensing MSE only.

    Projected gradient over the pair (R_X, W) with independent projections
    onto the two power budgets.
    """
    m, d = cfg.m, cfg.d
    sigma2, l_dt = cfg.sigma2, cfg.l_dt
    r_g_inv = r_g.inverse()

    def objective(pair):
        r_x, w = pair
        b = hermitize(r_g_inv + r_x / sigma2 + (l_dt / sigma2) * (w @ w.conj().T))
        return float(np.trace(np.linalg.inv(b)).real) / m

    def gradient(pair):
        r_x, w = pair
        b_inv = spd_inverse(r_g_inv + r_x / sigma2 + (l_dt / sigma2) * (w @ w.conj().T))
        b2 = b_inv @ b_inv
        return (
            hermitize(-(1.0 / (m * sigma2)) * b2),
            -(2.0 * l_dt / (m * sigma2)) * (b2 @ w),
        )

    def project(pair):
        r_x, w = pair
        power = float(np.sum(np.abs(w) ** 2))
        if power > cfg.p_dt:
            w = w * np.sqrt(cfg.p_dt / power)
        return psd_project(r_x, cfg.p_ce), w

    start_rx = (cfg.p_ce / m) * np.eye(m, dtype=complex)
    start_w = r_g.evd.basis[:, :d] * np.sqrt(cfg.p_dt / d)
    result = pgd_minimize(objective, gradient, project, (start_rx, start_w), settings)
    r_x, w = result.x
    r_x = hermitize(r_x)
    signal = recover_training(r_x, cfg.l_ce)
    return DesignResult(
        scheme="sensing",
        x=signal.x,
        w=w,
        objective=result.objective,
        analytic=_statistical_report(signal, w, r_h, r_g, cfg),
        converged=result.converged,
    )


def communication_oriented(
    r_h: CorrelationMatrix,
    r_g: CorrelationMatrix,
    cfg: SystemConfig,
    mode: str,
    h_hat: np.ndarray | None = None,
    r_delta: np.ndarray | None = None,
    training: TrainingDesign | None = None,
    settings: SolverSettings | None = None,
) -> DesignResult:
    """Run the chosen scheme with the sensing weight removed.

    ``mode='joint'`` needs statistics only.  ``mode='sequential'`` designs
    the beamformer for one channel-estimate realization, so the estimate
    (h_hat, r_delta) must be supplied; Monte Carlo averaging over
    realizations belongs to the experiment harness.
    """
    cfg1 = replace(cfg, omega1=1.0)
    if mode == "joint":
        result, _ = joint_design_ao(r_h, r_g, cfg1, settings=settings, scheme="communication-joint")
        return result
    if mode != "sequential":
        raise ValueError(f"unknown mode {mode!r}; expected 'sequential' or 'joint'")
    if h_hat is None or r_delta is None:
        raise ValueError("sequential mode needs the realization's channel estimate")
    if training is None:
        training = design_training(
            r_h, r_g, cfg1.sigma2, cfg1.p_ce, 1.0, cfg1.l_ce, settings
        )
    from .beamforming import realized_design_result

    beam, trace = mm_beamformer(
        h_hat,
        r_delta,
        training.signal.gram,
        r_g,
        cfg1.sigma2,
        cfg1.l_dt,
        cfg1.p_dt,
        1.0,
        cfg1.d,
        settings=settings,
    )
    result = realized_design_result(
        "communication", h_hat, r_delta, training.signal, r_h, r_g, beam, trace, cfg1
    )
    return result
