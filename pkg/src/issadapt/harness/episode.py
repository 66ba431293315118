"""Closed-loop episode simulation and the tracking cost."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..controller import ControllerConfig, ManipulatorLaw
from ..plant import NumericalFailure, PlantState, gravity_terms, rk4_step
from ..trajectory import eval_ref_grid, quintic_coefficients
from .config import ExperimentConfig


@dataclass
class EpisodeResult:
    """Per-step samples of one episode and its cost.

    ``vdot`` is the analytic Lyapunov rate evaluated with the true ``E`` and
    is a simulation-only diagnostic. A failed episode has ``J = inf`` and
    arrays truncated at the failure.
    """

    t: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    qd: np.ndarray
    dqd: np.ndarray
    tau: np.ndarray
    z: np.ndarray
    V: np.ndarray
    vdot: np.ndarray
    J: float
    delta_hat: np.ndarray
    failed: bool = False
    message: str = ""

    @property
    def z_norm(self) -> np.ndarray:
        return np.linalg.norm(self.z, axis=1)


def expand_estimate(learned_values, cfg: ExperimentConfig) -> np.ndarray:
    """Full row-major estimate from the learned entries and configured fixed ones."""
    full = np.array(cfg.controller.initial_estimate, dtype=float)
    full[cfg.controller.mask()] = np.asarray(learned_values, dtype=float)
    return full


def run_episode(delta_hat, cfg: ExperimentConfig, duration: float | None = None) -> EpisodeResult:
    """Simulate the closed loop with the estimate ``delta_hat`` held fixed.

    ``delta_hat`` is the full row-major estimate (4 entries). The feedback law
    is evaluated at every Runge-Kutta stage. The cost is a left-rectangle sum
    over the integration grid on ``[0, duration)``.
    """
    pl, ref_cfg = cfg.plant, cfg.reference
    params = pl.params()
    ctl = ControllerConfig.build(cfg.controller.gains(), delta_hat)
    law = ManipulatorLaw(ctl, params)
    ref = quintic_coefficients([ref_cfg.q_init] * 2, [ref_cfg.q_f] * 2, ref_cfg.t_f)
    E = np.asarray(pl.true_E, dtype=float)
    Q1 = np.asarray(cfg.cost.q1_diag, dtype=float)
    Q2 = np.asarray(cfg.cost.q2_diag, dtype=float)
    h = pl.step
    T = ref_cfg.t_f if duration is None else duration
    n_steps = int(math.floor(T / h + 1e-9))
    rows = n_steps + 1
    limit = pl.torque_limit

    # reference on the half-step grid covers every Runge-Kutta stage time
    half = np.arange(2 * n_steps + 1) * (0.5 * h)
    r_q, r_dq, r_ddq = (a.tolist() for a in eval_ref_grid(ref, half))

    def torque_at(q1, q2, dq1, dq2, t):
        i = int(round(t / (0.5 * h)))
        tau = law(q1, q2, dq1, dq2, r_q[i], r_dq[i], r_ddq[i])
        if limit > 0:
            return (min(max(tau[0], -limit), limit), min(max(tau[1], -limit), limit))
        return tau

    t = np.arange(rows) * h
    q = np.zeros((rows, 2))
    dq = np.zeros((rows, 2))
    tau = np.zeros((rows, 2))
    off = pl.initial_offset
    state = PlantState.at_rest((ref_cfg.q_init + off[0], ref_cfg.q_init + off[1]))
    failed, message, filled = False, "", rows
    for k in range(rows):
        q[k], dq[k] = state.q, state.dq
        try:
            tau[k] = torque_at(state.q[0], state.q[1], state.dq[0], state.dq[1], t[k])
            if k == rows - 1:
                break
            state = rk4_step(state, torque_at, E, params, h, bound=pl.blowup)
            state = PlantState(state.q, state.dq, t[k + 1])
        except NumericalFailure as exc:
            failed, message, filled = True, str(exc), k + 1
            break

    sl = slice(0, filled)
    t, q, dq, tau = t[sl], q[sl], dq[sl], tau[sl]
    qd = np.asarray(r_q)[0::2][sl]
    dqd = np.asarray(r_dq)[0::2][sl]
    e, de = q - qd, dq - dqd
    z = np.column_stack([e[:, 0], de[:, 0], e[:, 1], de[:, 1]])
    es = ctl.error_system
    V = np.einsum("ij,jk,ik->i", z, es.P, z)
    vdot = _lyapunov_rates(z, q, E, ctl, params)
    if failed:
        J = math.inf
    else:
        w = e[:-1] ** 2 @ Q1 + de[:-1] ** 2 @ Q2
        J = float(np.sum(w) * h)
    return EpisodeResult(t, q, dq, qd, dqd, tau, z, V, vdot, J,
                         np.asarray(delta_hat, dtype=float).copy(), failed, message)


def _lyapunov_rates(z, q, E, ctl: ControllerConfig, params) -> np.ndarray:
    """Analytic ``dV/dt`` at every sample, using the true uncertainty."""
    G = np.array([gravity_terms(a, b, params) for a, b in q]).reshape(-1, 2)
    Qs = -G
    es = ctl.error_system
    e_E = E.reshape(2, 2) - ctl.E_hat
    s = z @ (es.P @ es.B)
    delta = -s * np.sum(Qs**2, axis=1, keepdims=True) + Qs @ e_E.T
    return -np.sum(z**2, axis=1) + 2.0 * np.sum(s * delta, axis=1)
