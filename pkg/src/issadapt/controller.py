"""Feedback-linearizing tracking control with a Lyapunov-reconstruction robust term.

Works for any :class:`~issadapt.plant.LinearizedPlant`. The robust term
makes the tracking error input-to-state stable with respect to the error in
the estimated uncertainty matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import ErrorSystem, GainSet, build_error_system
from .plant import (COND_LIMIT, LinearizedPlant, ManipulatorParams, NumericalFailure,
                    gravity_terms, mass_terms)


@dataclass(frozen=True)
class ControllerConfig:
    """Gains, the matching error system and the flattened estimate ``E_hat``."""

    gains: GainSet
    error_system: ErrorSystem
    delta_hat: np.ndarray

    def __post_init__(self):
        d = np.array(self.delta_hat, dtype=float).ravel()
        m = self.gains.m
        if d.size != m * m:
            raise ValueError(f"estimate needs {m * m} entries, got {d.size}")
        if not np.all(np.isfinite(d)):
            raise ValueError("estimate must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "delta_hat", d)

    @classmethod
    def build(cls, gains: GainSet, delta_hat=None) -> "ControllerConfig":
        m = gains.m
        if delta_hat is None:
            delta_hat = np.zeros(m * m)
        return cls(gains, build_error_system(gains), delta_hat)

    @property
    def E_hat(self) -> np.ndarray:
        m = self.gains.m
        return self.delta_hat.reshape(m, m)


def virtual_input(ref_derivs: Sequence[Sequence[float]],
                  output_derivs: Sequence[Sequence[float]],
                  gains: GainSet) -> np.ndarray:
    """Linear tracking law in the linearized coordinates.

    ``ref_derivs[i]`` holds ``(y_d, y_d', ..., y_d^(r_i))`` and
    ``output_derivs[i]`` holds ``(y, y', ..., y^(r_i - 1))`` for output ``i``.
    """
    v = np.empty(gains.m)
    for i, K in enumerate(gains.rows):
        yd = np.asarray(ref_derivs[i], dtype=float)
        y = np.asarray(output_derivs[i], dtype=float)
        r = len(K)
        if yd.size != r + 1 or y.size != r:
            raise ValueError(f"output {i}: expected {r + 1} reference and {r} output derivatives")
        v[i] = yd[r] - float(np.dot(K, y - yd[:r]))
    return v


def _checked_A(plant: LinearizedPlant, xi) -> np.ndarray:
    A = plant.A(xi)
    if not np.all(np.isfinite(A)) or np.linalg.cond(A) > COND_LIMIT:
        raise NumericalFailure("decoupling matrix is numerically singular")
    return A


def nominal_control(plant: LinearizedPlant, xi, v_s) -> np.ndarray:
    A = _checked_A(plant, xi)
    return np.linalg.solve(A, np.asarray(v_s, dtype=float) - plant.b(xi))


def robust_control(plant: LinearizedPlant, xi, t: float, z, cfg: ControllerConfig) -> np.ndarray:
    A = _checked_A(plant, xi)
    Q = plant.Q(xi, t)
    es = cfg.error_system
    damping = es.B.T @ (es.P @ np.asarray(z, dtype=float)) * float(Q @ Q)
    return -np.linalg.solve(A, damping + cfg.E_hat @ Q)


def full_control(plant: LinearizedPlant, xi, t: float, z, v_s,
                 cfg: ControllerConfig) -> np.ndarray:
    return nominal_control(plant, xi, v_s) + robust_control(plant, xi, t, z, cfg)


def closed_loop_delta(z, Q, E_true, cfg: ControllerConfig) -> np.ndarray:
    """Mismatch entering the error dynamics, ``A u_r + E Q``.

    Needs the true ``E``, so it is a simulation diagnostic only.
    """
    es = cfg.error_system
    Q = np.asarray(Q, dtype=float)
    m = cfg.gains.m
    e_E = np.asarray(E_true, dtype=float).reshape(m, m) - cfg.E_hat
    return -es.B.T @ (es.P @ np.asarray(z, dtype=float)) * float(Q @ Q) + e_E @ Q


def lyapunov_rate(z, delta, es: ErrorSystem) -> float:
    """Derivative of ``V = z^T P z`` along ``z' = A z + B delta``."""
    z = np.asarray(z, dtype=float)
    return float(-z @ z + 2.0 * z @ es.P @ es.B @ np.asarray(delta, dtype=float))


class ManipulatorLaw:
    """Closed form of :func:`full_control` for the two-link arm.

    ``tau = C dq + G + H (v_s - s ||G||^2 + E_hat G)`` with ``s = B^T P z``.
    Plain float arithmetic so it can be evaluated at every integrator stage.
    """

    def __init__(self, cfg: ControllerConfig, p: ManipulatorParams):
        if cfg.gains.relative_degrees != (2, 2):
            raise ValueError("the manipulator law needs relative degrees (2, 2)")
        self.p = p
        (self.kp1, self.kd1), (self.kp2, self.kd2) = cfg.gains.rows
        BP = cfg.error_system.B.T @ cfg.error_system.P
        self.s1 = tuple(float(v) for v in BP[0])
        self.s2 = tuple(float(v) for v in BP[1])
        self.E = tuple(float(v) for v in cfg.delta_hat)

    def __call__(self, q1, q2, dq1, dq2, qd, dqd, ddqd) -> tuple[float, float]:
        p = self.p
        z = (q1 - qd[0], dq1 - dqd[0], q2 - qd[1], dq2 - dqd[1])
        v1 = ddqd[0] - self.kp1 * z[0] - self.kd1 * z[1]
        v2 = ddqd[1] - self.kp2 * z[2] - self.kd2 * z[3]
        h11, h12, h22 = mass_terms(q2, p)
        g1, g2 = gravity_terms(q1, q2, p)
        h = p.m2 * p.l1 * p.lc2 * math.sin(q2)
        gg = g1 * g1 + g2 * g2
        s1 = sum(a * b for a, b in zip(self.s1, z))
        s2 = sum(a * b for a, b in zip(self.s2, z))
        E = self.E
        w1 = v1 - s1 * gg + E[0] * g1 + E[1] * g2
        w2 = v2 - s2 * gg + E[2] * g1 + E[3] * g2
        c1 = -h * dq2 * dq1 + (-h * dq1 - h * dq2) * dq2
        c2 = h * dq1 * dq1
        return (c1 + g1 + h11 * w1 + h12 * w2,
                c2 + g2 + h12 * w1 + h22 * w2)
