"""Rest-to-rest quintic reference trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuinticRef:
    """Quintic in normalized time ``s = t / t_f``, one coefficient row per channel.

    ``coeffs[c, i]`` multiplies ``s**i``. Evaluation outside ``[0, t_f]`` holds
    the nearest endpoint with zero velocity and acceleration.
    """

    coeffs: np.ndarray
    t_f: float

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]


def _boundary_matrix() -> np.ndarray:
    # rows: p(0), p'(0), p''(0), p(1), p'(1), p''(1) in normalized time
    M = np.zeros((6, 6))
    M[0, 0] = 1.0
    M[1, 1] = 1.0
    M[2, 2] = 2.0
    for i in range(6):
        M[3, i] = 1.0
        M[4, i] = i
        M[5, i] = i * (i - 1)
    return M


def quintic_coefficients(q_init, q_f, t_f: float) -> QuinticRef:
    """Coefficients meeting position targets with zero end velocity/acceleration.

    ``q_init`` and ``q_f`` may be scalars or per-channel sequences.
    """
    if not t_f > 0:
        raise ValueError(f"t_f must be positive, got {t_f}")
    q0 = np.atleast_1d(np.asarray(q_init, dtype=float))
    q1 = np.atleast_1d(np.asarray(q_f, dtype=float))
    q0, q1 = np.broadcast_arrays(q0, q1)
    rhs = np.zeros((6, q0.size))
    rhs[0] = q0
    rhs[3] = q1
    coeffs = np.linalg.solve(_boundary_matrix(), rhs).T
    return QuinticRef(coeffs=np.ascontiguousarray(coeffs), t_f=float(t_f))


_POWERS = np.arange(6)
_D1 = np.array([0.0, 1, 2, 3, 4, 5])
_D2 = np.array([0.0, 0, 2, 6, 12, 20])


def eval_ref(ref: QuinticRef, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity and acceleration of every channel at time ``t``."""
    tf = ref.t_f
    if t <= 0.0:
        s, moving = 0.0, t == 0.0
    elif t >= tf:
        s, moving = 1.0, t == tf
    else:
        s, moving = t / tf, True
    s_pow = s ** _POWERS
    q = ref.coeffs @ s_pow
    if not moving:
        zeros = np.zeros(ref.channels)
        return q, zeros, zeros.copy()
    s_pow1 = np.concatenate(([0.0], s_pow[:-1]))
    s_pow2 = np.concatenate(([0.0, 0.0], s_pow[:-2]))
    dq = ref.coeffs @ (_D1 * s_pow1) / tf
    ddq = ref.coeffs @ (_D2 * s_pow2) / tf**2
    return q, dq, ddq


def eval_ref_grid(ref: QuinticRef, times) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`eval_ref`; arrays of shape ``(len(times), channels)``."""
    times = np.asarray(times, dtype=float)
    s = np.clip(times / ref.t_f, 0.0, 1.0)
    inside = (times >= 0.0) & (times <= ref.t_f)
    S = s[:, None] ** _POWERS
    S1 = np.hstack([np.zeros((s.size, 1)), S[:, :-1]]) * _D1
    S2 = np.hstack([np.zeros((s.size, 2)), S[:, :-2]]) * _D2
    q = S @ ref.coeffs.T
    dq = (S1 @ ref.coeffs.T) / ref.t_f * inside[:, None]
    ddq = (S2 @ ref.coeffs.T) / ref.t_f**2 * inside[:, None]
    return q, dq, ddq
