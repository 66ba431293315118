"""Closed-loop error matrices, Hurwitz test and the Lyapunov solve.

The error state of an input-output linearized plant with relative degrees
``r_1..r_m`` obeys ``z' = A z + B delta`` where ``A`` is block-diagonal
companion form built from the tracking gains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

HURWITZ_EPS = 1e-9


class NotHurwitzError(ValueError):
    """Raised when a matrix required to be Hurwitz is not."""


@dataclass(frozen=True)
class GainSet:
    """Per-output feedback gains ``K^i = (K^i_1, ..., K^i_{r_i})``.

    ``K^i_1`` multiplies the position error, ``K^i_{r_i}`` the highest
    derivative error. The relative degree of output ``i`` is ``len(K^i)``.
    """

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(k) for k in row) for row in self.rows)
        if not rows or any(len(r) == 0 for r in rows):
            raise ValueError("every output needs at least one gain")
        if not all(np.isfinite(k) for r in rows for k in r):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_pd(cls, kp: Sequence[float], kd: Sequence[float]) -> "GainSet":
        """Relative-degree-two gains from per-joint PD values."""
        if len(kp) != len(kd):
            raise ValueError("kp and kd must have the same length")
        return cls(tuple((p, d) for p, d in zip(kp, kd)))

    @property
    def relative_degrees(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.rows)

    @property
    def n(self) -> int:
        return sum(self.relative_degrees)

    @property
    def m(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ErrorSystem:
    """Matrices of the tracking-error dynamics and the Lyapunov matrix ``P``."""

    A: np.ndarray
    B: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        for arr in (self.A, self.B, self.P):
            arr.setflags(write=False)


def build_tilde_A(gains: GainSet, relative_degrees: Sequence[int] | None = None) -> np.ndarray:
    """Block-diagonal companion matrix with last block rows ``-K^i``."""
    if relative_degrees is not None:
        if tuple(relative_degrees) != gains.relative_degrees:
            raise ValueError(
                f"gain rows of lengths {gains.relative_degrees} do not match "
                f"relative degrees {tuple(relative_degrees)}"
            )
    n = gains.n
    A = np.zeros((n, n))
    offset = 0
    for row in gains.rows:
        r = len(row)
        for j in range(r - 1):
            A[offset + j, offset + j + 1] = 1.0
        A[offset + r - 1, offset:offset + r] = -np.asarray(row)
        offset += r
    return A


def build_tilde_B(relative_degrees: Sequence[int]) -> np.ndarray:
    """Input matrix with a single one per column, at the end of block ``i``."""
    degrees = [int(r) for r in relative_degrees]
    if not degrees or any(r < 1 for r in degrees):
        raise ValueError("relative degrees must be positive integers")
    B = np.zeros((sum(degrees), len(degrees)))
    ends = np.cumsum(degrees) - 1
    B[ends, np.arange(len(degrees))] = 1.0
    return B


def is_hurwitz(A: np.ndarray, eps: float = HURWITZ_EPS) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return bool(np.all(np.linalg.eigvals(A).real < -eps))


def solve_lyapunov(A_tilde: np.ndarray) -> np.ndarray:
    """Solve ``A^T P + P A = -I`` by Kronecker vectorization.

    Row-major ``vec`` turns ``A^T P`` into ``(A^T kron I) vec(P)`` and
    ``P A`` into ``(I kron A^T) vec(P)``.
    """
    A = np.asarray(A_tilde, dtype=float)
    if not is_hurwitz(A):
        raise NotHurwitzError("Lyapunov equation needs a Hurwitz matrix")
    n = A.shape[0]
    eye = np.eye(n)
    M = np.kron(A.T, eye) + np.kron(eye, A.T)
    lu = sla.lu_factor(M)
    P = sla.lu_solve(lu, -eye.ravel()).reshape(n, n)
    P = 0.5 * (P + P.T)
    # one refinement step; matters for badly scaled companions
    R = A.T @ P + P @ A + eye
    dP = sla.lu_solve(lu, -R.ravel()).reshape(n, n)
    P = P + 0.5 * (dP + dP.T)
    return P


def build_error_system(gains: GainSet) -> ErrorSystem:
    A = build_tilde_A(gains)
    if not is_hurwitz(A):
        raise NotHurwitzError(f"gains {gains.rows} do not give a Hurwitz error system")
    return ErrorSystem(A=A, B=build_tilde_B(gains.relative_degrees), P=solve_lyapunov(A))
