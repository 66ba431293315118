"""Discrete multi-parametric extremum seeking.

Each learned parameter ``i`` carries an integrator state ``x_i`` driven by
the cost demodulated at ``omega_i``; the published estimate is ``x_i`` plus a
sinusoidal dither of amplitude ``a_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np


def validate_frequencies(omega: Sequence[float]) -> bool:
    """Distinct frequencies with no pairwise sum equal to any frequency."""
    w = [Fraction(float(v)) for v in omega]
    if len(set(w)) != len(w):
        return False
    sums = {w[i] + w[j] for i, j in product(range(len(w)), repeat=2)}
    return not sums.intersection(w)


@dataclass(frozen=True)
class MesState:
    x: np.ndarray
    a: np.ndarray
    omega: np.ndarray
    t_f: float
    k: int = 0
    decay: float = 1.0
    phase: str = "aligned"

    def __post_init__(self):
        if self.phase not in ("aligned", "printed"):
            raise ValueError(f"phase must be 'aligned' or 'printed', got {self.phase!r}")

    @classmethod
    def initial(cls, a, omega, t_f: float, x0=None, decay: float = 1.0,
                phase: str = "aligned") -> "MesState":
        a = np.asarray(a, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if a.shape != omega.shape:
            raise ValueError("a and omega must have the same length")
        if np.any(a < 0):
            raise ValueError("dither amplitudes must be non-negative")
        if not validate_frequencies(omega):
            raise ValueError(f"invalid dither frequencies {omega.tolist()}")
        x = np.zeros_like(a) if x0 is None else np.array(x0, dtype=float)
        return cls(x=x, a=a, omega=omega, t_f=float(t_f), decay=float(decay), phase=phase)

    @property
    def dither_radius(self) -> float:
        return float(np.sqrt(np.sum(self.a**2)))


def mes_step(state: MesState, J: float) -> tuple[MesState, np.ndarray]:
    """Advance one iteration with the cost ``J`` of the last episode.

    ``J`` must be the cost of the estimate returned by the previous call.
    With ``phase="aligned"`` the dither in that estimate and the demodulating
    sinusoid share the same phase. ``"printed"`` reuses the demodulation
    index ``k`` for the next dither, which lags it by ``omega * t_f``; the
    averaged gradient gain then scales with ``cos(omega * t_f)`` and is
    negative for e.g. ``omega * t_f = 10``.

    Returns the new state and the estimate to use for the next episode.
    Raises ``ValueError`` without touching ``state`` if ``J`` is not finite.
    """
    if not math.isfinite(J) or J < 0:
        raise ValueError(f"cost must be finite and non-negative, got {J}")
    phase = state.omega * state.t_f * state.k
    x = state.x + state.a * state.t_f * np.sin(phase + math.pi / 2) * J
    dither_index = state.k + 1 if state.phase == "aligned" else state.k
    estimate = x + state.a * np.sin(state.omega * state.t_f * dither_index - math.pi / 2)
    new = replace(state, x=x, k=state.k + 1, a=state.a * state.decay)
    return new, estimate
