"""Two-link manipulator dynamics with an additive ``-E G(q)`` uncertainty.

Joint angles ``q``, velocities ``dq``; torques ``tau``. All matrix helpers
take the parameter set explicitly so several plants can coexist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

COND_LIMIT = 1e12


class NumericalFailure(RuntimeError):
    """Simulation left the region where it is numerically meaningful."""


@dataclass(frozen=True)
class ManipulatorParams:
    """Physical parameters; ``gravity_variant`` selects how ``G_1`` is formed.

    ``"link"`` uses the full second link length ``l2`` in the ``q1 + q2`` term
    of ``G_1``; ``"centroid"`` uses ``lc2``, which makes ``G`` the gradient of a
    potential energy.
    """

    m1: float = 10.5
    m2: float = 5.5
    l1: float = 1.1
    l2: float = 1.1
    lc1: float = 0.5
    lc2: float = 0.5
    I1: float = 11.0 / 12.0
    I2: float = 5.5 / 12.0
    g: float = 9.8
    gravity_variant: str = "link"

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.gravity_variant not in ("link", "centroid"):
            raise ValueError(f"unknown gravity_variant {self.gravity_variant!r}")


@dataclass(frozen=True)
class PlantState:
    q: np.ndarray
    dq: np.ndarray
    t: float = 0.0

    @classmethod
    def at_rest(cls, q=(0.0, 0.0), t: float = 0.0) -> "PlantState":
        return cls(np.array(q, dtype=float), np.zeros(len(q)), t)


@dataclass(frozen=True)
class LinearizedPlant:
    """Input-output linearized model ``y^(r) = b(xi) + A(xi) u + E Q(xi, t)``.

    ``xi`` stacks each output with its derivatives up to order ``r_i - 1``.
    """

    b: Callable[[np.ndarray], np.ndarray]
    A: Callable[[np.ndarray], np.ndarray]
    Q: Callable[[np.ndarray, float], np.ndarray]
    relative_degrees: tuple[int, ...]

    @property
    def n(self) -> int:
        return sum(self.relative_degrees)

    @property
    def m(self) -> int:
        return len(self.relative_degrees)


def mass_terms(q2: float, p: ManipulatorParams) -> tuple[float, float, float]:
    c2 = math.cos(q2)
    h22 = p.m2 * p.lc2**2 + p.I2
    h12 = p.m2 * p.l1 * p.lc2 * c2 + h22
    h11 = (p.m1 * p.lc1**2 + p.I1
           + p.m2 * (p.l1**2 + p.lc2**2 + 2.0 * p.l1 * p.lc2 * c2) + p.I2)
    return h11, h12, h22


def gravity_terms(q1: float, q2: float, p: ManipulatorParams) -> tuple[float, float]:
    c1 = math.cos(q1)
    c12 = math.cos(q1 + q2)
    outer = p.l2 if p.gravity_variant == "link" else p.lc2
    g1 = p.m1 * p.lc1 * p.g * c1 + p.m2 * p.g * (outer * c12 + p.l1 * c1)
    g2 = p.m2 * p.lc2 * p.g * c12
    return g1, g2


def mass_matrix(q, p: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    h11, h12, h22 = mass_terms(float(q[1]), p)
    return np.array([[h11, h12], [h12, h22]])


def coriolis_matrix(q, dq, p: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    h = p.m2 * p.l1 * p.lc2 * math.sin(q[1])
    return np.array([[-h * dq[1], -h * dq[0] - h * dq[1]],
                     [h * dq[0], 0.0]])


def gravity_vector(q, p: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    return np.array(gravity_terms(float(q[0]), float(q[1]), p))


def potential_energy(q, p: ManipulatorParams = ManipulatorParams()) -> float:
    """Potential whose gradient is ``G``; only exists for the centroid variant."""
    if p.gravity_variant != "centroid":
        raise ValueError("gravity variant 'link' is not a gradient field")
    return (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * math.sin(q[0]) \
        + p.m2 * p.lc2 * p.g * math.sin(q[0] + q[1])


def kinetic_energy(q, dq, p: ManipulatorParams = ManipulatorParams()) -> float:
    dq = np.asarray(dq, dtype=float)
    return 0.5 * float(dq @ mass_matrix(q, p) @ dq)


def _accel(q1, q2, dq1, dq2, tau1, tau2, E, p):
    """Scalar-math joint accelerations; ``E`` is a flat row-major 4-tuple."""
    h11, h12, h22 = mass_terms(q2, p)
    det = h11 * h22 - h12 * h12
    tr = h11 + h22
    # eigenvalues of a symmetric 2x2 matrix, for the conditioning check
    disc = math.sqrt(max(0.25 * (h11 - h22) ** 2 + h12 * h12, 0.0))
    lo, hi = 0.5 * tr - disc, 0.5 * tr + disc
    if not (det > 0 and lo > 0 and hi / lo <= COND_LIMIT):
        raise NumericalFailure(f"mass matrix is singular at q=({q1}, {q2})")
    h = p.m2 * p.l1 * p.lc2 * math.sin(q2)
    g1, g2 = gravity_terms(q1, q2, p)
    # tau - C dq - G
    r1 = tau1 - (-h * dq2 * dq1 + (-h * dq1 - h * dq2) * dq2) - g1
    r2 = tau2 - (h * dq1 * dq1) - g2
    a1 = (h22 * r1 - h12 * r2) / det
    a2 = (-h12 * r1 + h11 * r2) / det
    a1 -= E[0] * g1 + E[1] * g2
    a2 -= E[2] * g1 + E[3] * g2
    return a1, a2


def _flat_E(E) -> tuple[float, float, float, float]:
    flat = np.asarray(E, dtype=float).ravel()
    if flat.size != 4:
        raise ValueError(f"uncertainty matrix must have 4 entries, got {flat.size}")
    return tuple(float(v) for v in flat)


def dynamics(s: PlantState, tau, E, p: ManipulatorParams = ManipulatorParams()):
    """Time derivative of ``(q, dq, t)`` under torque ``tau`` and uncertainty ``E``."""
    a1, a2 = _accel(float(s.q[0]), float(s.q[1]), float(s.dq[0]), float(s.dq[1]),
                    float(tau[0]), float(tau[1]), _flat_E(E), p)
    return s.dq.copy(), np.array([a1, a2]), 1.0


def rk4_step(s: PlantState, tau, E, p: ManipulatorParams, h: float,
             bound: float = 1e6) -> PlantState:
    """One classical Runge-Kutta step.

    ``tau`` is either a torque pair held over the step, or a callable
    ``tau(q1, q2, dq1, dq2, t) -> (tau1, tau2)`` evaluated at every stage,
    which integrates a continuous-time feedback law exactly to fourth order.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    Ef = _flat_E(E)
    if callable(tau):
        law = tau
    else:
        held = (float(tau[0]), float(tau[1]))

        def law(q1, q2, v1, v2, t):
            return held

    def f(t, q1, q2, v1, v2):
        t1, t2 = law(q1, q2, v1, v2, t)
        a1, a2 = _accel(q1, q2, v1, v2, t1, t2, Ef, p)
        return v1, v2, a1, a2

    y = (float(s.q[0]), float(s.q[1]), float(s.dq[0]), float(s.dq[1]))
    hh = 0.5 * h
    k1 = f(s.t, *y)
    k2 = f(s.t + hh, *(x + hh * d for x, d in zip(y, k1)))
    k3 = f(s.t + hh, *(x + hh * d for x, d in zip(y, k2)))
    k4 = f(s.t + h, *(x + h * d for x, d in zip(y, k3)))
    w = h / 6.0
    new = [x + w * (a + 2.0 * b + 2.0 * c + d) for x, a, b, c, d in zip(y, k1, k2, k3, k4)]
    if not all(math.isfinite(x) and abs(x) <= bound for x in new):
        raise NumericalFailure(f"state exceeded blow-up bound {bound:g} at t={s.t + h:.6g}")
    return PlantState(np.array(new[:2]), np.array(new[2:]), s.t + h)


def linearize_manipulator(p: ManipulatorParams = ManipulatorParams()) -> LinearizedPlant:
    """Linearized model with ``xi = (q1, dq1, q2, dq2)`` and ``Q = -G``.

    ``b = -H^-1 (C dq + G)`` and ``A = H^-1``; with ``Q = -G`` the term
    ``E Q`` reproduces the ``-E G(q)`` uncertainty of the simulated plant.
    """

    def split(xi):
        xi = np.asarray(xi, dtype=float)
        return xi[[0, 2]], xi[[1, 3]]

    def b(xi):
        q, dq = split(xi)
        H = mass_matrix(q, p)
        return -np.linalg.solve(H, coriolis_matrix(q, dq, p) @ dq + gravity_vector(q, p))

    def A(xi):
        q, _ = split(xi)
        return np.linalg.inv(mass_matrix(q, p))

    def Q(xi, t):
        q, _ = split(xi)
        return -gravity_vector(q, p)

    return LinearizedPlant(b=b, A=A, Q=Q, relative_degrees=(2, 2))

