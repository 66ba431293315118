"""GP-UCB over a finite grid, in its cost-minimizing (lower confidence bound) form."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

log = logging.getLogger(__name__)

VAR_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """Squared-exponential kernel with unit signal variance."""

    length_scale: float = 0.2

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError(f"length scale must be positive, got {self.length_scale}")

    def __call__(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        sq = (np.sum(X**2, axis=1)[:, None] + np.sum(Y**2, axis=1)[None, :] - 2.0 * X @ Y.T)
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * self.length_scale**2))


def kernel_eval(x, x2, length_scale: float) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {x2.shape}")
    if not length_scale > 0:
        raise ValueError(f"length scale must be positive, got {length_scale}")
    return math.exp(-float(np.sum((x - x2) ** 2)) / (2.0 * length_scale**2))


@dataclass(frozen=True)
class GpDataset:
    """Queried points with their observed costs; an immutable value.

    With ``center`` set, observations are shifted by their median before
    conditioning and the shift is added back to the posterior mean.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma: float = 0.1
    kernel: Kernel = Kernel()
    center: bool = False

    def __post_init__(self):
        for arr in (self.points, self.y):
            arr.setflags(write=False)
        if not self.sigma > 0:
            raise ValueError("noise parameter sigma must be positive")

    def __len__(self) -> int:
        return self.y.size


def observe(data: GpDataset, point, y: float) -> GpDataset:
    if not math.isfinite(y):
        raise ValueError(f"observation must be finite, got {y}")
    point = np.asarray(point, dtype=float).ravel()
    pts = point[None, :] if len(data) == 0 else np.vstack([data.points, point])
    return GpDataset(pts, np.append(data.y, float(y)), data.sigma, data.kernel, data.center)


def _check_variance(var: np.ndarray) -> np.ndarray:
    if np.any(var < -VAR_TOL) or np.any(var > 1.0 + VAR_TOL):
        raise FloatingPointError(f"posterior variance out of range [{var.min()}, {var.max()}]")
    if np.any(var < 0.0):
        warnings.warn("clamping slightly negative posterior variance to zero", RuntimeWarning)
        var = np.maximum(var, 0.0)
    return np.minimum(var, 1.0)


def gp_posterior_many(data: GpDataset, X) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(data) == 0:
        return np.zeros(len(X)), np.ones(len(X))
    offset = float(np.median(data.y)) if data.center else 0.0
    K = data.kernel(data.points, data.points) + data.sigma**2 * np.eye(len(data))
    factor = cho_factor(K, lower=True)
    Ks = data.kernel(data.points, X)
    mu = Ks.T @ cho_solve(factor, data.y - offset) + offset
    var = 1.0 - np.sum(Ks * cho_solve(factor, Ks), axis=0)
    return mu, _check_variance(var)


def gp_posterior(data: GpDataset, x) -> tuple[float, float]:
    mu, var = gp_posterior_many(data, np.asarray(x, dtype=float).reshape(1, -1))
    return float(mu[0]), float(var[0])


def beta_t(t: int, grid_size: int, delta: float) -> float:
    """Exploration weight ``2 log(|D| t^2 pi^2 / (6 delta))``."""
    if t < 1 or grid_size < 1 or not 0 < delta < 1:
        raise ValueError(f"need t >= 1, grid_size >= 1, 0 < delta < 1; got {t}, {grid_size}, {delta}")
    return 2.0 * math.log(grid_size * t**2 * math.pi**2 / (6.0 * delta))


@dataclass(frozen=True)
class SearchGrid:
    """Finite candidate set; ``points[0]`` is the lower corner of the box."""

    points: np.ndarray
    lower: float
    upper: float
    resolution: float

    @classmethod
    def box(cls, lower: float, upper: float, resolution: float, dim: int) -> "SearchGrid":
        if not (upper > lower and resolution > 0 and dim >= 1):
            raise ValueError("grid needs upper > lower, resolution > 0, dim >= 1")
        count = int(round((upper - lower) / resolution)) + 1
        axis = np.linspace(lower, upper, count)
        mesh = np.meshgrid(*([axis] * dim), indexing="ij")
        points = np.column_stack([m.ravel() for m in mesh])
        points.setflags(write=False)
        return cls(points, float(lower), float(upper), float(resolution))

    def __len__(self) -> int:
        return len(self.points)


def acquisition(grid: SearchGrid, data: GpDataset, t: int, delta: float) -> np.ndarray:
    mu, var = gp_posterior_many(data, grid.points)
    return mu - math.sqrt(beta_t(t, len(grid), delta)) * np.sqrt(var)


def acquire(grid: SearchGrid, data: GpDataset, t: int, delta: float) -> tuple[int, np.ndarray]:
    """Grid index and point minimizing ``mu - sqrt(beta_t) * sigma``; ties go to the lowest index."""
    idx = int(np.argmin(acquisition(grid, data, t, delta)))
    return idx, grid.points[idx].copy()


@dataclass(frozen=True)
class RegretLog:
    instantaneous: tuple[float, ...] = ()

    @property
    def cumulative(self) -> float:
        return math.fsum(self.instantaneous)

    def running(self) -> np.ndarray:
        return np.cumsum(self.instantaneous)


def regret_update(log_: RegretLog, J_t: float, J_star: float) -> RegretLog:
    return RegretLog(log_.instantaneous + (float(J_t) - float(J_star),))


@dataclass
class GpUcbRun:
    """Record of one optimization run; ``regret`` is ``None`` without an oracle."""

    indices: list[int]
    points: list[np.ndarray]
    costs: list[float]
    observations: list[float]
    penalized: list[bool]
    data: GpDataset
    regret: RegretLog | None

    def best_mean_point(self, grid: SearchGrid) -> tuple[int, np.ndarray]:
        """Grid point with the lowest posterior mean (the reported estimate)."""
        mu, _ = gp_posterior_many(self.data, grid.points)
        idx = int(np.argmin(mu))
        return idx, grid.points[idx].copy()


def minimize(objective, grid: SearchGrid, iters: int, *, sigma: float = 0.1,
             length_scale: float = 0.2, delta: float = 0.05, noise_std: float = 0.0,
             rng: np.random.Generator | None = None, J_star: float | None = None,
             center: bool = False, callback=None) -> GpUcbRun:
    """Run ``iters`` rounds of acquire, evaluate, observe.

    ``objective(point)`` returns the true cost or ``inf`` on failure; failures
    are recorded as ten times the largest observation so far (1.0 if none).
    Noise of standard deviation ``noise_std`` is drawn from ``rng`` and added
    to finite costs before they are observed.
    """
    if noise_std > 0 and rng is None:
        raise ValueError("noise_std > 0 needs a random generator")
    data = GpDataset(np.zeros((0, grid.points.shape[1])), np.zeros(0), sigma,
                     Kernel(length_scale), center)
    run = GpUcbRun([], [], [], [], [], data, RegretLog() if J_star is not None else None)
    for t in range(1, iters + 1):
        idx, point = acquire(grid, run.data, t, delta)
        J = float(objective(point))
        penalized = not math.isfinite(J)
        if penalized:
            y = 10.0 * float(np.max(run.data.y)) if len(run.data) else 1.0
            log.warning("round %d: evaluation failed at %s, observing penalty %g", t, point, y)
        else:
            y = J + (noise_std * float(rng.standard_normal()) if noise_std > 0 else 0.0)
        run.data = observe(run.data, point, y)
        run.indices.append(idx)
        run.points.append(point)
        run.costs.append(J)
        run.observations.append(y)
        run.penalized.append(penalized)
        if run.regret is not None:
            run.regret = regret_update(run.regret, y if penalized else J, J_star)
        if callback is not None:
            callback(t, run)
    return run
