"""Outer learning loops that tune the uncertainty estimate episode by episode."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import gpucb
from ..mes import MesState, mes_step
from ..plant import NumericalFailure
from .config import ExperimentConfig
from .episode import EpisodeResult, expand_estimate, run_episode

log = logging.getLogger(__name__)


@dataclass
class LearningTrace:
    """One row per iteration: the estimate used, its cost and the running minimum."""

    method: str
    estimates: list[np.ndarray] = field(default_factory=list)
    J: list[float] = field(default_factory=list)
    failed: list[bool] = field(default_factory=list)
    regret: list[float] | None = None
    # GP-UCB only: lowest-posterior-mean grid point after each round
    recommendations: list[np.ndarray] | None = None
    final_estimate: np.ndarray | None = None

    def record(self, estimate, J: float, failed: bool = False) -> None:
        self.estimates.append(np.asarray(estimate, dtype=float).copy())
        self.J.append(float(J))
        self.failed.append(failed)

    @property
    def Jmin(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.J))

    @property
    def estimate_array(self) -> np.ndarray:
        return np.vstack(self.estimates)

    @property
    def cumulative_regret(self) -> np.ndarray | None:
        return None if self.regret is None else np.cumsum(self.regret)

    def __len__(self) -> int:
        return len(self.J)


def learn_mes(cfg: ExperimentConfig, iters: int | None = None) -> LearningTrace:
    """Alternate episodes and extremum-seeking updates.

    A failed episode reuses the last finite cost so the recurrence stays
    defined. The reported estimate averages the last ``average_window``
    iterations to remove the dither.
    """
    mes = cfg.mes
    iters = mes.iters if iters is None else iters
    mask = cfg.controller.mask()
    x0 = np.asarray(cfg.controller.initial_estimate, dtype=float)[mask]
    state = MesState.initial(mes.a, mes.omega, cfg.reference.t_f, x0=x0,
                             decay=mes.decay, phase=mes.phase)
    estimate = x0.copy()
    trace = LearningTrace("mes")
    last_finite = None
    for k in range(iters):
        result = run_episode(expand_estimate(estimate, cfg), cfg)
        J = result.J
        if result.failed:
            if last_finite is None:
                raise NumericalFailure(f"first MES episode failed: {result.message}")
            log.warning("iteration %d: %s; reusing cost %g", k, result.message, last_finite)
            J = last_finite
        else:
            last_finite = J
        trace.record(estimate, J, result.failed)
        state, estimate = mes_step(state, J)
    window = min(mes.average_window, len(trace))
    trace.final_estimate = trace.estimate_array[-window:].mean(axis=0)
    return trace


def search_grid(cfg: ExperimentConfig) -> gpucb.SearchGrid:
    gp = cfg.gpucb
    return gpucb.SearchGrid.box(gp.lower, gp.upper, gp.resolution, int(cfg.controller.mask().sum()))


def oracle_costs(cfg: ExperimentConfig, grid: gpucb.SearchGrid) -> np.ndarray:
    """True episode cost at every grid point (expensive: one episode per point)."""
    return np.array([run_episode(expand_estimate(p, cfg), cfg).J for p in grid.points])


def learn_gpucb(cfg: ExperimentConfig, iters: int | None = None,
                J_star: float | None = None) -> LearningTrace:
    """GP-UCB over the configured grid; the estimate is the lowest posterior mean point.

    Regret columns are filled when ``J_star`` is given or the config enables
    the full oracle sweep.
    """
    gp = cfg.gpucb
    iters = gp.iters if iters is None else iters
    grid = search_grid(cfg)
    if J_star is None and gp.oracle_sweep:
        J_star = float(np.min(oracle_costs(cfg, grid)))
    rng = np.random.default_rng(cfg.run.seed)

    recommendations = []

    def objective(point):
        return run_episode(expand_estimate(point, cfg), cfg).J

    def recommend(t, run):
        recommendations.append(run.best_mean_point(grid)[1])

    run = gpucb.minimize(objective, grid, iters, sigma=gp.sigma, length_scale=gp.length_scale,
                         delta=gp.delta, noise_std=gp.noise_std, rng=rng, J_star=J_star,
                         center=gp.center_costs, callback=recommend)
    trace = LearningTrace("gpucb", recommendations=recommendations)
    for point, J, y, bad in zip(run.points, run.costs, run.observations, run.penalized):
        trace.record(point, y if bad else J, bad)
    if run.regret is not None:
        trace.regret = list(run.regret.instantaneous)
    trace.final_estimate = recommendations[-1].copy()
    return trace


@dataclass
class SweepPoint:
    error_norm: float
    steady_z: float
    episode: EpisodeResult


def run_sweep(cfg: ExperimentConfig, norms=None) -> list[SweepPoint]:
    """Hold estimate errors of given norms along a fixed direction for a long run.

    The steady-state tracking error is the mean of ``|z|`` over the final
    ``window`` seconds.
    """
    sw = cfg.sweep
    norms = sw.norms if norms is None else norms
    mask = cfg.controller.mask()
    u = np.asarray(sw.direction, dtype=float)
    u = u / np.linalg.norm(u)
    true_learned = np.asarray(cfg.plant.true_E, dtype=float)[mask]
    out = []
    for nrm in norms:
        estimate = expand_estimate(true_learned - nrm * u, cfg)
        ep = run_episode(estimate, cfg, duration=sw.duration)
        if ep.failed:
            raise NumericalFailure(f"sweep episode with error norm {nrm} failed: {ep.message}")
        tail = ep.t >= ep.t[-1] - sw.window - 1e-12
        out.append(SweepPoint(float(nrm), float(np.mean(ep.z_norm[tail])), ep))
    return out


def estimate_error(delta_hat, cfg: ExperimentConfig) -> np.ndarray:
    """``Delta - Delta_hat`` over all entries (needs the simulated true ``E``)."""
    return np.asarray(cfg.plant.true_E, dtype=float) - np.asarray(delta_hat, dtype=float)


def decay_violations(ep: EpisodeResult, error_norm: float, tol: float = 1e-8) -> tuple[int, int]:
    """Samples where ``|z| >= |e|`` but ``dV/dt > -|z|^2 / 2 + tol``.

    Returns ``(violations, samples checked)``.
    """
    zn = ep.z_norm
    active = zn >= error_norm
    bad = active & (ep.vdot > -0.5 * zn**2 + tol)
    return int(bad.sum()), int(active.sum())


def steady_state_norm(ep: EpisodeResult, window: float) -> float:
    tail = ep.t >= ep.t[-1] - window - 1e-12
    return float(np.mean(ep.z_norm[tail]))

