"""Experiment configuration: INI file with one flat section per module."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..linalg import GainSet, build_tilde_A, is_hurwitz
from ..mes import validate_frequencies
from ..plant import ManipulatorParams


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass(frozen=True)
class PlantSection:
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
    # row-major 2x2 uncertainty actually present in the simulated plant
    true_E: tuple[float, ...] = (0.3, 0.6, 0.0, 0.0)
    # initial joint angles relative to the reference start; velocities start at zero
    initial_offset: tuple[float, ...] = (0.0, 0.0)
    step: float = 1e-3
    blowup: float = 1e6
    torque_limit: float = 0.0  # 0 disables saturation

    def params(self) -> ManipulatorParams:
        return ManipulatorParams(self.m1, self.m2, self.l1, self.l2, self.lc1, self.lc2,
                                 self.I1, self.I2, self.g, self.gravity_variant)


@dataclass(frozen=True)
class ControllerSection:
    kp: tuple[float, ...] = (25.0, 25.0)
    kd: tuple[float, ...] = (10.0, 10.0)
    # which flattened entries of E_hat are learned; the rest stay at initial_estimate
    learned: tuple[int, ...] = (1, 1, 0, 0)
    initial_estimate: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)

    def gains(self) -> GainSet:
        return GainSet.from_pd(self.kp, self.kd)

    def mask(self) -> np.ndarray:
        return np.array([bool(v) for v in self.learned])


@dataclass(frozen=True)
class ReferenceSection:
    q_init: float = 0.0
    q_f: float = 1.5
    t_f: float = 2.0


@dataclass(frozen=True)
class CostSection:
    q1_diag: tuple[float, ...] = (200.0, 200.0)
    q2_diag: tuple[float, ...] = (20.0, 20.0)


@dataclass(frozen=True)
class MesSection:
    a: tuple[float, ...] = (0.1, 0.05)
    omega: tuple[float, ...] = (7.0, 5.0)
    iters: int = 300
    decay: float = 1.0  # geometric dither amplitude decay per iteration
    phase: str = "aligned"  # or "printed"
    average_window: int = 20


@dataclass(frozen=True)
class GpucbSection:
    sigma: float = 0.1
    length_scale: float = 0.2
    delta: float = 0.05
    lower: float = 0.0
    upper: float = 1.0
    resolution: float = 0.02
    iters: int = 150
    noise_std: float = 0.0
    center_costs: bool = False
    oracle_sweep: bool = False


@dataclass(frozen=True)
class SweepSection:
    norms: tuple[float, ...] = (0.1, 0.2, 0.4, 0.8)
    # direction of the estimate error over the learned entries; normalized on use
    direction: tuple[float, ...] = (1.0, 1.0)
    duration: float = 10.0
    window: float = 0.5


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    out: str = "results"


@dataclass(frozen=True)
class ExperimentConfig:
    plant: PlantSection = field(default_factory=PlantSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    reference: ReferenceSection = field(default_factory=ReferenceSection)
    cost: CostSection = field(default_factory=CostSection)
    mes: MesSection = field(default_factory=MesSection)
    gpucb: GpucbSection = field(default_factory=GpucbSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    run: RunSection = field(default_factory=RunSection)

    def updated(self, section: str, **changes) -> "ExperimentConfig":
        """Copy with fields of one section replaced."""
        new = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: new})

    def validate(self) -> "ExperimentConfig":
        validate_config(self)
        return self


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, default, key: str):
    text = text.strip()
    try:
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            items = [t for t in text.replace(",", " ").split() if t]
            return tuple(kind(float(t)) if kind is int else kind(t) for t in items)
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {text!r}") from exc


def dump_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for sec in fields(cfg):
        values = getattr(cfg, sec.name)
        parser[sec.name] = {f.name: _format(getattr(values, f.name)) for f in fields(values)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay the INI ``text`` on ``base`` (defaults when omitted) and validate."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = base or ExperimentConfig()
    known = {f.name for f in fields(cfg)}
    for name in parser.sections():
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")
        section = getattr(cfg, name)
        allowed = {f.name: getattr(section, f.name) for f in fields(section)}
        changes = {}
        for key, raw in parser[name].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            changes[key] = _parse(raw, allowed[key], f"{name}.{key}")
        cfg = cfg.updated(name, **changes)
    return validate_config(cfg)


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return validate_config(ExperimentConfig())
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    try:
        cfg.plant.params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pl, ctl, ref, mes, gp = cfg.plant, cfg.controller, cfg.reference, cfg.mes, cfg.gpucb
    if len(pl.true_E) != 4:
        raise ConfigError("plant.true_E needs 4 entries (row-major 2x2)")
    if len(pl.initial_offset) != 2:
        raise ConfigError("plant.initial_offset needs 2 entries")
    if not pl.step > 0 or not pl.blowup > 0 or pl.torque_limit < 0:
        raise ConfigError("plant.step and plant.blowup must be positive, torque_limit >= 0")
    if len(ctl.kp) != 2 or len(ctl.kd) != 2:
        raise ConfigError("controller.kp and controller.kd need one value per joint")
    if not is_hurwitz(build_tilde_A(ctl.gains())):
        raise ConfigError(f"gains kp={ctl.kp}, kd={ctl.kd} are not Hurwitz")
    if len(ctl.learned) != 4 or len(ctl.initial_estimate) != 4:
        raise ConfigError("controller.learned and controller.initial_estimate need 4 entries")
    n_learned = int(ctl.mask().sum())
    if n_learned == 0:
        raise ConfigError("at least one estimate entry must be learned")
    if not ref.t_f > 0:
        raise ConfigError("reference.t_f must be positive")
    if len(cfg.cost.q1_diag) != 2 or len(cfg.cost.q2_diag) != 2 \
            or min(cfg.cost.q1_diag + cfg.cost.q2_diag) < 0:
        raise ConfigError("cost weights need two non-negative entries each")
    if len(mes.a) != n_learned or len(mes.omega) != n_learned:
        raise ConfigError(f"mes.a and mes.omega need {n_learned} entries (one per learned entry)")
    if min(mes.a) < 0 or min(mes.omega) <= 0:
        raise ConfigError("mes.a must be non-negative and mes.omega positive")
    if not validate_frequencies(mes.omega):
        raise ConfigError(f"mes.omega {mes.omega} must be distinct with no pairwise sum equal to another")
    if mes.phase not in ("aligned", "printed"):
        raise ConfigError(f"mes.phase must be 'aligned' or 'printed', got {mes.phase!r}")
    if mes.iters < 1 or mes.average_window < 1 or not 0 < mes.decay <= 1:
        raise ConfigError("mes.iters and mes.average_window must be >= 1, decay in (0, 1]")
    if not (gp.sigma > 0 and gp.length_scale > 0 and 0 < gp.delta < 1):
        raise ConfigError("gpucb.sigma and length_scale must be positive, delta in (0, 1)")
    if not (gp.upper > gp.lower and gp.resolution > 0) or gp.iters < 1 or gp.noise_std < 0:
        raise ConfigError("gpucb box, resolution, iters or noise_std invalid")
    init = np.asarray(ctl.initial_estimate)[ctl.mask()]
    if np.any(init < gp.lower - 1e-12) or np.any(init > gp.upper + 1e-12):
        raise ConfigError("initial estimate lies outside the gpucb search box")
    if len(cfg.sweep.direction) != n_learned or not np.any(cfg.sweep.direction):
        raise ConfigError(f"sweep.direction needs {n_learned} entries, not all zero")
    if not 0 < cfg.sweep.window <= cfg.sweep.duration:
        raise ConfigError("sweep.window must lie in (0, duration]")
    return cfg
