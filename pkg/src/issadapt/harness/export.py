"""CSV and run-manifest output."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ExperimentConfig, dump_config
from .episode import EpisodeResult
from .learning import LearningTrace, SweepPoint

TRAJECTORY_HEADER = ["t", "q1", "q2", "dq1", "dq2", "q1d", "q2d", "dq1d", "dq2d",
                     "tau1", "tau2", "V"]


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_rows(path: Path, header, rows) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_trajectory(ep: EpisodeResult, path) -> Path:
    cols = np.column_stack([ep.t, ep.q, ep.dq, ep.qd, ep.dqd, ep.tau, ep.V])
    return _write_rows(Path(path), TRAJECTORY_HEADER, cols.tolist())


def learning_header(trace: LearningTrace) -> list[str]:
    dims = trace.estimate_array.shape[1]
    header = ["iter", "J", "Jmin"] + [f"dhat{i + 1}" for i in range(dims)]
    if trace.regret is not None:
        header += ["regret", "cumregret"]
    return header


def write_learning(trace: LearningTrace, path) -> Path:
    est = trace.estimate_array
    Jmin = trace.Jmin
    cum = trace.cumulative_regret
    rows = []
    for k in range(len(trace)):
        row = [k, trace.J[k], Jmin[k], *est[k].tolist()]
        if trace.regret is not None:
            row += [trace.regret[k], cum[k]]
        rows.append(row)
    return _write_rows(Path(path), learning_header(trace), rows)


def write_sweep(points: list[SweepPoint], path) -> Path:
    return _write_rows(Path(path), ["error_norm", "steady_z"],
                       [[p.error_norm, p.steady_z] for p in points])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: ExperimentConfig, out_dir, command: str, files, extra=None) -> Path:
    """Resolved config (also written as ``config.ini``), seed, version and file hashes.

    Re-running ``command`` with ``--config <out_dir>/config.ini`` reproduces
    the listed files byte for byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_text = dump_config(cfg)
    (out / "config.ini").write_text(config_text)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.run.seed,
        "config": config_text,
        "files": {Path(f).name: _sha256(Path(f)) for f in files},
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def export_results(cfg: ExperimentConfig, out_dir, command: str, *,
                   trace: LearningTrace | None = None,
                   episode: EpisodeResult | None = None,
                   sweep: list[SweepPoint] | None = None,
                   extra=None) -> list[Path]:
    out = Path(out_dir)
    files = []
    if trace is not None:
        files.append(write_learning(trace, out / "learning.csv"))
    if episode is not None:
        files.append(write_trajectory(episode, out / "trajectory.csv"))
    if sweep is not None:
        files.append(write_sweep(sweep, out / "sweep.csv"))
    files.append(write_manifest(cfg, out, command, files, extra))
    return files
