"""Command-line entry point: ``issadapt <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .harness.config import ConfigError, ExperimentConfig, dump_config, load_config, validate_config
from .harness.episode import expand_estimate, run_episode
from .harness.export import export_results
from .harness.learning import learn_gpucb, learn_mes, run_sweep
from .plant import NumericalFailure

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI configuration file (defaults when omitted)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--iters", type=int, help="learning iteration budget")
    p.add_argument("--step", type=float, help="integration step in seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="issadapt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode with a fixed estimate")
    _common(p)
    p.add_argument("--estimate", help="comma-separated values of the learned entries "
                                      "(default: configured initial estimate)")
    for name, text in (("learn-mes", "extremum-seeking learning"),
                       ("learn-gpucb", "GP-UCB learning"),
                       ("sweep", "steady-state error against fixed estimate errors")):
        _common(sub.add_parser(name, help=text))
    p = sub.add_parser("config", help="show the resolved configuration")
    _common(p)
    p.add_argument("--dump", action="store_true", help="print the configuration as INI")
    return parser


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.updated("run", seed=args.seed)
    if args.out is not None:
        cfg = cfg.updated("run", out=args.out)
    if args.step is not None:
        cfg = cfg.updated("plant", step=args.step)
    if args.iters is not None:
        cfg = cfg.updated("mes", iters=args.iters).updated("gpucb", iters=args.iters)
    return validate_config(cfg)


def _parse_estimate(text: str | None, cfg: ExperimentConfig) -> np.ndarray:
    mask = cfg.controller.mask()
    if text is None:
        return np.asarray(cfg.controller.initial_estimate, dtype=float)
    try:
        values = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse estimate {text!r}") from exc
    if len(values) != int(mask.sum()):
        raise ConfigError(f"estimate needs {int(mask.sum())} values, got {len(values)}")
    return expand_estimate(values, cfg)


def _run(args) -> int:
    cfg = _resolve(args)
    if args.command == "config":
        sys.stdout.write(dump_config(cfg))
        return 0
    out = cfg.run.out
    command = " ".join(["issadapt"] + sys.argv[1:2])
    if args.command == "simulate":
        estimate = _parse_estimate(args.estimate, cfg)
        ep = run_episode(estimate, cfg)
        if ep.failed:
            raise NumericalFailure(ep.message)
        export_results(cfg, out, command, episode=ep, extra={"J": ep.J, "estimate": estimate.tolist()})
        print(f"J = {ep.J:.6g}")
    elif args.command in ("learn-mes", "learn-gpucb"):
        trace = learn_mes(cfg) if args.command == "learn-mes" else learn_gpucb(cfg)
        final = expand_estimate(trace.final_estimate, cfg)
        ep = run_episode(final, cfg)
        export_results(cfg, out, command, trace=trace, episode=ep,
                       extra={"final_estimate": trace.final_estimate.tolist(), "final_J": ep.J})
        print(f"final estimate = {np.array2string(trace.final_estimate, precision=4)}, "
              f"J = {ep.J:.6g}, min J = {min(trace.J):.6g}")
    elif args.command == "sweep":
        points = run_sweep(cfg)
        export_results(cfg, out, command, sweep=points)
        for pt in points:
            print(f"|e| = {pt.error_norm:g}: steady |z| = {pt.steady_z:.6g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
