"""Command-line entry point: ``python -m kmedian_cpe.harness <experiment> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .config import Experiment, dump_config, load_config, preset
from .experiments import linearity_r2, min_separation_reached, run
from .records import emit_csv, emit_plotdata

log = logging.getLogger("kmedian_cpe.harness")

SUBCOMMANDS = {
    "separation": Experiment.SEPARATION,
    "decay": Experiment.DECAY,
    "compression": Experiment.COMPRESSION,
    "snr": Experiment.SNR,
    "single": Experiment.SINGLE,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmedian-cpe", description="Run a parameter-estimation experiment sweep.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"{exp.value} experiment")
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--model", choices=("tde", "fe"), default="tde",
                       help="preset model when no --config is given")
        if exp == Experiment.DECAY:
            p.add_argument("--axis", choices=("f_a", "r", "t"), default="f_a",
                           help="preset decay-sweep axis when no --config is given")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--trials", type=int, help="trials per axis point (overrides the config)")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock runtimes (makes the CSV non-reproducible)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _json_default(value):
    return None if isinstance(value, float) and not math.isfinite(value) else str(value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    exp = SUBCOMMANDS[args.command]
    try:
        if args.config is not None:
            cfg = load_config(args.config)
            if cfg.experiment != exp:
                raise ValueError(f"config describes {cfg.experiment.value}, "
                                 f"not {exp.value}")
        else:
            cfg = preset(exp, args.model, getattr(args, "axis", "f_a"))
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.timing:
            changes["record_runtime"] = True
        cfg = cfg.replace(**changes)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    log.info("running %s with %d trials per axis point", exp.value, cfg.trials)
    try:
        result = run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    if result.records:
        emit_csv(result.records, out / "trials.csv")
    summary = list(result.summary)
    if exp == Experiment.SEPARATION:
        for alg in cfg.algorithms:
            r2, n = linearity_r2(summary, cfg.delta, alg.value)
            summary.append(dict(algorithm=alg.value, linearity_r2=r2, points=n,
                                min_zeta_over_delta=min_separation_reached(
                                    summary, cfg.delta, alg.value)))
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, default=_json_default, allow_nan=False)
        if all(_finite(row) for row in summary)
        else json.dumps(_scrub(summary), indent=2), encoding="utf-8")
    if result.series:
        emit_plotdata(result.series, out / "plotdata")
    for row in summary:
        print(", ".join(f"{k}={_short(v)}" for k, v in row.items()))
    return 0


def _finite(row) -> bool:
    return all(not (isinstance(v, float) and not math.isfinite(v)) for v in row.values())


def _scrub(rows):
    return [{k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in row.items()} for row in rows]


def _short(value):
    return f"{value:.6g}" if isinstance(value, float) else value


if __name__ == "__main__":
    sys.exit(main())
