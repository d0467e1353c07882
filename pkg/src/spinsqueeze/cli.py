"""Command-line front end.

Subcommands mirror the experiment kinds:

    spinsqueeze analytics --config cfg.json [--out DIR] [--seed S]
    spinsqueeze sample    --config cfg.json
    spinsqueeze run       --config cfg.json
    spinsqueeze sweep     --config cfg.json
    spinsqueeze figure N  [--config cfg.json]

Configs are JSON files with ExperimentConfig fields; flags override the file.
Exit code 0 for a complete bundle, 2 for a bundle with recorded failures.
The sample cache location honours the SPINSQUEEZE_CACHE environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .experiments import ExperimentConfig, run_experiment


def _load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_json(Path(path).read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinsqueeze",
                                     description="squeezing experiments on the lattice gas")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in ("analytics", "sample", "run", "sweep"):
        p = sub.add_parser(kind)
        _common_flags(p)
    pfig = sub.add_parser("figure")
    pfig.add_argument("number", type=int, choices=range(1, 9))
    _common_flags(pfig)
    return parser


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--workers", type=int, default=None, help="worker count")
    p.add_argument("--out", default=None, help="output bundle root")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = _load_config(args.config)
    overrides = {}
    if args.command == "figure":
        overrides["kind"] = "figure"
        overrides["figure"] = args.number
    else:
        overrides["kind"] = args.command
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["out_dir"] = args.out
    config = dataclasses.replace(config, **overrides)
    config.validate()
    manifest = run_experiment(config)
    json.dump({"bundle": manifest["outputs"], "complete": manifest["complete"]},
              sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0 if manifest["complete"] else 2


if __name__ == "__main__":
    sys.exit(main())
