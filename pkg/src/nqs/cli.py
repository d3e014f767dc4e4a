"""Command-line front end: nqs {vmc, supervised, qsr, ed, eval} -c config.json.

Exit code 0 on success; on failure a single machine-readable JSON line
{"error": {"kind": ..., "message": ...}} is printed to stderr and the exit
code is nonzero. The NQS_WORKERS environment variable caps the sampler
worker count without affecting results.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import ConfigError, parse_config
from .runner import evaluate_machine, execute


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nqs",
                                     description="Neural-network quantum states toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("vmc", "supervised", "qsr", "ed", "eval"):
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output-prefix", default=None, help="override the config output prefix")
        if name == "ed":
            p.add_argument("--first-n", type=int, default=None)
            p.add_argument("--compute-eigenvectors", action="store_true", default=None)
        if name == "eval":
            p.add_argument("--states", required=True, help="JSON file with a list of configurations")
            p.add_argument("--out", required=True, help="output JSON file of [re, im] log-amplitudes")
            p.add_argument("--wf", default=None, help="optional .wf parameter file to load")
    return parser


def _load_config(args) -> "RunConfig":
    with open(args.config) as f:
        config = parse_config(f.read())
    if args.seed is not None:
        config.seed = args.seed
    if args.output_prefix is not None:
        config.output_prefix = args.output_prefix
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "eval":
            with open(args.states) as f:
                states = np.asarray(json.load(f), dtype=np.float64)
            logs = evaluate_machine(config, states, wf_path=args.wf)
            with open(args.out, "w") as f:
                json.dump([[z.real, z.imag] for z in logs], f)
            return 0
        if config.driver["kind"] != args.command:
            raise ConfigError(
                f"driver.kind: config declares {config.driver['kind']!r} "
                f"but the {args.command!r} subcommand was invoked"
            )
        if args.command == "ed":
            if args.first_n is not None:
                config.driver["first_n"] = args.first_n
            if args.compute_eigenvectors:
                config.driver["compute_eigenvectors"] = True
        execute(config)
        return 0
    except ConfigError as e:
        print(json.dumps({"error": {"kind": "config", "message": str(e)}}), file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as e:
        print(json.dumps({"error": {"kind": type(e).__name__, "message": str(e)}}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
