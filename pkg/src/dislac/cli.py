"""Command line entry point.

    dislac run --config <file> [--seed <u64>] [--out <dir>] [--workers <n>]
    dislac rerun --manifest <file> --out <dir> [--workers <n>]
    dislac list

On failure a single JSON object is written to stderr, e.g.
``{"error": "config", "path": "sensing-mc.trials", "message": "..."}``.
"""

from __future__ import annotations

import argparse
import json
import sys

from .runner import EXPERIMENTS, ConfigError, RunnerError, load_config, rerun_from_manifest, run_experiment

EXIT_CONFIG = 2
EXIT_RUNTIME = 1


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dislac", description="Run DISLAC experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment named in a config file")
    run.add_argument("--config", required=True, help="TOML or JSON config")
    run.add_argument("--seed", type=_u64, default=None, help="master seed (overrides the file)")
    run.add_argument("--out", default=None, help="output directory (overrides the file)")
    run.add_argument("--workers", type=int, default=1, help="worker processes for sweep points")
    rerun = sub.add_parser("rerun", help="reproduce a run from its manifest.json")
    rerun.add_argument("--manifest", required=True)
    rerun.add_argument("--out", required=True)
    rerun.add_argument("--workers", type=int, default=1)
    sub.add_parser("list", help="list experiments and their parameters")
    return ap


def _fail(kind: str, message: str, path: str = "") -> None:
    err = {"error": kind, "message": message}
    if path:
        err["path"] = path
    print(json.dumps(err, sort_keys=True), file=sys.stderr)


def _list() -> None:
    for name, exp in EXPERIMENTS.items():
        print(f"{name}: {exp.description}")
        for key, value in exp.defaults.items():
            print(f"    {key} = {json.dumps(value)}")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        _list()
        return 0
    try:
        if args.command == "run":
            spec = load_config(args.config, seed=args.seed, output_dir=args.out)
            manifest = run_experiment(spec, workers=args.workers)
            out = spec.output_dir
        else:
            manifest = rerun_from_manifest(args.manifest, args.out, workers=args.workers)
            out = args.out
    except ConfigError as exc:
        _fail("config", str(exc), exc.path)
        return EXIT_CONFIG
    except (RunnerError, RuntimeError, ValueError, OSError) as exc:
        _fail("runtime", str(exc))
        return EXIT_RUNTIME
    for art in manifest.artifacts:
        print(f"{out}/{art['file']}")
    print(f"{out}/manifest.json")
    return 0
