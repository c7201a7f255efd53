"""Command-line front end: ``compass-chain <experiment> [flags]`` and ``compass-chain compare``.

Exit codes: 0 success, 2 config error, 3 numerical-consistency error,
4 size-limit error.  Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path
import sys
import time

from .artifacts import VERSION, compare_csv, write_csv, write_json
from .config import EXPERIMENTS, PARAM_KEYS, build_config, load_config_file
from .errors import CompassError, ConfigError, NumericalConsistencyError


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _key_value(text: str) -> tuple[str, object]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, _parse_value(val)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compass-chain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="JSON config file (flags override it)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="cap on BLAS worker threads")
        p.add_argument("--seed", type=int, help="seed for synthetic-data fits")
        for key in sorted(PARAM_KEYS):
            p.add_argument(f"--{key.replace('_', '-')}", dest=f"param_{key}",
                           help=f"model parameter {key}")
        p.add_argument("--sweep", action="append", default=[], metavar="VAR=START:STOP:COUNT")
        p.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
        p.add_argument("--tolerance", type=float)
        p.add_argument("--option", action="append", default=[], type=_key_value,
                       metavar="KEY=JSON")
    c = sub.add_parser("compare", help="compare two CSV artifacts made from the same config")
    c.add_argument("first", type=Path)
    c.add_argument("second", type=Path)
    c.add_argument("--tolerance", type=float, default=0.0)
    return parser


def _overrides(args) -> dict:
    params = {}
    for key in PARAM_KEYS:
        val = getattr(args, f"param_{key}")
        if val is not None:
            params[key] = val if key == "bc" else _parse_value(val)
    sweep = {}
    for item in args.sweep:
        var, sep, grid = item.partition("=")
        if not sep:
            raise ConfigError(f"--sweep expects VAR=START:STOP:COUNT, got {item!r}")
        sweep[var] = grid
    fit = {}
    if args.window is not None:
        fit["window"] = list(args.window)
    if args.tolerance is not None:
        fit["tolerance"] = args.tolerance
    out = {"params": params, "sweep": sweep, "fit": fit, "options": dict(args.option)}
    if args.out:
        out["output"] = args.out
    if args.seed is not None:
        out["seed"] = args.seed
    return out


def run_experiment(cfg, threads: int | None = None) -> tuple[int, list[Path]]:
    """Run one experiment and write its artifacts; returns (exit status, files)."""
    from .experiments import run

    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    t0 = time.perf_counter()
    if threads:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            result = run(cfg)
    else:
        result = run(cfg)
    wall = time.perf_counter() - t0

    digest = cfg.hash()
    files = []
    multi = len(result.curves) > 1
    for curve in result.curves:
        name = f"{cfg.experiment}_{curve.name}.csv" if multi else f"{cfg.experiment}.csv"
        prov = {"experiment": cfg.experiment, "curve": curve.name,
                "config_hash": digest, "version": VERSION}
        write_csv(out / name, curve, prov)
        files.append(out / name)
    meta = {"config": cfg.canonical(), "config_hash": digest, "version": VERSION,
            "wall_time_s": wall, "files": [f.name for f in files], **result.meta}
    write_json(out / f"{cfg.experiment}.meta.json", meta)
    files.append(out / f"{cfg.experiment}.meta.json")
    if result.fits:
        write_json(out / f"{cfg.experiment}.fit.json", {"config_hash": digest, **result.fits})
        files.append(out / f"{cfg.experiment}.fit.json")
    status = 0
    if result.meta.get("passed") is False:
        status = NumericalConsistencyError.exit_code
    return status, files


def _fail(exc: CompassError, context: str | None = None) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    if context:
        err["context"] = context
    print(json.dumps(err), file=sys.stderr)
    return exc.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return ConfigError.exit_code
    try:
        if args.command == "compare":
            report = compare_csv(args.first, args.second, args.tolerance)
            print(json.dumps(report, sort_keys=True))
            return 0 if report["within_tolerance"] else NumericalConsistencyError.exit_code
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        file_data = load_config_file(args.config) if args.config else None
        cfg = build_config(args.command, file_data, _overrides(args))
    except CompassError as exc:
        return _fail(exc)
    try:
        status, files = run_experiment(cfg, args.threads)
    except CompassError as exc:
        return _fail(exc, f"experiment {cfg.experiment}, config {cfg.hash()}")
    print(json.dumps({"status": status, "files": [str(f) for f in files]}))
    return status


if __name__ == "__main__":
    sys.exit(main())
