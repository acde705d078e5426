"""Command-line entry point.

    steinpoints generate --config CFG --out DIR [--seed S]
    steinpoints evaluate --config CFG --points points.csv [--reference ref.csv] --out DIR
    steinpoints sweep    --config CFG --out DIR [--jobs N]

Exit codes: 0 ok, 1 invalid config or input, 2 runtime failure, 3 partial
result (evaluation budget exhausted early).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, dump_json, seed_for
from .evaluation import ReferenceSample, SweepConfig, run_sweep
from .experiment import (build_kernel, build_target, evaluate_points, make_reference,
                         run_method)
from .targets import DataFormatError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("steinpoints")


def write_points(points, path) -> None:
    X = np.atleast_2d(points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def read_points(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ConfigError("--points", f"file not found: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if not rows:
                    continue  # header
                raise DataFormatError(f"{path}:{lineno}: non-numeric value in {row}") from None
    if not rows:
        raise DataFormatError(f"{path}: no points")
    if len({len(r) for r in rows}) != 1:
        raise DataFormatError(f"{path}: rows have different lengths")
    return np.array(rows)


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seeds = [int(args.seed)]
        cfg.validate()
    return cfg.resolve()


def _out_dir(args, cfg) -> Path:
    out = args.out or cfg.output
    if out is None:
        raise ConfigError("--out", "no output directory given (flag or config field 'output')")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    seed = seed_for(cfg, None)
    target = build_target(cfg)
    points, trace = run_method(cfg, target, seed)
    write_points(points, out / "points.csv")
    trace.to_csv(out / "trace.csv")
    cfg.seeds = [seed]
    manifest = {"version": __version__, "seed": seed, "method": cfg.method,
                "partial": bool(trace.partial), "switchover": trace.switchover,
                "n_points": int(len(points)), "n_eval": int(trace.n_eval),
                "final_ksd": float(trace.final_ksd), "config": cfg.to_dict()}
    dump_json(manifest, out / "manifest.json")
    log.info("%s: %d points, n_eval=%d, KSD=%.6g -> %s", cfg.method, len(points),
             trace.n_eval, trace.final_ksd, out)
    if trace.partial:
        log.warning("evaluation budget ran out before %d points were placed", cfg.n_points)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    target = build_target(cfg)
    points = read_points(args.points)
    if points.shape[1] != target.dim:
        raise ConfigError("--points", f"points have dimension {points.shape[1]}, "
                                      f"target has {target.dim}")
    reference = (ReferenceSample.from_csv(args.reference) if args.reference
                 else make_reference(cfg, target))
    report = evaluate_points(points, target, [build_kernel(cfg)], reference)
    report["reference_n"] = len(reference)
    report["reference_provenance"] = reference.provenance
    dump_json(report, out / "report.json")
    if not args.quiet:
        for k, v in report.items():
            print(f"{k}\t{v}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    target = build_target(cfg)
    reference = make_reference(cfg, target)
    sw = cfg.sweep
    sweep = SweepConfig(sw["alpha_multipliers"], sw["betas"], sw["eta"], sw["family"])

    def method(tgt, kernel, n, seed):
        return run_method(cfg, tgt, seed, kernel=kernel, n_points=n)

    result = run_sweep(method, target, sweep, reference, cfg.n_points, cfg.seeds,
                       jobs=args.jobs)
    result.to_csv(out / "sweep.csv")
    best = result.best
    failed = sum(r["status"].startswith("error") for r in result.rows)
    dump_json({"version": __version__, "method": cfg.method, "best": best,
               "n_cells": len(result.rows), "n_failed": failed,
               "config": cfg.to_dict()}, out / "best.json")
    if best is None:
        log.error("every sweep cell failed")
        return EXIT_RUNTIME
    log.info("best cell alpha=%g beta=%g seed=%d W=%.6g", best["alpha"], best["beta"],
             best["seed"], best["wasserstein"])
    if any(r["status"] == "partial" for r in result.rows):
        return EXIT_PARTIAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steinpoints",
                                description="Stein Point sequences and baselines")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("generate", cmd_generate), ("evaluate", cmd_evaluate),
                     ("sweep", cmd_sweep)):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML/JSON config or run manifest")
        s.add_argument("--out", help="output directory (overrides config 'output')")
        s.add_argument("--seed", type=int, help="override the config seed list")
        s.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel sweep cells (default: available cores)")
        s.add_argument("--quiet", action="store_true")
        s.set_defaults(func=fn)
        if name == "evaluate":
            s.add_argument("--points", required=True, help="points CSV to evaluate")
            s.add_argument("--reference", help="reference sample CSV (default: from config)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", force=True)
    if args.jobs < 1:
        print("error: --jobs: must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, DataFormatError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as err:  # noqa: BLE001
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
