"""Command-line entry point: ``pdmd {generate,train,predict,evaluate,compare}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 divergence
detected in a baseline (reports are still written). Errors are printed to
standard error as one JSON record.
"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from . import pipeline
from .config import load_config
from .errors import DivergenceDetected, InvalidInput, NumericalFailure
from .io import SnapshotRecord, atomic_write_text, canonical_json, load_model, read_snapshots, write_snapshots
from .metrics import make_report

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_DIVERGED = 0, 2, 3, 4

log = logging.getLogger("pdmd")


def _error_record(exc, **extra):
    rec = {"error": type(exc).__name__, "message": str(exc)}
    theta = getattr(exc, "theta", None)
    if theta is not None:
        rec["theta"] = [float(v) for v in np.atleast_1d(theta)]
    rec.update(extra)
    return rec


def _emit_error(rec):
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _configs(args):
    paths = args.config or []
    if not paths:
        raise InvalidInput("--config is required")
    return [load_config(p, seed=args.seed, output_dir=args.out if len(paths) == 1 else None) for p in paths]


def cmd_generate(args):
    for cfg in _configs(args):
        m = pipeline.generate_data(cfg)
        print(f"wrote {len(m['files'])} snapshot files to {Path(cfg.output_dir) / 'data'}")
    return EXIT_OK


def cmd_train(args):
    for cfg in _configs(args):
        tl = pipeline.train_models(cfg, strict=args.strict_warnings)
        for ent in tl["methods"]:
            extra = f" residual={ent['training_residual']:.3e}" if "training_residual" in ent else ""
            print(f"{ent['method']}: {len(ent['files'])} model file(s){extra}")
    return EXIT_OK


def _summarize(reports):
    for row in pipeline.compare_methods(reports):
        print(f"{row.method:8s} n={row.count} divergent={row.divergent} median={row.median:.3e}")


def cmd_evaluate(args):
    code = EXIT_OK
    for cfg in _configs(args):
        if args.strict_warnings:
            pipeline.train_models(cfg, strict=True)
        reports = pipeline.evaluate(cfg)
        _summarize(reports)
        if pipeline.baseline_diverged(reports):
            code = EXIT_DIVERGED
    return code


def cmd_compare(args):
    cfgs = _configs(args)
    if args.strict_warnings:
        for cfg in cfgs:
            pipeline.train_models(cfg, strict=True)
    reports, _ = pipeline.compare(cfgs, out_dir=args.out)
    _summarize(reports)
    return EXIT_DIVERGED if pipeline.baseline_diverged(reports) else EXIT_OK


def cmd_predict(args):
    mf = load_model(args.model)
    src = read_snapshots(args.x0)
    if not 0 <= args.x0_index < src.states.shape[1]:
        raise InvalidInput(f"--x0-index {args.x0_index} out of range")
    x0 = src.states[:, args.x0_index]
    theta = np.asarray(args.theta if args.theta is not None else src.theta, dtype=float)
    truth = None
    if args.truth:
        t = read_snapshots(args.truth).states
        k0 = args.x0_index
        if t.shape[1] < k0 + args.steps + 1:
            raise InvalidInput("truth file is shorter than the requested horizon")
        truth = t[:, k0 : k0 + args.steps + 1]
    dt = getattr(mf.model, "dt", None) or getattr(getattr(mf.model, "global_model", None), "dt", 1.0)
    try:
        pred = pipeline.predict_with(mf.model, theta, x0, args.steps)
        code, note = EXIT_OK, ""
    except DivergenceDetected as exc:
        _emit_error(_error_record(exc, method=mf.method))
        pred = exc.trajectory
        code, note = (EXIT_DIVERGED if mf.method in pipeline.BASELINES else EXIT_NUMERICAL), f"DivergenceDetected: {exc}"
    except NumericalFailure as exc:
        _emit_error(_error_record(exc, method=mf.method))
        pred = None
        code, note = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    if pred is not None:
        write_snapshots(args.out, SnapshotRecord(pred, dt, theta, f"{mf.method} prediction"))
    if args.report:
        frag = {"method": mf.method, "theta": [float(v) for v in theta], "steps": args.steps, "note": note}
        if truth is not None:
            p = pred if pred is not None else np.full_like(truth, np.nan)
            frag.update(make_report(mf.method, theta, truth, p, note=note,
                                    force_divergent=code != EXIT_OK).to_dict())
        atomic_write_text(args.report, canonical_json(frag) + "\n")
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", help="run config JSON (repeat for compare)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--strict-warnings", action="store_true",
                        help="treat identifiability/rank warnings as errors (exit 2)")
    ap = argparse.ArgumentParser(prog="pdmd", description="Parametric DMD benchmark pipeline.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write snapshot files").set_defaults(func=cmd_generate)
    sub.add_parser("train", parents=[common], help="fit models").set_defaults(func=cmd_train)
    sub.add_parser("evaluate", parents=[common], help="predict test parameters").set_defaults(func=cmd_evaluate)
    sub.add_parser("compare", parents=[common], help="tables and plots").set_defaults(func=cmd_compare)

    pr = sub.add_parser("predict", help="predict from a model file")
    pr.add_argument("--model", required=True)
    pr.add_argument("--theta", type=float, nargs="+", help="parameter (defaults to the x0 file's)")
    pr.add_argument("--x0", required=True, help="snapshot file holding the initial condition")
    pr.add_argument("--x0-index", type=int, default=0)
    pr.add_argument("--steps", type=int, required=True)
    pr.add_argument("--out", required=True, help="predicted snapshot file")
    pr.add_argument("--truth", help="snapshot file to score against")
    pr.add_argument("--report", help="JSON report fragment path")
    pr.set_defaults(func=cmd_predict)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    log.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        return args.func(args)
    except InvalidInput as exc:
        _emit_error(_error_record(exc))
        return EXIT_INVALID
    except NumericalFailure as exc:
        _emit_error(_error_record(exc))
        return EXIT_NUMERICAL
    except OSError as exc:
        _emit_error(_error_record(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
