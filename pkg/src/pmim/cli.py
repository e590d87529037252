"""Command-line surface: simulate | train | detect | sweep."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, detector, evaluate, synth
from .detector import DetectorConfig
from .errors import DataError, PmimError, UsageError
from .errors import EXIT_DATA, EXIT_OK

FAULT_NAMES = {
    "type1": "sensor_bias",
    "type2": "gain_degradation",
    "type3": "additive_process",
    "type4": "dynamic_change",
}

ALPHA_PRESET = (0.5, 0.8, 1.01, 1.2, 3.0)
SIGMA_PRESET = (0.4, 0.5, 1.0, 100.0)
WINDOW_PRESET = (80, 100, 120, 150, 180, 200)


def _alpha_value(text: str):
    if text.strip().lower() == "shannon":
        return "shannon"
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"alpha must be a number or 'shannon', got {text!r}"
        ) from exc


def _float_grid(text: str, preset):
    if text.strip().lower() == "recommended":
        return list(preset)
    vals = [tok for tok in text.split(",") if tok.strip()]
    if not vals:
        raise UsageError("grid flag given but empty")
    return [float(tok) for tok in vals]


def _int_grid(text: str, preset):
    return [int(v) for v in _float_grid(text, preset)]


def _alpha_grid(text: str):
    if text.strip().lower() == "recommended":
        return list(ALPHA_PRESET)
    vals = [tok for tok in text.split(",") if tok.strip()]
    if not vals:
        raise UsageError("grid flag given but empty")
    return [_alpha_value(tok) for tok in vals]


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    env = os.environ.get("PMIM_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"PMIM_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise UsageError("PMIM_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: str, names, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow(row)


def _read_csv(path: str):
    """Numeric series CSV with a header row; malformed rows name their line."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"input file not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric value") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=float)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(outdir, command, config, inputs, seed=None) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {name: _sha256(p) for name, p in inputs.items()},
        "seed": seed,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _detector_config(args) -> DetectorConfig:
    return DetectorConfig(
        alpha=args.alpha,
        sigma=args.sigma,
        w=args.window,
        eta=args.eta,
        norm_p=args.norm,
        matrix_source=args.matrix,
        normalizer=args.normalizer,
    )


def _config_dict(cfg: DetectorConfig) -> dict:
    return {
        "alpha": cfg.alpha,
        "sigma": cfg.sigma,
        "w": cfg.w,
        "eta": cfg.eta,
        "norm_p": cfg.norm_p,
        "matrix_source": cfg.matrix_source,
        "normalizer": cfg.normalizer,
    }


def cmd_simulate(args) -> int:
    if args.fault != "none" and not 1 <= args.onset < args.n_test:
        raise UsageError(
            f"onset must lie in [1, n_test), got onset={args.onset} n_test={args.n_test}"
        )
    cfg = synth.SynthConfig(seed=args.seed)
    spec = None
    if args.fault != "none":
        spec = synth.FaultSpec(FAULT_NAMES[args.fault], args.onset)
    sc = synth.scenario(cfg, spec, n_train=args.n_train, n_test=args.n_test)
    outdir = _ensure_outdir(args.output_dir)
    names = [f"x{i + 1}" for i in range(sc.train.shape[1])]
    train_path = os.path.join(outdir, "train.csv")
    test_path = os.path.join(outdir, "test.csv")
    _write_csv(train_path, names, ([_fmt(v) for v in row] for row in sc.train))
    _write_csv(test_path, names, ([_fmt(v) for v in row] for row in sc.test))
    scenario_info = {
        "seed": args.seed,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "onset": sc.onset,
        "fault": dataclasses.asdict(spec) if spec is not None else None,
    }
    with open(os.path.join(outdir, "scenario.json"), "w", encoding="utf-8") as fh:
        json.dump(scenario_info, fh, indent=2)
        fh.write("\n")
    _write_manifest(outdir, "simulate", scenario_info, {}, seed=args.seed)
    print(f"wrote {train_path} ({args.n_train} samples) and {test_path} ({args.n_test} samples)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _detector_config(args)
    _, data = _read_csv(args.train_csv)
    model, train_d = detector.train_report(data, cfg, threads=_resolve_threads(args))
    outdir = _ensure_outdir(args.output_dir)
    model_path = os.path.join(outdir, "model.json")
    detector.save_model(model, model_path)
    fraction = float((train_d >= model.calibration.d_cl).mean())
    _write_manifest(outdir, "train", _config_dict(cfg), {"train_csv": args.train_csv})
    print(f"model written to {model_path}")
    print(f"D_cl {model.calibration.d_cl:.6g}  training alarm fraction {fraction:.4f}")
    return EXIT_OK


def cmd_detect(args) -> int:
    model = detector.load_model(args.model)
    header, data = _read_csv(args.test_csv)
    trace = detector.detect(model, data, threads=_resolve_threads(args))
    outdir = _ensure_outdir(args.output_dir)
    trace_path = os.path.join(outdir, "trace.csv")
    rows = []
    for t in range(len(trace)):
        causes = trace.root_causes[t]
        top = [header[e.variable] for e in causes[:3]] if causes else ["", "", ""]
        top += [""] * (3 - len(top))
        rows.append(
            [
                str(int(trace.end_indices[t])),
                _fmt(trace.d_values[t]),
                str(int(trace.alarms[t])),
                *top,
            ]
        )
    _write_csv(trace_path, ["index", "d", "alarm", "cause1", "cause2", "cause3"], rows)
    metrics = evaluate.score(trace, args.onset, model.config.w)
    metrics_path = os.path.join(outdir, "metrics.json")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(metrics), fh, indent=2)
        fh.write("\n")
    _write_manifest(
        outdir,
        "detect",
        {**_config_dict(model.config), "onset": args.onset},
        {"model": args.model, "test_csv": args.test_csv},
    )
    print(f"trace written to {trace_path} ({len(trace)} windows)")
    print(
        f"alarms {metrics.alarms}/{metrics.evaluated_windows}"
        f"  FAR {metrics.far:.4f}  FDR {metrics.fdr:.4f}"
        f"  delay {metrics.detection_delay}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _detector_config(args)
    _, train_data = _read_csv(args.train_csv)
    _, test_data = _read_csv(args.test_csv)
    alphas = _alpha_grid(args.alphas) if args.alphas is not None else None
    sigmas = _float_grid(args.sigmas, SIGMA_PRESET) if args.sigmas is not None else None
    ws = _int_grid(args.windows, WINDOW_PRESET) if args.windows is not None else None
    result = evaluate.sweep(
        train_data,
        test_data,
        args.onset,
        base,
        alphas=alphas,
        sigmas=sigmas,
        ws=ws,
        threads=_resolve_threads(args),
    )
    outdir = _ensure_outdir(args.output_dir)
    sweep_path = os.path.join(outdir, "sweep.csv")
    out_rows = []
    json_cells = []
    failures = 0
    for alpha, sigma, w, cell in result.rows():
        if isinstance(cell, str):
            failures += 1
            out_rows.append([str(alpha), _fmt(sigma), str(w), "", "", "", "", cell])
            json_cells.append(
                {"alpha": alpha, "sigma": sigma, "w": w, "error": cell}
            )
        else:
            out_rows.append(
                [
                    str(alpha),
                    _fmt(sigma),
                    str(w),
                    _fmt(cell.fdr),
                    _fmt(cell.far),
                    _fmt(cell.tfdr),
                    "" if cell.detection_delay is None else str(cell.detection_delay),
                    "",
                ]
            )
            json_cells.append(
                {"alpha": alpha, "sigma": sigma, "w": w, **dataclasses.asdict(cell)}
            )
    _write_csv(
        sweep_path,
        ["alpha", "sigma", "w", "fdr", "far", "tfdr", "delay", "error"],
        out_rows,
    )
    with open(os.path.join(outdir, "sweep.json"), "w", encoding="utf-8") as fh:
        json.dump({"cells": json_cells}, fh, indent=2)
        fh.write("\n")
    _write_manifest(
        outdir,
        "sweep",
        {**_config_dict(base), "onset": args.onset},
        {"train_csv": args.train_csv, "test_csv": args.test_csv},
    )
    total = len(out_rows)
    print(f"sweep written to {sweep_path} ({total} cells, {failures} failed)")
    if failures == total:
        print("pmim: every sweep cell failed", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_alpha_value, default=1.01,
                   help="entropy order, or 'shannon' (default 1.01)")
    p.add_argument("--sigma", type=float, default=0.5, help="kernel width (default 0.5)")
    p.add_argument("--window", type=int, default=100, help="window length w (default 100)")
    p.add_argument("--eta", type=float, default=0.05,
                   help="significance level for the control limit (default 0.05)")
    p.add_argument("--norm", choices=("l2", "linf"), default="l2",
                   help="scalarization norm (default l2)")
    p.add_argument("--matrix", choices=("renyi", "covariance"), default="renyi",
                   help="window matrix source (default renyi)")
    p.add_argument("--normalizer", choices=("zscore", "minmax"), default="zscore",
                   help="training-data scaling (default zscore)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: PMIM_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pmim",
        description="Sliding-window MI-matrix fault detection toolkit",
    )
    p.add_argument("--version", action="version", version=f"pmim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic scenario")
    sim.add_argument("--fault", choices=("none", *FAULT_NAMES), default="none")
    sim.add_argument("--onset", type=int, default=1000,
                     help="1-based test-local fault onset (default 1000)")
    sim.add_argument("--n-train", type=int, default=10000)
    sim.add_argument("--n-test", type=int, default=4000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output-dir", default=".")
    sim.set_defaults(func=cmd_simulate)

    tr = sub.add_parser("train", help="fit a detector from a training CSV")
    tr.add_argument("train_csv")
    _add_detector_flags(tr)
    tr.add_argument("--output-dir", default=".")
    tr.set_defaults(func=cmd_train)

    de = sub.add_parser("detect", help="run a trained model over a test CSV")
    de.add_argument("model")
    de.add_argument("test_csv")
    de.add_argument("--onset", type=int, default=None,
                    help="1-based fault onset for metrics (omit for clean data)")
    de.add_argument("--threads", type=int, default=None)
    de.add_argument("--output-dir", default=".")
    de.set_defaults(func=cmd_detect)

    sw = sub.add_parser("sweep", help="grid-evaluate alpha/sigma/w")
    sw.add_argument("train_csv")
    sw.add_argument("test_csv")
    sw.add_argument("--onset", type=int, default=None)
    _add_detector_flags(sw)
    sw.add_argument("--alphas", default=None,
                    help="comma list or 'recommended' (0.5,0.8,1.01,1.2,3)")
    sw.add_argument("--sigmas", default=None,
                    help="comma list or 'recommended' (0.4,0.5,1,100)")
    sw.add_argument("--windows", default=None,
                    help="comma list or 'recommended' (80,100,120,150,180,200)")
    sw.add_argument("--output-dir", default=".")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PmimError as exc:
        print(f"pmim: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
