"""Command-line surface tying the pipeline together.

Subcommands: simulate, sweep, train, fit-rabi, predict, evaluate, repair.
Exit status is 0 on success, 1 on usage errors, 2 on data/domain errors.
All randomness is controlled by ``--seed``; rerunning any pipeline with
the same inputs and seeds produces byte-identical output files.

Defaults can also come from a flat key=value config file with section
headers (see docs/config-format.md); explicit flags win over the config.
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path

from . import io as nvio
from .errors import ReadoutError
from .evaluation import evaluate, repair
from .gating import sweep_gate
from .rabi import assign_targets, fit_rabi, simulate_rabi_dataset
from .regression import TrainConfig, predict, train_boundary, train_rabi
from .traces import (PhotodynamicsParams, make_profiles, paper_like_params,
                     simulate_trace)

__all__ = ["main", "RunConfig", "load_config"]

VERSION = "0.1.0"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# seed offsets so every simulated file gets its own deterministic stream
_SEED_BRIGHT = 0
_SEED_DARK = 1
_SEED_RABI_BASE = 1000


@dataclass
class RunConfig:
    """Pipeline defaults loadable from a config file."""

    params: PhotodynamicsParams
    repetitions: int = 1_000_000
    seed: int = 0
    rabi_points: int = 60
    rabi_period_ns: float = 200.0
    rabi_span_ns: float = 600.0
    rabi_repetitions: int | None = None
    start_bin: int = 0
    train: TrainConfig = TrainConfig()


def load_config(path) -> RunConfig:
    """Read a key=value config file with [profile]/[simulate]/[train]/[sweep] sections."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ReadoutError(f"config file not found: {path}")

    profile_kwargs = {}
    if parser.has_section("profile"):
        for f in dataclass_fields(PhotodynamicsParams):
            if parser.has_option("profile", f.name):
                profile_kwargs[f.name] = parser.getfloat("profile", f.name)
    params = paper_like_params() if not profile_kwargs else PhotodynamicsParams(**profile_kwargs)

    cfg = RunConfig(params=params)
    if parser.has_section("simulate"):
        s = parser["simulate"]
        cfg.repetitions = int(float(s.get("repetitions", cfg.repetitions)))
        cfg.seed = int(s.get("seed", cfg.seed))
        cfg.rabi_points = int(s.get("rabi_points", cfg.rabi_points))
        cfg.rabi_period_ns = float(s.get("rabi_period_ns", cfg.rabi_period_ns))
        cfg.rabi_span_ns = float(s.get("rabi_span_ns", cfg.rabi_span_ns))
        if "rabi_repetitions" in s:
            cfg.rabi_repetitions = int(float(s["rabi_repetitions"]))
    if parser.has_section("sweep"):
        cfg.start_bin = int(parser["sweep"].get("start_bin", cfg.start_bin))
    if parser.has_section("train"):
        t = parser["train"]
        cfg.train = TrainConfig(
            weight_factor=float(t.get("weight_factor", TrainConfig.weight_factor)),
            learning_rate=float(t.get("learning_rate", TrainConfig.learning_rate)),
            max_iterations=int(float(t.get("max_iterations", TrainConfig.max_iterations))),
            relative_tolerance=float(t.get("relative_tolerance", TrainConfig.relative_tolerance)),
            init=t.get("init", TrainConfig.init),
        )
    return cfg


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nvreadout",
                     description="Time-resolved photon trace readout toolkit")
    schemas = " ".join(f"{k}=v{v}" for k, v in sorted(nvio.FORMAT_VERSIONS.items()))
    parser.add_argument("--version", action="version",
                        version=f"nvreadout {VERSION} (file schemas: {schemas})")
    parser.add_argument("--threads", type=int, default=1,
                        help="upper bound on worker threads (current pipeline "
                             "is single-threaded; outputs never depend on this)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit boundary and/or oscillation trace files")
    p.add_argument("--preset", default="paper-like", choices=["paper-like"],
                   help="simulator calibration preset")
    p.add_argument("--config", help="config file overriding the preset")
    p.add_argument("--reps", type=float, help="measurement repetitions")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--what", default="boundary", choices=["boundary", "rabi", "both"])
    p.add_argument("--rabi-points", type=int)
    p.add_argument("--rabi-period-ns", type=float)
    p.add_argument("--rabi-span-ns", type=float)
    p.add_argument("--rabi-reps", type=float,
                   help="repetitions for oscillation points (default: --reps)")

    p = sub.add_parser("sweep", help="gate-width sweep over boundary traces")
    p.add_argument("--trace0", required=True, help="bright boundary trace CSV")
    p.add_argument("--trace1", required=True, help="dark boundary trace CSV")
    p.add_argument("--start-bin", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a weighted readout model")
    p.add_argument("--mode", required=True, choices=["boundary", "rabi"])
    p.add_argument("--trace0", help="bright boundary trace CSV (boundary mode)")
    p.add_argument("--trace1", help="dark boundary trace CSV (boundary mode)")
    p.add_argument("--rabi", help="oscillation dataset CSV (rabi mode)")
    p.add_argument("--config", help="config file with a [train] section")
    p.add_argument("--weight-factor", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-iterations", type=float)
    p.add_argument("--tolerance", type=float, help="relative loss tolerance")
    p.add_argument("--init", choices=["gated-equal-weights", "zeros"])
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("fit-rabi", help="sinusoid fit of an oscillation dataset")
    p.add_argument("--rabi", required=True)
    p.add_argument("--out", required=True, help="fit report CSV")

    p = sub.add_parser("predict", help="apply a model to one trace")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True)

    p = sub.add_parser("evaluate", help="compare gated baselines and a model")
    p.add_argument("--rabi", required=True, help="test dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--trace0", required=True, help="bright boundary trace CSV")
    p.add_argument("--trace1", required=True, help="dark boundary trace CSV")
    p.add_argument("--truth", help="truth CSV for ground-truth errors")
    p.add_argument("--start-bin", type=int, default=0)
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--summary", help="optional human-readable summary file")

    p = sub.add_parser("repair", help="original vs model-repaired oscillation")
    p.add_argument("--rabi", required=True, help="test dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--trace0", required=True)
    p.add_argument("--trace1", required=True)
    p.add_argument("--start-bin", type=int, default=0)
    p.add_argument("--out", required=True, help="repair CSV")
    return parser


def _check_distinct_output(out_path, *input_paths) -> None:
    out = Path(out_path).resolve()
    for p in input_paths:
        if p and Path(p).resolve() == out:
            raise ReadoutError(f"output path {out_path} would overwrite input {p}")


def _train_config(args, base: TrainConfig) -> TrainConfig:
    def pick(flag, current):
        return current if flag is None else flag
    return TrainConfig(
        weight_factor=pick(args.weight_factor, base.weight_factor),
        learning_rate=pick(args.learning_rate, base.learning_rate),
        max_iterations=int(pick(args.max_iterations, base.max_iterations)),
        relative_tolerance=pick(args.tolerance, base.relative_tolerance),
        init=pick(args.init, base.init),
    )


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig(params=paper_like_params())
    if args.reps is not None:
        cfg.repetitions = int(args.reps)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.rabi_points is not None:
        cfg.rabi_points = args.rabi_points
    if args.rabi_period_ns is not None:
        cfg.rabi_period_ns = args.rabi_period_ns
    if args.rabi_span_ns is not None:
        cfg.rabi_span_ns = args.rabi_span_ns
    rabi_reps = cfg.rabi_repetitions or cfg.repetitions
    if args.rabi_reps is not None:
        rabi_reps = int(args.rabi_reps)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile0, profile1 = make_profiles(cfg.params)

    if args.what in ("boundary", "both"):
        bright = simulate_trace(profile0, cfg.repetitions, cfg.seed + _SEED_BRIGHT,
                                label="boundary bright")
        dark = simulate_trace(profile1, cfg.repetitions, cfg.seed + _SEED_DARK,
                              label="boundary dark")
        nvio.write_trace_csv(out / "boundary0.csv", bright)
        nvio.write_trace_csv(out / "boundary1.csv", dark)
        print(f"wrote {out / 'boundary0.csv'} and {out / 'boundary1.csv'}")
    if args.what in ("rabi", "both"):
        dataset, truth = simulate_rabi_dataset(
            profile0, profile1, rabi_reps, cfg.seed + _SEED_RABI_BASE,
            points=cfg.rabi_points, period_ns=cfg.rabi_period_ns,
            span_ns=cfg.rabi_span_ns)
        nvio.write_rabi_csv(out / "rabi.csv", dataset)
        nvio.write_truth_csv(out / "rabi_truth.csv", dataset.durations, truth)
        print(f"wrote {out / 'rabi.csv'} and {out / 'rabi_truth.csv'}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    _check_distinct_output(args.out, args.trace0, args.trace1)
    trace0 = nvio.read_trace_csv(args.trace0)
    trace1 = nvio.read_trace_csv(args.trace1)
    result = sweep_gate(trace0, trace1, args.start_bin)
    nvio.write_sweep_csv(args.out, result)
    if result.max_contrast is None:
        print("sweep: every width degenerate")
    else:
        mc, mv = result.max_contrast, result.min_variance
        print(f"max contrast {mc.contrast:.4f} at "
              f"{mc.window.width_bins * result.bin_width_ns:g} ns; "
              f"min total variance {mv.total_variance:.6g} at "
              f"{mv.window.width_bins * result.bin_width_ns:g} ns")
    return EXIT_OK


def _cmd_train(args) -> int:
    base = load_config(args.config).train if args.config else TrainConfig()
    config = _train_config(args, base)
    if args.mode == "boundary":
        if not args.trace0 or not args.trace1:
            raise ReadoutError("boundary mode needs --trace0 and --trace1")
        _check_distinct_output(args.out, args.trace0, args.trace1)
        trace0 = nvio.read_trace_csv(args.trace0)
        trace1 = nvio.read_trace_csv(args.trace1)
        if trace0.counts.sum() / trace0.repetitions < \
                trace1.counts.sum() / trace1.repetitions:
            print("warning: bright boundary trace has fewer photons per "
                  "measurement than the dark one (negative contrast); check "
                  "for swapped inputs", file=sys.stderr)
        model = train_boundary(trace0, trace1, config)
    else:
        if not args.rabi:
            raise ReadoutError("rabi mode needs --rabi")
        _check_distinct_output(args.out, args.rabi)
        dataset = nvio.read_rabi_csv(args.rabi)
        sums = [trace.counts.sum() / trace.repetitions for _, trace in dataset.points]
        fit = fit_rabi(dataset.durations, sums)
        examples = assign_targets(dataset, fit)
        dataset = dataset.with_fit(fit, [ex.target for ex in examples])
        bright = dataset.points[int(np.argmax(dataset.targets))][1]
        dark = dataset.points[int(np.argmin(dataset.targets))][1]
        if bright.counts.sum() < dark.counts.sum():
            print("warning: peak-target trace has fewer photons than the "
                  "trough-target trace; oscillation data may be inverted",
                  file=sys.stderr)
        model = train_rabi(dataset, config)
    nvio.write_model(args.out, model)
    print(f"wrote {args.out} ({model.trained_on})")
    return EXIT_OK


def _cmd_fit_rabi(args) -> int:
    _check_distinct_output(args.out, args.rabi)
    dataset = nvio.read_rabi_csv(args.rabi)
    sums = [trace.counts.sum() / trace.repetitions for _, trace in dataset.points]
    fit = fit_rabi(dataset.durations, sums)
    nvio.write_fit_csv(args.out, dataset.durations, sums, fit)
    print(f"fit: frequency={fit.frequency:.6g}/ns "
          f"period={1.0 / fit.frequency:.6g} ns residual_rms={fit.residual_rms:.4g}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = nvio.read_model(args.model)
    trace = nvio.read_trace_csv(args.trace)
    from .regression import prediction_variance
    p = predict(model, trace)
    v = prediction_variance(model, trace)
    print(f"population={p!r} variance={v!r}")
    return EXIT_OK


def _optimal_windows(args):
    trace0 = nvio.read_trace_csv(args.trace0)
    trace1 = nvio.read_trace_csv(args.trace1)
    sweep = sweep_gate(trace0, trace1, args.start_bin)
    if sweep.max_contrast is None:
        raise ReadoutError("boundary sweep is fully degenerate; cannot pick windows")
    return trace0, trace1, sweep.max_contrast.window, sweep.min_variance.window


def _cmd_evaluate(args) -> int:
    _check_distinct_output(args.out, args.rabi, args.trace0, args.trace1, args.truth)
    test = nvio.read_rabi_csv(args.rabi)
    model = nvio.read_model(args.model)
    trace0, trace1, w_maxc, w_minv = _optimal_windows(args)
    truth = None
    if args.truth:
        durations, truth = nvio.read_truth_csv(args.truth)
        if len(durations) != len(test):
            raise ReadoutError("truth file length differs from test dataset")
    report = evaluate(test, model, w_maxc, w_minv, trace0, trace1, truth)
    nvio.write_report_csv(args.out, report)
    if args.summary:
        nvio.write_report_summary(args.summary, report)
    for m in report.methods:
        print(f"{m.method}: variance={m.avg_formula_variance:.6e} "
              f"mse={m.empirical_mse:.6e} contrast={m.contrast_measured:.4f}")
    return EXIT_OK


def _cmd_repair(args) -> int:
    _check_distinct_output(args.out, args.rabi, args.trace0, args.trace1)
    test = nvio.read_rabi_csv(args.rabi)
    model = nvio.read_model(args.model)
    trace0, trace1, _, w_minv = _optimal_windows(args)
    result = repair(test, model, w_minv, trace0, trace1)
    nvio.write_repair_csv(args.out, result)
    print(f"rms vs own fit: original={result.rms_original:.6g} "
          f"repaired={result.rms_repaired:.6g}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "train": _cmd_train,
    "fit-rabi": _cmd_fit_rabi,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "repair": _cmd_repair,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse --version/-h exit 0, errors exit 1
        return int(exc.code or 0)
    if args.threads < 1:
        print("nvreadout: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ReadoutError as exc:
        print(f"nvreadout: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"nvreadout: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
