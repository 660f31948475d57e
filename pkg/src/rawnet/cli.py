"""Command-line front door: capture -> dataset -> model -> reports.

Subcommands mirror the pipeline stages (synth, split, encode, train, eval,
bench), `sweep` runs the full 12-cell grid (3 representations x 4 header
categories) that the whole experiment design revolves around, and `verify`
proves artifacts match a config.  Exit codes are category-coded:

    0 success            4 malformed input/artifact
    2 usage              5 constraint violation (shapes, class sizes, ...)
    3 missing input      6 training diverged
    7 bench lock held    8 verification mismatch
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import splitter
from .bench import BenchLockHeldError, bench_inference, write_bench_report
from .config import ConfigError, PipelineConfig, load_config
from .encoder import (BadHexLineError, ClassTooSmallError, EncodingError,
                      HeaderCategory, build_dataset, export_hex, import_hex,
                      write_dataset_manifest)
from .ingest import PcapError, read_pcap
from .metrics import (GRID_CATEGORIES, GRID_REPRESENTATIONS, MetricsReport,
                      REFERENCE_BINARY_IOT23, REFERENCE_MULTILABEL_IOT23,
                      confusion, emit_report, metrics, write_metrics_report)
from .nn import (CorruptModelFileError, DivergedLossError,
                 ShapeMismatchError, load_model, predict_batch,
                 read_model_header, save_model, train, write_history)
from .splitter import Representation
from .synth import SpecConflictError, generate_fixture, write_class_captures

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_BAD_FORMAT = 4
EXIT_CONSTRAINT = 5
EXIT_DIVERGED = 6
EXIT_LOCK = 7
EXIT_VERIFY = 8

_REFERENCES = {"none": None, "binary": REFERENCE_BINARY_IOT23,
               "multilabel": REFERENCE_MULTILABEL_IOT23}


def cell_tag(rep: Representation, cat: HeaderCategory) -> str:
    return f"{rep.value}_{cat.value}"


def dataset_path(cfg, rep, cat):
    return os.path.join(cfg.out_dir, f"dataset_{cell_tag(rep, cat)}.hex")


def model_path(cfg, rep, cat):
    return os.path.join(cfg.out_dir, f"model_{cell_tag(rep, cat)}.rwnet")


def history_path(cfg, rep, cat):
    return os.path.join(cfg.out_dir, f"history_{cell_tag(rep, cat)}.csv")


def metrics_path(cfg, rep, cat):
    return os.path.join(cfg.out_dir, f"metrics_{cell_tag(rep, cat)}.txt")


def _encode(cfg: PipelineConfig, rep, cat):
    cfg.validate_scenarios()
    ds = build_dataset(cfg.scenarios, rep, cat, cfg.sample_len, cfg.ratios,
                       cfg.seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = dataset_path(cfg, rep, cat)
    export_hex(ds, path, extra_header={"config_hash": cfg.config_hash()})
    write_dataset_manifest(ds, path + ".manifest",
                           extra=[f"# {line}" for line in cfg.header_lines()])
    return ds, path


def _train(cfg: PipelineConfig, ds, rep, cat):
    nc = cfg.network_config(ds.n_classes)
    try:
        net, history = train(ds, nc, cfg.train_config())
    except DivergedLossError as exc:
        # Keep what we learned before the blow-up for post-mortems.
        os.makedirs(cfg.out_dir, exist_ok=True)
        write_history(exc.history, history_path(cfg, rep, cat),
                      cfg.header_lines() + ["diverged=1"])
        raise
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_model(net, model_path(cfg, rep, cat),
               extra={"config_hash": cfg.config_hash(), "seed": cfg.seed})
    write_history(history, history_path(cfg, rep, cat), cfg.header_lines())
    return net, history


def _eval(cfg: PipelineConfig, net, ds, rep, cat):
    x_test, y_test = ds.arrays("test")
    probs = predict_batch(net, x_test, cfg.batch_size)
    cm = confusion(probs.argmax(axis=1), y_test, ds.n_classes)
    report = metrics(cm)
    write_metrics_report(report, ds.classes, metrics_path(cfg, rep, cat),
                         cfg.header_lines())
    return report


def _run_cell(cfg_args: tuple) -> tuple:
    """Worker entry for one sweep cell; returns picklable metric numbers."""
    config_path, overrides, rep_value, cat_value = cfg_args
    cfg = load_config(config_path, overrides)
    rep = Representation(rep_value)
    cat = HeaderCategory(cat_value)
    ds, _ = _encode(cfg, rep, cat)
    net, _ = _train(cfg, ds, rep, cat)
    report = _eval(cfg, net, ds, rep, cat)
    return (rep_value, cat_value, report.accuracy, report.weighted_f1,
            report.precision.tolist(), report.recall.tolist(),
            report.f1.tolist(), report.support.tolist())


def cmd_synth(cfg: PipelineConfig, args) -> int:
    spec = cfg.synth_spec()
    out_dir = os.path.join(cfg.out_dir, "captures")
    scenarios = write_class_captures(spec, out_dir)
    for path, label in scenarios:
        print(f"wrote {path} (class {label})")
    if args.combined:
        n = generate_fixture(spec, args.combined)
        print(f"wrote {args.combined} ({n} packets, all classes)")
    print("scenario lines for your config:")
    for path, label in scenarios:
        print(f"scenario = {path},{label}")
    return EXIT_OK


def cmd_split(cfg: PipelineConfig, args) -> int:
    cfg.validate_scenarios()
    os.makedirs(cfg.out_dir, exist_ok=True)
    for path, label in cfg.scenarios:
        try:
            result = splitter.split(read_pcap(path), cfg.representation)
        except PcapError as exc:
            raise PcapError(f"{path}: {exc}") from exc
        manifest = os.path.join(
            cfg.out_dir, f"split_{label}_{cfg.representation.value}.txt")
        splitter.write_manifest(result, manifest, cfg.header_lines())
        print(f"{path}: {len(result.units)} {cfg.representation.value} units, "
              f"{result.n_excluded} of {result.n_packets} packets excluded "
              f"-> {manifest}")
    return EXIT_OK


def cmd_encode(cfg: PipelineConfig, args) -> int:
    ds, path = _encode(cfg, cfg.representation, cfg.category)
    counts = ", ".join(f"{k}={v}" for k, v in ds.class_counts().items())
    print(f"dataset {path}: {len(ds.samples)} samples ({counts}), "
          f"splits {[len(ds.splits[s]) for s in ('train', 'val', 'test')]}")
    return EXIT_OK


def cmd_train(cfg: PipelineConfig, args) -> int:
    ds_path = args.dataset or dataset_path(cfg, cfg.representation,
                                           cfg.category)
    if not os.path.exists(ds_path):
        raise FileNotFoundError(
            f"dataset {ds_path} not found; run `rawnet encode` first")
    ds = import_hex(ds_path)
    net, history = _train(cfg, ds, cfg.representation, cfg.category)
    print(f"trained {history.epochs_run} epochs "
          f"({net.param_count} parameters), best epoch "
          f"{history.best_epoch} val_acc={history.val_acc[history.best_epoch]:.4f} "
          f"-> {model_path(cfg, cfg.representation, cfg.category)}")
    return EXIT_OK


def _load_model_and_dataset(cfg, args):
    ds_path = args.dataset or dataset_path(cfg, cfg.representation,
                                           cfg.category)
    mdl_path = args.model or model_path(cfg, cfg.representation, cfg.category)
    for path in (ds_path, mdl_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"required artifact missing: {path}")
    return load_model(mdl_path), import_hex(ds_path)


def cmd_eval(cfg: PipelineConfig, args) -> int:
    net, ds = _load_model_and_dataset(cfg, args)
    report = _eval(cfg, net, ds, cfg.representation, cfg.category)
    print(f"accuracy={report.accuracy:.4f} weighted_f1={report.weighted_f1:.4f} "
          f"on {report.n_samples} test samples "
          f"-> {metrics_path(cfg, cfg.representation, cfg.category)}")
    return EXIT_OK


def cmd_bench(cfg: PipelineConfig, args) -> int:
    net, ds = _load_model_and_dataset(cfg, args)
    x_test, _ = ds.arrays("test")
    report = bench_inference(net, x_test, cfg.bench_repetitions,
                             cfg.batch_size, lock_path=cfg.bench_lock)
    path = os.path.join(
        cfg.out_dir,
        f"bench_{cell_tag(cfg.representation, cfg.category)}.txt")
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_bench_report(report, path, cfg.header_lines())
    print(f"median wall {report.wall_test_seconds:.4f}s over "
          f"{report.repetitions} runs, {report.samples_per_second:.1f} "
          f"samples/s, utilization {report.utilization:.2f} -> {path}")
    return EXIT_OK


def cmd_sweep(cfg: PipelineConfig, args) -> int:
    cfg.validate_scenarios()
    if cfg.reference not in _REFERENCES:
        raise ConfigError(f"reference must be one of {sorted(_REFERENCES)}, "
                          f"got {cfg.reference!r}")
    cells = [(args.config, args.set or [], rep.value, cat.value)
             for rep in GRID_REPRESENTATIONS for cat in GRID_CATEGORIES]
    jobs = cfg.jobs or min(4, os.cpu_count() or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]
    results = []
    for rep_value, cat_value, acc, wf1, prec, rec, f1, support in rows:
        report = MetricsReport(acc, np.array(prec), np.array(rec),
                               np.array(f1), wf1, np.array(support))
        results.append((Representation(rep_value), HeaderCategory(cat_value),
                        report))
    grid_path = os.path.join(cfg.out_dir, "grid.txt")
    emit_report(results, grid_path, _REFERENCES[cfg.reference],
                cfg.header_lines())
    print(f"12-cell grid -> {grid_path} (+ .csv)")
    return EXIT_OK


def cmd_verify(cfg: PipelineConfig, args) -> int:
    expected = cfg.config_hash()
    failures = 0
    for path in args.artifacts:
        if not os.path.exists(path):
            print(f"MISSING  {path}")
            failures += 1
            continue
        embedded = _embedded_hash(path)
        if embedded is None:
            print(f"NOHASH   {path}")
            failures += 1
        elif embedded != expected:
            print(f"MISMATCH {path}: artifact {embedded}, config {expected}")
            failures += 1
        else:
            print(f"OK       {path}")
    return EXIT_VERIFY if failures else EXIT_OK


def _embedded_hash(path: str) -> str | None:
    with open(path, "rb") as fp:
        head = fp.read(5)
    if head == b"RWNET":
        header = read_model_header(path)  # also re-checks the checksum
        return header.get("extra", {}).get("config_hash")
    with open(path, errors="replace") as fp:
        for line in fp:
            line = line.strip().lstrip("#").strip()
            if line.startswith("config_hash="):
                return line.partition("=")[2]
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rawnet",
        description="Raw-byte traffic classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.set_defaults(func=func)
        return p

    add("synth", cmd_synth, "generate labeled synthetic captures") \
        .add_argument("--combined", metavar="PCAP",
                      help="also write all classes into one capture file")
    add("split", cmd_split, "split captures into traffic units")
    add("encode", cmd_encode, "build a labeled byte dataset")
    p = add("train", cmd_train, "train the classifier on an encoded dataset")
    p.add_argument("--dataset", help="hex dataset path (default: derived)")
    for name, func in (("eval", cmd_eval), ("bench", cmd_bench)):
        p = add(name, func, f"{name} a trained model on the test split")
        p.add_argument("--model", help="model file (default: derived)")
        p.add_argument("--dataset", help="hex dataset path (default: derived)")
    add("sweep", cmd_sweep,
        "run all 12 representation x category cells and emit the grid")
    add("verify", cmd_verify,
        "check artifacts embed this config's hash") \
        .add_argument("artifacts", nargs="+", help="artifact files to check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        return args.func(cfg, args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (PcapError, BadHexLineError, ConfigError,
            CorruptModelFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FORMAT
    except DivergedLossError as exc:
        print(f"error: {exc} (partial history retained)", file=sys.stderr)
        return EXIT_DIVERGED
    except BenchLockHeldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOCK
    except (ClassTooSmallError, EncodingError, SpecConflictError,
            ShapeMismatchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
