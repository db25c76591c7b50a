"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import secrets
import sys
import time
from pathlib import Path

import yaml

from . import __version__
from .acker import AckerConfig, acker_classify_batch
from .data_io import CsvSchema, SyntheticSpec, atomic_write, generate, load_csv, load_points, write_csv
from .evaluation import (Acker, StandardKnn, SweepReport, pearson_r, roc_auc, run_cv,
                         sweep_fixed_k, sweep_kmax, sweep_l, sweep_roc)
from .feature_index import KRange, build_feature_index
from .features import FeatureKind
from .geo import DataError, ParameterError
from .kernels import default as default_backend
from .knn import TrainingSet, knn_predict

log = logging.getLogger("geoacker")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

# options that do not change results and stay out of the config hash
_NOT_HASHED = {"out", "threads", "config", "verbose", "func"}


class ConfigError(ParameterError):
    pass


def _int_list(text: str) -> list[int]:
    return list(KRange.parse(str(text)))


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data source")
    g.add_argument("--data", help="labeled CSV file")
    g.add_argument("--synthetic", choices=["separable_halves",
                                           "noisy_dense_plus_sparse_checkerboard",
                                           "uniform_random_labels"],
                   help="generate the dataset instead of reading it")
    g.add_argument("--n-points", type=int, default=6000)
    g.add_argument("--classes", type=int, default=2)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--synth-seed", type=int, default=0)
    s = p.add_argument_group("CSV schema")
    s.add_argument("--lon-col", default="lon")
    s.add_argument("--lat-col", default="lat")
    s.add_argument("--label-col", default="label")
    s.add_argument("--delimiter", default=",")
    s.add_argument("--no-header", action="store_true")


def _add_method_args(p: argparse.ArgumentParser, method: bool = True) -> None:
    g = p.add_argument_group("method")
    if method:
        g.add_argument("--method", choices=["knn", "acker"], default="acker")
        g.add_argument("--k", type=int, default=1, help="k for standard kNN")
    g.add_argument("--feature", default="max_avg_comb",
                   help="avg_dist, max_dist, max_avg_comb or lat_lon")
    g.add_argument("--range", default="1..50", help="candidate k: '1..200' or '1,5,10'")
    g.add_argument("--l", type=int, default=100, help="number of similar training points")


def _add_run_args(p: argparse.ArgumentParser, folds: bool = True) -> None:
    g = p.add_argument_group("run")
    if folds:
        g.add_argument("--folds", type=int, default=10)
        g.add_argument("--seed", type=int, default=None,
                       help="fold seed; generated and logged when omitted")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", choices=["csv", "text"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoacker",
        description="Adaptive kNN classification of geo-spatial points.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON or YAML file with option defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify query points")
    _add_data_args(p)
    _add_method_args(p)
    _add_run_args(p, folds=False)
    p.add_argument("--query", required=True, help="CSV of points to classify")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="cross-validated accuracy of one method")
    _add_data_args(p)
    _add_method_args(p)
    _add_run_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-fixed-k", help="standard kNN accuracy per k")
    _add_data_args(p)
    _add_run_args(p)
    p.add_argument("--ks", default="1..50")
    p.set_defaults(func=cmd_sweep_fixed_k)

    p = sub.add_parser("sweep-l", help="ACKER accuracy, correlation and ROC AUC per l")
    _add_data_args(p)
    _add_method_args(p, method=False)
    _add_run_args(p)
    p.add_argument("--ls", default="10,50,100,200")
    p.set_defaults(func=cmd_sweep_l)

    p = sub.add_parser("sweep-kmax", help="ACKER accuracy per k_max")
    _add_data_args(p)
    _add_method_args(p, method=False)
    _add_run_args(p)
    p.add_argument("--kmaxes", default="1,2,5,10,20,50,100,200")
    p.set_defaults(func=cmd_sweep_kmax)

    p = sub.add_parser("roc", help="quality of expected accuracy as a correctness score")
    _add_data_args(p)
    _add_method_args(p, method=False)
    _add_run_args(p)
    p.add_argument("--ls", default="10,50,100,200")
    p.add_argument("--fixed-k", type=int, default=None,
                   help="score standard kNN at this k instead of ACKER")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    _add_data_args(p)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build-index", help="precompute a feature index snapshot")
    _add_data_args(p)
    _add_method_args(p, method=False)
    p.add_argument("--out", required=True, help="snapshot path (.npz)")
    p.set_defaults(func=cmd_build_index)
    return parser


# ---------------------------------------------------------------- helpers

def _load_dataset(args):
    if (args.data is None) == (args.synthetic is None):
        raise ConfigError("give exactly one of --data or --synthetic")
    if args.synthetic:
        return generate(SyntheticSpec(kind=args.synthetic, n_points=args.n_points,
                                      n_classes=args.classes, noise=args.noise,
                                      seed=args.synth_seed))
    return load_csv(args.data, _schema(args))


def _schema(args) -> CsvSchema:
    return CsvSchema(args.lon_col, args.lat_col, args.label_col,
                     delimiter=args.delimiter, header=not args.no_header)


def _acker_config(args, krange: KRange | None = None) -> AckerConfig:
    return AckerConfig(FeatureKind.parse(args.feature),
                       krange or KRange.parse(args.range), args.l)


def _resolve_seed(args) -> None:
    if getattr(args, "seed", "absent") is None:
        args.seed = secrets.randbits(31)
        log.warning("no --seed given; using generated seed %d", args.seed)


def _config_hash(args) -> str:
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_HASHED}
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


def _emit(args, text: str, started: float) -> None:
    if not args.out:
        sys.stdout.write(text)
        return
    atomic_write(args.out, text)
    meta = {
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config_hash": _config_hash(args),
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "backend": default_backend.NAME,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    atomic_write(str(args.out) + ".meta.json", json.dumps(meta, indent=2, default=str) + "\n")


def render_predictions(ids, names, predictions, chosen=None, scores=None) -> str:
    """Prediction CSV: ``point_id,predicted,chosen_k,expected_accuracy``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point_id", "predicted", "chosen_k", "expected_accuracy"])
    for i, pid in enumerate(ids):
        ck = "" if chosen is None else int(chosen[i])
        sc = "" if scores is None else repr(float(scores[i]))
        w.writerow([int(pid), names[int(predictions[i])], ck, sc])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_classify(args) -> str:
    dataset = _load_dataset(args)
    queries = load_points(args.query, _schema(args))
    train = TrainingSet(dataset)
    ids = range(queries.shape[0])
    if args.method == "knn":
        pred = knn_predict(train, queries, args.k)
        return render_predictions(ids, dataset.label_names, pred)
    cfg = _acker_config(args)
    fidx = build_feature_index(train, cfg.kind, cfg.krange)
    preds = acker_classify_batch(train, fidx, queries, cfg, workers=args.threads)
    return render_predictions(ids, dataset.label_names, [p.predicted for p in preds],
                              [p.chosen_k for p in preds],
                              [p.expected_accuracy for p in preds])


def cmd_evaluate(args) -> str:
    dataset = _load_dataset(args)
    if args.method == "knn":
        res = run_cv(dataset, StandardKnn(args.k), args.folds, args.seed, workers=args.threads)
        report = SweepReport("fixed_k", "k", [args.k], [res.mean], [res.std],
                             folds=args.folds, seed=args.seed)
    else:
        cfg = _acker_config(args)
        res = run_cv(dataset, Acker(cfg), args.folds, args.seed, workers=args.threads)
        scores = [r.score for r in res.records]
        outcome = [int(r.correct) for r in res.records]
        report = SweepReport("l_sweep", "l", [cfg.l], [res.mean], [res.std],
                             [pearson_r(scores, outcome)], [roc_auc(scores, outcome)],
                             folds=args.folds, seed=args.seed)
    return report.render(args.format)


def cmd_sweep_fixed_k(args) -> str:
    dataset = _load_dataset(args)
    return sweep_fixed_k(dataset, _int_list(args.ks), args.folds, args.seed).render(args.format)


def cmd_sweep_l(args) -> str:
    dataset = _load_dataset(args)
    report = sweep_l(dataset, args.feature, KRange.parse(args.range), _int_list(args.ls),
                     args.folds, args.seed, workers=args.threads)
    return report.render(args.format)


def cmd_sweep_kmax(args) -> str:
    dataset = _load_dataset(args)
    report = sweep_kmax(dataset, args.feature, args.l, _int_list(args.kmaxes),
                        args.folds, args.seed, workers=args.threads)
    return report.render(args.format)


def cmd_roc(args) -> str:
    dataset = _load_dataset(args)
    report = sweep_roc(dataset, args.feature, KRange.parse(args.range), _int_list(args.ls),
                       args.folds, args.seed, fixed_k=args.fixed_k, workers=args.threads)
    return report.render(args.format)


def cmd_generate(args) -> str:
    if args.synthetic is None:
        raise ConfigError("generate needs --synthetic")
    dataset = _load_dataset(args)
    buf = io.StringIO()
    write_csv(dataset, buf)
    return buf.getvalue()


def cmd_build_index(args) -> None:
    dataset = _load_dataset(args)
    cfg = _acker_config(args)
    fidx = build_feature_index(TrainingSet(dataset), cfg.kind, cfg.krange)
    fidx.save(args.out)
    return None


# ---------------------------------------------------------------- entry point

def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        text = Path(known.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {known.config}: {exc}") from None
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping of option names to values")
    defaults = {str(k).replace("-", "_"): v for k, v in data.items()}
    args = parser.parse_args(argv)
    # values from the file apply only where the command line kept the default
    sub = parser._subparsers._group_actions[0].choices[args.command]
    for key, value in defaults.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config option {key!r}")
        if getattr(args, key) == sub.get_default(key):
            setattr(args, key, value)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ParameterError as exc:
        print(f"geoacker: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", force=True)
    started = time.perf_counter()
    try:
        _resolve_seed(args)
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be >= 1")
        text = args.func(args)
        if text is not None:
            _emit(args, text, started)
    except DataError as exc:
        print(f"geoacker: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParameterError as exc:
        print(f"geoacker: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"geoacker: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"geoacker: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
