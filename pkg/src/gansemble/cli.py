"""Command-line surface.

Subcommands compose the same library calls the end-to-end runner uses, so a
scripted `run` and a hand-chained `preprocess | split | sweep | compare`
produce identical numbers for the same master seed.

Exit codes: 0 success; 2 configuration error; 3 data/artifact error;
4 training error; 5 sweep failure threshold exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import (
    Schema,
    load_dataset,
    load_encoded_dataset,
    partition_by_pm,
    preprocess,
    save_code_tables,
    save_dataset,
)
from .errors import ConfigError, GansembleError, SweepError, TrainingError
from .gan import GanConfig, fit_generator, load_generator, save_generator
from .metrics import METRIC_NAMES, build_curves
from .pipeline import (
    CtganBackend,
    SweepConfig,
    augment_training_set,
    build_protocol_splits,
    identify_underperforming,
)
from .pipeline import run_sweep as pipeline_run_sweep
from .predict import PREDICTOR_KINDS, PredictorConfig
from .report import (
    curves_csv_text,
    emit_report,
    render_comparison_table,
    render_identify,
    render_sweep_report,
)
from .results import ComparisonTable
from .runner import RunConfig, run_end_to_end
from .simulate import SimConfig, simulate_cohort

PROG = "gansemble"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4
EXIT_SWEEP = 5


def _parse_fractions(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"cannot parse fraction list {text!r}: {exc}") from exc


def _parse_excluded(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _load_encoded(args):
    schema = Schema.from_json_file(args.schema)
    return load_encoded_dataset(args.data, schema, args.codes)


def _load_raw_and_preprocess(args):
    schema = Schema.from_json_file(args.schema)
    return preprocess(load_dataset(args.data, schema))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = _read_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = SimConfig.from_dict(doc)
    cohort = simulate_cohort(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(cohort, out / "cohort.csv")
    (out / "schema.json").write_text(
        json.dumps(cfg.schema().to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {cohort.n} rows to {out / 'cohort.csv'} (+ schema.json)")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    d = _load_raw_and_preprocess(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(d, out / "encoded.csv")
    save_code_tables(d, out / "codes.json")
    print(f"encoded {d.n} rows -> {out / 'encoded.csv'} (+ codes.json)")
    return EXIT_OK


def cmd_split(args) -> int:
    d = _load_encoded(args)
    partition = partition_by_pm(d, _parse_excluded(args.excluded))
    splits = build_protocol_splits(partition, args.seed)
    out = Path(args.out)
    summary = {}
    for sp in sorted(splits.sp_splits):
        pair = splits.sp_splits[sp]
        sp_dir = out / "splits" / sp
        sp_dir.mkdir(parents=True, exist_ok=True)
        save_dataset(pair.train, sp_dir / "train.csv")
        save_dataset(pair.test, sp_dir / "test.csv")
        summary[sp] = {"train": pair.train.n, "test": pair.test.n}
    if splits.excluded_split is not None:
        sp_dir = out / "splits" / "__excluded__"
        sp_dir.mkdir(parents=True, exist_ok=True)
        save_dataset(splits.excluded_split.train, sp_dir / "train.csv")
        save_dataset(splits.excluded_split.test, sp_dir / "test.csv")
        summary["__excluded__"] = {
            "train": splits.excluded_split.train.n,
            "test": splits.excluded_split.test.n,
        }
    save_dataset(splits.full_train, out / "splits" / "full_train.csv")
    save_dataset(splits.full_test, out / "splits" / "full_test.csv")
    save_code_tables(d, out / "splits" / "codes.json")
    (out / "splits" / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote per-SP splits for {len(splits.sp_splits)} SPs under {out / 'splits'}")
    return EXIT_OK


def cmd_identify(args) -> int:
    d = _load_encoded(args)
    sweep_cfg = SweepConfig(
        master_seed=args.seed,
        excluded_pms=_parse_excluded(args.excluded),
        underperformance_margin=args.margin,
    )
    pred_cfg = PredictorConfig(kind=args.predictor_kind)
    partition = partition_by_pm(d, sweep_cfg.excluded_pms)
    result = identify_underperforming(d, partition, sweep_cfg, pred_cfg)
    if args.out:
        result.save(args.out)
    sys.stdout.write(render_identify(result))
    return EXIT_OK


def cmd_train_gen(args) -> int:
    d = _load_encoded(args)
    gan_cfg = GanConfig.from_dict(_read_json(args.config) if args.config else {})
    model = fit_generator(d, gan_cfg.with_seed(args.seed))
    save_generator(model, args.out)
    print(f"fitted generator on {d.n} rows (SP label {model.sp_label!r}) -> {args.out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    train = _load_encoded(args)
    model = load_generator(args.generator, expected_fingerprint=train.fingerprint())
    gen = CtganBackend.wrap(model)
    augmented = augment_training_set(train, gen, args.fraction, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(augmented, out / "augmented.csv")
    save_code_tables(augmented, out / "codes.json")
    print(
        f"augmented {train.n} real rows with {augmented.n - train.n} synthetic "
        f"-> {out / 'augmented.csv'}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    d = _load_raw_and_preprocess(args)
    fractions = _parse_fractions(args.fractions) if args.fractions else SweepConfig().fractions
    sweep_cfg = SweepConfig(
        fractions=fractions,
        master_seed=args.seed,
        excluded_pms=_parse_excluded(args.excluded),
    )
    gan_cfg = GanConfig.from_dict(_read_json(args.config) if args.config else {})
    pred_cfg = PredictorConfig(kind=args.predictor_kind)
    targets = [part.strip() for part in args.targets.split(",") if part.strip()]
    result = pipeline_run_sweep(
        d, targets, sweep_cfg, gan_cfg=gan_cfg, pred_cfg=pred_cfg, workers=args.workers
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.save(out / "sweep_result.json")
    (out / "curves.csv").write_text(curves_csv_text(build_curves(result)))
    sys.stdout.write(render_sweep_report(result))
    print(f"wrote {out / 'sweep_result.json'} and {out / 'curves.csv'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    table = ComparisonTable.load(args.table)
    rendered = render_comparison_table(table)
    sys.stdout.write(rendered)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    return EXIT_OK


def cmd_report(args) -> int:
    metrics = (args.metric,) if args.metric else ("rocauc",)
    written = emit_report(args.results, out_dir=args.out, metrics=metrics, plots=args.plots)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    doc = RunConfig.from_json_file(args.config).to_dict()
    if args.seed is not None:
        doc["sweep"] = {**doc["sweep"], "master_seed": args.seed}
    if args.out is not None:
        doc["out_dir"] = args.out
    if args.fractions is not None:
        doc["sweep"] = {**doc["sweep"], "fractions": list(_parse_fractions(args.fractions))}
    if args.metric is not None:
        doc["metrics"] = [args.metric]
    if args.plots:
        doc["plots"] = True
    if args.workers is not None:
        doc["workers"] = args.workers
    cfg = RunConfig.from_dict(doc)
    manifest = run_end_to_end(cfg)
    print(f"status: {manifest['status']}")
    print(f"targets: {manifest['targets'] or '(none)'}")
    print(f"artifacts: {len(manifest['artifacts'])} under {cfg.out_dir}")
    print(f"report: {Path(cfg.out_dir) / 'report.txt'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_data_flags(p: argparse.ArgumentParser, encoded: bool) -> None:
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--schema", required=True, help="schema JSON path")
    if encoded:
        p.add_argument("--codes", required=True, help="code-tables JSON sidecar path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description=(
            "Per-subpopulation synthetic augmentation: identify under-performing "
            "subpopulations, sweep generator-augmented training fractions, and "
            "compare against resampling baselines."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic cohort from a simulator config")
    p.add_argument("--config", required=True, help="simulator config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="drop incomplete rows and label-encode categoricals")
    _add_data_flags(p, encoded=False)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", help="per-SP stratified train/test splits")
    _add_data_flags(p, encoded=True)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--excluded", default=None, help="comma-separated PM values given no SP model")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("identify", help="flag SPs whose baseline trails the full population")
    _add_data_flags(p, encoded=True)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--margin", type=float, default=0.0, help="underperformance margin")
    p.add_argument("--excluded", default=None, help="comma-separated PM values given no SP model")
    p.add_argument("--predictor-kind", choices=PREDICTOR_KINDS, default="gradient_boosting")
    p.add_argument("--out", default=None, help="write the scan result JSON here")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("train-gen", help="fit a generator on an (SP) training set")
    _add_data_flags(p, encoded=True)
    p.add_argument("--config", default=None, help="generator config JSON")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="generator artifact path (.pkl)")
    p.set_defaults(func=cmd_train_gen)

    p = sub.add_parser("augment", help="append generator samples to a training set")
    _add_data_flags(p, encoded=True)
    p.add_argument("--generator", required=True, help="generator artifact path")
    p.add_argument("--fraction", type=float, required=True, help="synthetic rows as a fraction of real rows")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("sweep", help="evaluate every (target SP, fraction) augmentation cell")
    _add_data_flags(p, encoded=False)
    p.add_argument("--targets", required=True, help="comma-separated SP values to sweep")
    p.add_argument("--fractions", default=None, help="comma-separated fraction grid (default: 20-value grid)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--excluded", default=None, help="comma-separated PM values given no SP model")
    p.add_argument("--config", default=None, help="generator config JSON")
    p.add_argument("--predictor-kind", choices=PREDICTOR_KINDS, default="gradient_boosting")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="render a comparison table document as text")
    p.add_argument("--table", required=True, help="comparison table JSON path")
    p.add_argument("--out", default=None, help="also write the rendered text here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render reports and plots from a results directory")
    p.add_argument("--results", required=True, help="results directory containing manifest.json")
    p.add_argument("--out", default=None, help="write rendered files here (default: in place)")
    p.add_argument("--metric", choices=METRIC_NAMES, default=None, help="metric to plot")
    p.add_argument("--plots", action="store_true", help="emit figures")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="end-to-end: identify, sweep, baselines, report")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--workers", type=int, default=None, help="parallel workers")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--fractions", default=None, help="override the fraction grid")
    p.add_argument("--metric", choices=METRIC_NAMES, default=None, help="metric to plot/report")
    p.add_argument("--plots", action="store_true", help="emit figures")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except SweepError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_SWEEP
    except GansembleError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
