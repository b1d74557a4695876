"""``bench`` command line.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .. import __version__
from ..dataset import DatasetError
from .grid import HORIZONS, MODELS, NDAYS, ExperimentConfig, run_grid, summarize
from .io import DataError, load_ohlc_csv, write_ohlc_csv
from .report import ReportError, write_report
from .synthetic import synthetic_ohlc

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGENCE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_int_list(text: str) -> tuple:
    """``"1,2,5"`` or ``"50..500:50"`` (inclusive, step after the colon), or a mix."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                span, _, step = part.partition(":")
                lo, hi = span.split("..")
                step_i = int(step) if step else 1
                if step_i < 1:
                    raise ValueError
                values.extend(range(int(lo), int(hi) + 1, step_i))
            else:
                values.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(values)


def parse_models(text: str) -> tuple:
    models = tuple(m.strip() for m in text.split(",") if m.strip())
    if text.strip() == "all":
        return MODELS
    bad = [m for m in models if m not in MODELS]
    if bad or not models:
        raise argparse.ArgumentTypeError(f"unknown models {bad}; choose from {','.join(MODELS)}")
    return models


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bench", description="Index forecasting benchmark over technical-indicator features.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the model x horizon x parameter grid")
    run.add_argument("--input", required=True, help="CSV with header date,open,high,low,close")
    run.add_argument("--models", type=parse_models, default=MODELS, help="comma list or 'all'")
    run.add_argument("--horizons", type=parse_int_list, default=HORIZONS)
    run.add_argument("--ntrees", type=parse_int_list, default=(50, 100, 150, 200, 250, 300, 350, 400, 450, 500))
    run.add_argument("--ndays", type=parse_int_list, default=NDAYS)
    run.add_argument("--epochs", type=parse_int_list, default=(100, 200, 500, 1000), help="ANN epoch grid")
    run.add_argument("--epoch-scale", type=float, default=1.0, help="multiplier on every epoch budget")
    run.add_argument("--train-ratio", type=float, default=0.8)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--window", type=int, default=10, help="indicator lookback n")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--embed-predictions", action="store_true", help="store test predictions in report.json")

    syn = sub.add_parser("synth", help="write a deterministic synthetic OHLC CSV")
    syn.add_argument("--out", required=True)
    syn.add_argument("--bars", type=int, default=2500)
    syn.add_argument("--noise", type=float, default=0.0, help="random-walk step std added to the index")
    syn.add_argument("--seed", type=int, default=0)
    return p


def _config(args) -> ExperimentConfig:
    if args.seed < 0:
        raise ConfigError("seed must be non-negative")
    if args.workers < 1:
        raise ConfigError("workers must be >= 1")
    try:
        return ExperimentConfig(
            input_path=args.input,
            models=tuple(args.models),
            horizons=tuple(args.horizons),
            ntrees=tuple(args.ntrees),
            ann_epochs=tuple(args.epochs),
            ndays=tuple(args.ndays),
            epoch_scale=args.epoch_scale,
            train_ratio=args.train_ratio,
            seed=args.seed,
            window=args.window,
            output_path=args.out,
            workers=args.workers,
            embed_predictions=args.embed_predictions,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    try:
        config = _config(args)
    except ConfigError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        series = load_ohlc_csv(config.input_path)
        records = run_grid(config, series)
    except (DataError, DatasetError) as exc:
        print(f"bench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA

    complete = {
        m for m in config.models
        if all(r.ok for r in records if r.model == m)
    }
    averages = summarize([r for r in records if r.model in complete], config.horizons)
    meta = {"n_bars": len(series), "first_date": series.dates[0].isoformat(),
            "last_date": series.dates[-1].isoformat()}
    try:
        files = write_report(records, averages, config.output_path, config.echo(), meta)
    except ReportError as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(files["text"].read_text(encoding="utf-8"))
    print(f"wrote {files['json']} and {files['text']}")

    failed = [r for r in records if not r.ok]
    if any(r.error.startswith("divergence") for r in failed):
        print("bench: training divergence in some cells (see report)", file=sys.stderr)
        return EXIT_DIVERGENCE
    if failed and len(failed) == len(records):
        return EXIT_DATA
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.bars < 1:
        print("bench: config error: --bars must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        series = synthetic_ohlc(args.bars, noise=args.noise, seed=args.seed)
    except ValueError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_ohlc_csv(series, args.out)
    print(f"wrote {len(series)} bars to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        return cmd_run(args)
    return cmd_synth(args)


if __name__ == "__main__":
    sys.exit(main())
