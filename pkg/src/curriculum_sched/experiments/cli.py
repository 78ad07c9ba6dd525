"""Command line entry point: ``run``, ``grid`` and ``report`` subcommands."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from ..nn import DropoutConfig, TrainConfig
from ..scoring import UncertaintyConfig
from .config import TABLE_STRATEGIES, ExperimentConfig, fast_profile
from .report import emit_results, regenerate
from .runner import prepare_data, run_training

log = logging.getLogger("curriculum_sched")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--data", choices=("mnist5k", "mnist-idx", "synth"), default="mnist5k")
    p.add_argument("--mnist-dir", help="directory holding the four MNIST IDX files")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd-momentum"), default="adam")
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--pacing-initial", type=float, default=0.25,
                   help="initial subset size as a fraction of the training set")
    p.add_argument("--pacing-warmup", type=int, default=10)
    p.add_argument("--mc-passes", type=int, default=10)
    p.add_argument("--dropout", type=float, default=0.9, help="training dropout rate")
    p.add_argument("--mc-dropout", type=float, default=0.7, help="dropout rate for MC passes")
    p.add_argument("--dropout-semantics", choices=("keep", "drop"), default="keep")
    p.add_argument("--prior", choices=("bootstrap", "fixture"), default="bootstrap")
    p.add_argument("--hidden", type=int, nargs="+", default=[256])
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--fast", action="store_true", help="desk-scale profile")
    p.add_argument("--out", required=True, help="output directory")


def _config_from_args(args, **overrides) -> ExperimentConfig:
    keep = DropoutConfig.from_rate(args.dropout, "train", args.dropout_semantics).keep_prob
    mc_keep = DropoutConfig.from_rate(args.mc_dropout, "mc", args.dropout_semantics).keep_prob
    train = TrainConfig(batch_size=args.batch_size, epochs=args.epochs, learning_rate=args.lr,
                        optimizer=args.optimizer, patience=min(args.patience, args.epochs),
                        keep_prob=keep)
    cfg = ExperimentConfig(
        train=train, pacing_initial=args.pacing_initial, pacing_warmup=args.pacing_warmup,
        uncertainty=UncertaintyConfig(passes=args.mc_passes, keep_prob=mc_keep),
        prior_source=args.prior, hidden=tuple(args.hidden), data_source=args.data,
        mnist_dir=args.mnist_dir, data_seed=args.data_seed, output_dir=args.out, **overrides)
    if args.fast:
        cfg = fast_profile(cfg, args.seeds)
    elif args.seeds:
        cfg = cfg.with_(seeds=tuple(args.seeds))
    return cfg


def expand_grid(spec: dict, base: ExperimentConfig) -> list:
    """Scenario x scoring x strategy configs; score-independent runs appear once."""
    configs, seen = [], set()
    for scenario in spec.get("scenarios", [base.scenario]):
        for scoring in spec.get("scorings", ["prior", "uncertainty"]):
            for strategy in spec.get("strategies", list(TABLE_STRATEGIES)):
                cfg = base.with_(scenario=scenario, scoring=scoring, strategy=strategy)
                key = (scenario, cfg.effective_scoring, cfg.strategy.label)
                if key not in seen:
                    seen.add(key)
                    configs.append(cfg)
    return configs


def _execute(configs) -> int:
    entries, datasets, failed = [], {}, 0
    for cfg in configs:
        splits = prepare_data(cfg)
        datasets[cfg.scenario] = splits
        for seed in cfg.seeds:
            result = run_training(cfg, seed, splits)
            failed += result.failed
            status = "FAILED" if result.failed else f"test error {result.test.error:.2f}%"
            log.info("%s %s %s seed=%d: %s", cfg.scenario, cfg.effective_scoring,
                     cfg.strategy.label, seed, status)
            entries.append((cfg, result))
    out = configs[0].output_dir
    emit_results(entries, out, datasets)
    log.info("results written to %s", out)
    return 1 if failed else 0


def cmd_run(args) -> int:
    cfg = _config_from_args(args, scenario=args.scenario, scoring=args.scoring,
                            strategy=args.strategy)
    return _execute([cfg])


def cmd_grid(args) -> int:
    spec = yaml.safe_load(Path(args.config).read_text()) or {}
    options = spec.pop("options", {}) or {}
    ns = argparse.Namespace(**vars(args))
    for key, value in options.items():
        setattr(ns, key.replace("-", "_"), value)
    return _execute(expand_grid(spec, _config_from_args(ns)))


def cmd_report(args) -> int:
    regenerate(args.results)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curriculum-sched", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train one strategy over a list of seeds")
    run.add_argument("--scenario", default="limited-30",
                     choices=("full", "limited-30", "limited-50", "imbalance", "noise"))
    run.add_argument("--strategy", default="baseline",
                     help="baseline or <reorder|subsets|weights>-<curriculum|anti|random>")
    run.add_argument("--scoring", choices=("prior", "uncertainty"), default="prior")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    grid = sub.add_parser("grid", help="expand a YAML grid file into the strategy x scoring matrix")
    grid.add_argument("--config", required=True)
    _add_common(grid)
    grid.set_defaults(func=cmd_grid)

    report = sub.add_parser("report", help="regenerate tables from persisted CSVs")
    report.add_argument("results")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
