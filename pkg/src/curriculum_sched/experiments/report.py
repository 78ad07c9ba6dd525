"""CSV emission and table rendering.

Per-run and per-epoch rows are written first; every aggregate is then derived
from those files, so ``regenerate`` on a results directory reproduces the
aggregate CSVs byte for byte.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .. import data as D
from ..errors import StatisticsError
from .config import TABLE_STRATEGIES
from .stats import welch_t_test

RUN_FIELDS = ("scenario", "scoring", "strategy", "seed", "status", "best_epoch", "stopped_epoch",
              "test_error", "test_macro_f1", "test_f1", "config_hash")
EPOCH_FIELDS = ("scenario", "scoring", "strategy", "seed", "epoch", "subset_size", "train_loss",
                "val_error", "weight_clean", "weight_corrupted")
SUMMARY_FIELDS = ("scenario", "scoring", "strategy", "n", "failed", "error_mean", "error_median",
                  "error_std", "macro_f1_mean", "macro_f1_median", "macro_f1_std",
                  "t_vs_baseline", "p_vs_baseline", "significant")
CURVE_FIELDS = ("scenario", "scoring", "strategy", "epoch", "val_error_mean", "n")
SIGNIFICANCE = 0.05


def _f(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{x:.6f}"


def run_row(config, result) -> dict:
    ok = not result.failed
    return {
        "scenario": config.scenario,
        "scoring": config.effective_scoring,
        "strategy": config.strategy.label,
        "seed": result.seed,
        "status": "ok" if ok else f"failed@{result.failure_epoch}",
        "best_epoch": result.best_epoch,
        "stopped_epoch": result.stopped_epoch,
        "test_error": _f(result.test.error) if ok else "",
        "test_macro_f1": _f(result.test.macro_f1) if ok else "",
        "test_f1": ";".join(_f(v) for v in result.test.f1) if ok else "",
        "config_hash": result.config_hash,
    }


def epoch_rows(config, result) -> list:
    base = {"scenario": config.scenario, "scoring": config.effective_scoring,
            "strategy": config.strategy.label, "seed": result.seed}
    return [{**base, **{k: (_f(v) if isinstance(v, float) else v) for k, v in h.items()}}
            for h in result.history]


def _write(path: Path, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _read(path: Path) -> list:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _stats(values) -> tuple:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return (np.nan, np.nan, np.nan)
    return (v.mean(), np.median(v), v.std(ddof=1) if v.size > 1 else 0.0)


def _ordered(keys, order):
    rank = {k: i for i, k in enumerate(order)}
    return sorted(keys, key=lambda k: (rank.get(k, len(order)), k))


def summarize_runs(runs: list) -> list:
    """One summary row per (scenario, scoring, strategy) with a Welch test vs baseline."""
    groups = defaultdict(list)
    for row in runs:
        groups[(row["scenario"], row["scoring"], row["strategy"])].append(row)
    scenarios = list(dict.fromkeys(r["scenario"] for r in runs))
    out = []
    for scenario in scenarios:
        base = [float(r["test_error"]) for r in groups.get((scenario, "none", "baseline"), [])
                if r["status"] == "ok"]
        keys = [k for k in groups if k[0] == scenario]
        keys = sorted(keys, key=lambda k: (("none", "prior", "uncertainty").index(k[1])
                                           if k[1] in ("none", "prior", "uncertainty") else 9,
                                           TABLE_STRATEGIES.index(k[2])
                                           if k[2] in TABLE_STRATEGIES else 99, k))
        for key in keys:
            rows = groups[key]
            ok = [r for r in rows if r["status"] == "ok"]
            err = [float(r["test_error"]) for r in ok]
            f1 = [float(r["test_macro_f1"]) for r in ok]
            t = p = np.nan
            if key[2] != "baseline" and base:
                try:
                    t, p = welch_t_test(err, base)
                except StatisticsError:
                    pass
            em, emed, esd = _stats(err)
            fm, fmed, fsd = _stats(f1)
            out.append({
                "scenario": key[0], "scoring": key[1], "strategy": key[2],
                "n": len(ok), "failed": len(rows) - len(ok),
                "error_mean": _f(em), "error_median": _f(emed), "error_std": _f(esd),
                "macro_f1_mean": _f(fm), "macro_f1_median": _f(fmed), "macro_f1_std": _f(fsd),
                "t_vs_baseline": _f(t), "p_vs_baseline": "" if np.isnan(p) else f"{p:.6g}",
                "significant": "" if np.isnan(p) else str(int(p < SIGNIFICANCE)),
            })
    return out


def table_rows(summary: list) -> list:
    """Comparison table: one row per (scenario, scoring), one column per strategy.

    Baseline and random-ordering runs do not depend on the score source and
    are repeated in both the prior and the uncertainty rows. A trailing ``*``
    marks p < 0.05 against baseline.
    """
    cell = {}
    for row in summary:
        mark = "*" if row["significant"] == "1" else ""
        cell[(row["scenario"], row["scoring"], row["strategy"])] = row["error_mean"] + mark
    scenarios = list(dict.fromkeys(r["scenario"] for r in summary))
    out = []
    for scenario in scenarios:
        scorings = [s for s in ("prior", "uncertainty") if any(k[:2] == (scenario, s) for k in cell)]
        for scoring in scorings or ["none"]:
            row = {"scenario": scenario, "scoring": scoring}
            for strat in TABLE_STRATEGIES:
                row[strat] = cell.get((scenario, scoring, strat), cell.get((scenario, "none", strat), ""))
            out.append(row)
    return out


def curve_rows(epochs: list) -> list:
    groups = defaultdict(list)
    for row in epochs:
        groups[(row["scenario"], row["scoring"], row["strategy"], int(row["epoch"]))].append(
            float(row["val_error"]))
    return [{"scenario": k[0], "scoring": k[1], "strategy": k[2], "epoch": k[3],
             "val_error_mean": _f(float(np.mean(v))), "n": len(v)}
            for k, v in sorted(groups.items())]


def regenerate(output_dir) -> dict:
    """Rebuild summary, table and curve CSVs from ``runs.csv`` and ``epochs.csv``."""
    out = Path(output_dir)
    runs = _read(out / "runs.csv")
    summary = summarize_runs(runs)
    _write(out / "summary.csv", SUMMARY_FIELDS, summary)
    _write(out / "aggregate.csv", ("scenario", "scoring") + TABLE_STRATEGIES, table_rows(summary))
    _write(out / "curves.csv", CURVE_FIELDS, curve_rows(_read(out / "epochs.csv")))
    return {"runs": runs, "summary": summary}


def emit_results(entries, output_dir, datasets: dict | None = None) -> dict:
    """Write all result files for ``entries``, a list of ``(config, RunResult)``.

    ``datasets`` optionally maps a scenario name to its ``(train, val, test)``
    triple; each split's provenance record is written next to the CSVs.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "runs.csv", RUN_FIELDS, [run_row(c, r) for c, r in entries])
    _write(out / "epochs.csv", EPOCH_FIELDS, [e for c, r in entries for e in epoch_rows(c, r)])
    _write(out / "timings.csv", ("scenario", "scoring", "strategy", "seed", "seconds"),
           [{"scenario": c.scenario, "scoring": c.effective_scoring, "strategy": c.strategy.label,
             "seed": r.seed, "seconds": f"{r.wall_clock:.3f}"} for c, r in entries])
    for scenario, splits in (datasets or {}).items():
        prov = out / "provenance"
        prov.mkdir(exist_ok=True)
        for ds in splits:
            (prov / f"{scenario}.{ds.split}.txt").write_text(D.provenance_record(ds))
    return regenerate(out)
