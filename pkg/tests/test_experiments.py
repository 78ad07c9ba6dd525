import csv
import math

import mpmath
import numpy as np
import pytest
from scipy import stats as sps

from curriculum_sched import nn
from curriculum_sched.errors import ConfigError, DataError, HarnessError, StatisticsError
from curriculum_sched.experiments import cli, config as C, report, runner
from curriculum_sched.experiments.metrics import Metrics, confusion_matrix, evaluate
from curriculum_sched.experiments.stats import betainc_regularized, welch_t_test
from curriculum_sched.scheduler import pacing_size
from curriculum_sched.scoring import UncertaintyConfig

from oracles import direct_f1


def same_history(a, b):
    """History equality that treats NaN audit columns as equal."""
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert x.keys() == y.keys()
        for k in x:
            assert x[k] == y[k] or (math.isnan(x[k]) and math.isnan(y[k])), k


def synth_config(**kw):
    base = dict(scenario="full", data_source="synth", prior_source="fixture",
                train=nn.TrainConfig(epochs=6, patience=6), hidden=(16,),
                uncertainty=UncertaintyConfig(passes=3), seeds=(0, 1))
    base.update(kw)
    return C.ExperimentConfig(**base)


class TestMetrics:
    def test_hand_example(self):
        m = Metrics.from_confusion([[2, 1], [0, 3]])
        assert m.f1[0] == pytest.approx(80.0)
        assert m.f1[1] == pytest.approx(85.714, abs=1e-3)
        assert m.macro_f1 == pytest.approx(82.857, abs=1e-3)
        assert m.error == pytest.approx(16.667, abs=1e-3)

    def test_matches_precision_recall(self):
        cm = np.random.default_rng(0).integers(0, 20, size=(6, 6))
        cm[2, :] = 0
        cm[:, 2] = 0
        np.testing.assert_allclose(Metrics.from_confusion(cm).f1, direct_f1(cm), atol=1e-9)

    def test_perfect(self):
        m = Metrics.from_confusion(np.diag([3, 4, 5]))
        assert m.error == 0.0 and np.all(m.f1 == 100.0)

    def test_constant_predictor(self):
        y = np.repeat(np.arange(10), 7)
        m = Metrics.from_confusion(confusion_matrix(y, np.zeros_like(y), 10))
        assert m.error == pytest.approx(90.0)
        assert m.macro_f1 == pytest.approx(Metrics.from_confusion(confusion_matrix(y, 0 * y, 10)).f1.mean())

    def test_error_from_trace(self):
        cm = np.random.default_rng(1).integers(0, 9, size=(4, 4))
        m = Metrics.from_confusion(cm)
        assert m.error == pytest.approx(100 * (1 - np.trace(cm) / cm.sum()))

    def test_empty(self):
        with pytest.raises(DataError):
            Metrics.from_confusion(np.zeros((3, 3), int))


class TestWelch:
    def test_identical(self):
        t, p = welch_t_test([1, 2, 3, 4], [1, 2, 3, 4])
        assert t == 0.0 and p == pytest.approx(1.0, abs=1e-12)

    def test_reference(self):
        t, p = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert t == pytest.approx(-1.0, abs=1e-12)
        assert p == pytest.approx(0.3466, abs=1e-4)
        ref = sps.ttest_ind([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], equal_var=False)
        assert p == pytest.approx(ref.pvalue, rel=1e-10)

    @pytest.mark.parametrize("seed", range(8))
    def test_against_scipy(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(0, 1 + seed, size=3 + seed)
        b = rng.normal(0.5, 1, size=12 - seed)
        t, p = welch_t_test(a, b)
        ref = sps.ttest_ind(a, b, equal_var=False)
        assert t == pytest.approx(ref.statistic, rel=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-15)

    def test_extreme(self):
        rng = np.random.default_rng(0)
        _, p = welch_t_test(rng.normal(0, 1, 10), rng.normal(100, 1, 10))
        assert p < 1e-10

    @pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (4.5, 0.5, 0.9), (30, 0.5, 0.2),
                                       (2.0, 3.0, 0.999), (0.7, 0.5, 1e-6)])
    def test_betainc_vs_mpmath(self, a, b, x):
        ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
        assert betainc_regularized(a, b, x) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("a,b", [([1.0], [1.0, 2.0]), ([2.0, 2.0], [3.0, 3.0])])
    def test_degenerate(self, a, b):
        with pytest.raises(StatisticsError):
            welch_t_test(a, b)


class TestSeeds:
    def test_streams_distinct_and_stable(self):
        seeds = {s: C.derive_seed(3, s) for s in ("init", "dropout", "schedule", "mc")}
        assert len(set(seeds.values())) == 4
        assert seeds["init"] == C.derive_seed(3, "init")
        assert C.derive_seed(3, "init") != C.derive_seed(4, "init")

    def test_splitmix_reference(self):
        # first output of the reference splitmix64 generator seeded with 0
        assert C.splitmix64(0) == 0xE220A8397B1DCDAF


class TestConfig:
    def test_hash_ignores_seeds(self):
        a = synth_config(seeds=(1,))
        assert a.config_hash() == synth_config(seeds=(5, 6)).config_hash()
        assert a.config_hash() != synth_config(hidden=(8,)).config_hash()

    def test_effective_scoring(self):
        assert synth_config(strategy="baseline", scoring="uncertainty").effective_scoring == "none"
        assert synth_config(strategy="weights-random").effective_scoring == "none"
        assert synth_config(strategy="weights-anti").effective_scoring == "prior"

    def test_validation(self):
        with pytest.raises(ConfigError):
            synth_config(scenario="tiny")
        with pytest.raises(ConfigError):
            synth_config(prior_source="explicit")
        with pytest.raises(ConfigError):
            synth_config(data_source="mnist-idx")

    def test_fast_profile(self):
        cfg = C.fast_profile(synth_config())
        assert cfg.max_train == 10000 and cfg.uncertainty.passes == 5 and len(cfg.seeds) == 5


class TestRunner:
    def test_separable_baseline_reaches_zero(self):
        cfg = synth_config(train=nn.TrainConfig(epochs=10, patience=10, learning_rate=1e-2))
        blobs = runner.D.synth_blobs(2, 500, 4, 20.0, 0)
        splits = runner.D.split(blobs, (0.6, 0.2, 0.2), 0, stratify=True)
        res = runner.run_training(cfg, 0, splits)
        assert res.test.error == 0.0

    def test_reproducible(self):
        cfg = synth_config(strategy="subsets-curriculum", scoring="uncertainty")
        a, b = runner.run_training(cfg, 3), runner.run_training(cfg, 3)
        same_history(a.history, b.history)
        np.testing.assert_array_equal(a.test.confusion, b.test.confusion)

    def test_subset_sizes_follow_pacing(self):
        cfg = synth_config(strategy="subsets-curriculum", pacing_warmup=4,
                           train=nn.TrainConfig(epochs=6, patience=6))
        train = runner.prepare_data(cfg)[0]
        res = runner.run_training(cfg, 0)
        pacing = runner.PacingConfig(total=len(train), initial=0.25, warmup=4)
        assert [h["subset_size"] for h in res.history] == [
            pacing_size(e, pacing) for e in range(1, 7)]

    def test_uniform_weights_equals_baseline(self):
        uniform = synth_config(strategy="weights-curriculum", prior_source="explicit",
                               prior_weights=(1.0,) * 10)
        with pytest.warns(UserWarning):
            a = runner.run_training(uniform, 2)
        b = runner.run_training(synth_config(strategy="baseline"), 2)
        same_history(a.history, b.history)
        np.testing.assert_array_equal(a.test.confusion, b.test.confusion)

    def test_uniform_reorder_equals_baseline(self):
        uniform = synth_config(strategy="reorder-curriculum", prior_source="explicit",
                               prior_weights=(4.0,) * 10)
        with pytest.warns(UserWarning):
            a = runner.run_training(uniform, 1)
        b = runner.run_training(synth_config(strategy="baseline"), 1)
        np.testing.assert_array_equal(a.test.confusion, b.test.confusion)

    def test_early_stopping(self):
        cfg = synth_config(train=nn.TrainConfig(epochs=30, patience=2))
        res = runner.run_training(cfg, 0)
        errs = [h["val_error"] for h in res.history]
        assert res.stopped_epoch <= 30
        if res.stopped_epoch < 30:
            assert res.stopped_epoch - res.best_epoch == 2
        assert min(errs) == errs[res.best_epoch - 1]
        assert all(e > min(errs) for e in errs[:res.best_epoch - 1])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numeric_failure_reported(self):
        cfg = synth_config(train=nn.TrainConfig(epochs=3, patience=3, learning_rate=1e300,
                                                optimizer="sgd-momentum"))
        res = runner.run_training(cfg, 0)
        assert res.failed and res.failure_epoch == 1 and res.test is None
        with pytest.raises(HarnessError):
            runner.repeat_runs(cfg, seeds=(0,))

    def test_repeat_runs_stats(self):
        agg = runner.repeat_runs(synth_config(), seeds=(4, 4))
        assert agg.stats["error"]["std"] == 0.0
        single = runner.repeat_runs(synth_config(), seeds=(7,))
        s = single.stats["error"]
        assert s["mean"] == s["median"] == single.results[0].test.error

    def test_noise_weight_audit_columns(self):
        cfg = synth_config(scenario="noise", strategy="weights-curriculum", scoring="uncertainty")
        res = runner.run_training(cfg, 0)
        assert all(0 < h["weight_corrupted"] <= 1 and 0 < h["weight_clean"] <= 1 for h in res.history)


class TestReport:
    def _entries(self, seeds=(0, 1, 2)):
        cfgs = [synth_config(strategy=s, seeds=seeds) for s in ("baseline", "weights-curriculum")]
        return [(c, runner.run_training(c, s)) for c in cfgs for s in seeds]

    def test_files_and_layout(self, tmp_path):
        report.emit_results(self._entries(), tmp_path)
        with open(tmp_path / "aggregate.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["scenario", "scoring", *C.TABLE_STRATEGIES]
        assert len(C.TABLE_STRATEGIES) == 9
        runs = list(csv.DictReader(open(tmp_path / "runs.csv")))
        assert len(runs) == 6
        for name in ("summary.csv", "curves.csv", "epochs.csv"):
            assert (tmp_path / name).exists()

    def test_rerun_byte_identical(self, tmp_path):
        report.emit_results(self._entries(), tmp_path / "a")
        report.emit_results(self._entries(), tmp_path / "b")
        for name in ("runs.csv", "epochs.csv", "summary.csv", "aggregate.csv", "curves.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_report_regenerates(self, tmp_path):
        report.emit_results(self._entries(), tmp_path)
        before = (tmp_path / "aggregate.csv").read_bytes()
        (tmp_path / "aggregate.csv").unlink()
        report.regenerate(tmp_path)
        assert (tmp_path / "aggregate.csv").read_bytes() == before

    def test_empty(self, tmp_path):
        report.emit_results([], tmp_path)
        assert (tmp_path / "runs.csv").read_text().count("\n") == 1
        assert (tmp_path / "aggregate.csv").read_text().count("\n") == 1

    def test_stars_follow_p_values(self):
        def rows(strategy, errors):
            return [{"scenario": "s", "scoring": "none" if strategy == "baseline" else "prior",
                     "strategy": strategy, "status": "ok", "test_error": str(e),
                     "test_macro_f1": "90"} for e in errors]
        runs = rows("baseline", [10, 11, 10.5, 10.2]) + rows("subsets-curriculum", [5, 5.5, 5.2, 5.1]) \
            + rows("reorder-curriculum", [10.1, 10.9, 10.4, 10.3])
        summary = report.summarize_runs(runs)
        table = report.table_rows(summary)
        assert table[0]["subsets-curriculum"].endswith("*")
        assert not table[0]["reorder-curriculum"].endswith("*")
        by = {r["strategy"]: r for r in summary}
        assert float(by["subsets-curriculum"]["p_vs_baseline"]) < 0.05


class TestCli:
    def test_run_and_report(self, tmp_path):
        out = tmp_path / "run"
        code = cli.main(["run", "--data", "synth", "--scenario", "noise", "--strategy",
                         "subsets-curriculum", "--scoring", "uncertainty", "--seeds", "0", "1",
                         "--epochs", "3", "--hidden", "8", "--mc-passes", "2", "--out", str(out)])
        assert code == 0
        assert len(list(csv.DictReader(open(out / "runs.csv")))) == 2
        assert (out / "provenance" / "noise.train.txt").exists()
        assert cli.main(["report", str(out)]) == 0

    def test_grid(self, tmp_path):
        spec = tmp_path / "grid.yaml"
        spec.write_text("scenarios: [full]\nscorings: [prior, uncertainty]\n"
                        "strategies: [baseline, weights-random, subsets-curriculum]\n"
                        "options:\n  epochs: 2\n  hidden: [8]\n  mc_passes: 2\n  prior: fixture\n")
        out = tmp_path / "grid"
        assert cli.main(["grid", "--config", str(spec), "--data", "synth", "--seeds", "0",
                         "--out", str(out)]) == 0
        runs = list(csv.DictReader(open(out / "runs.csv")))
        # baseline and random appear once; subsets once per scoring
        assert len(runs) == 4

    def test_drop_semantics(self):
        args = cli.build_parser().parse_args(
            ["run", "--dropout-semantics", "drop", "--out", "x", "--data", "synth"])
        cfg = cli._config_from_args(args, scenario="full")
        assert cfg.train.keep_prob == pytest.approx(0.1)
        assert cfg.uncertainty.keep_prob == pytest.approx(0.3)
