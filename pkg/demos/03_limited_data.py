# coding: utf-8

# # Curriculum versus baseline with 30% of the training data
#
# This script trains the reference MLP on 30% of the training split of the
# 5000-image MNIST sample, once with a plain shuffle and once with each
# curriculum mechanism, and compares mean test error with a Welch t-test.
# Three seeds keep the runtime near a minute; pass a number on the command
# line for more.

import sys

from curriculum_sched.experiments import ExperimentConfig, fast_profile, repeat_runs
from curriculum_sched.experiments.stats import welch_t_test

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
seeds = range(n_seeds)

def run(strategy, scoring="prior"):
    cfg = fast_profile(ExperimentConfig(scenario="limited-30", strategy=strategy, scoring=scoring),
                       seeds=seeds)
    return repeat_runs(cfg)

baseline = run("baseline")
b = baseline.values()
print(f"baseline: {b.mean():.2f}% test error over {len(b)} seeds")

for strategy in ("reorder-curriculum", "subsets-curriculum", "weights-curriculum"):
    for scoring in ("prior", "uncertainty"):
        v = run(strategy, scoring).values()
        line = f"{strategy:20s} {scoring:12s} {v.mean():.2f}%"
        if len(v) > 1:
            _, p = welch_t_test(v, b)
            line += f"  p={p:.3f}"
        print(line)
