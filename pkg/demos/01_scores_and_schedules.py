# coding: utf-8

# # Scores, probabilities and epoch plans
#
# A curriculum starts from one number per training sample: its score.
# Higher scores are shown earlier (reorder, subsets) or weighted more
# heavily (weights). This walk-through builds scores from a per-class
# prior, turns them into sampling probabilities and prints the plans the
# scheduler produces for each mechanism.

import numpy as np

from curriculum_sched.scheduler import (CurriculumState, PacingConfig, StrategyKind,
                                        make_batches, pacing_size, plan_epoch)
from curriculum_sched.scoring import anti_curriculum, prior_scores, to_probabilities

np.set_printoptions(precision=3, suppress=True)

# Twelve samples from three classes. Class 2 is the "easiest" one.

labels = np.array([0, 1, 2, 2, 0, 1, 2, 0, 1, 2, 0, 1])
scores = prior_scores([1.0, 2.0, 5.0], labels)
print("scores       ", scores.values)
print("probabilities", to_probabilities(scores))

# The anti-curriculum reflects the scores so the hardest class comes first.

print("anti scores  ", anti_curriculum(scores).values)

# ## Reorder
#
# Every epoch visits every sample, in an order drawn without replacement
# with probability proportional to the score.

rng = np.random.default_rng(0)
state = CurriculumState(scores)
for _ in range(3):
    plan = plan_epoch(state, StrategyKind.parse("reorder-curriculum"), None, 4, rng)
    print("reorder epoch", plan.epoch, "classes in order:", labels[plan.indices])

# ## Subsets
#
# The staircase pacing starts with a quarter of the data and reaches the
# full set after `warmup` epochs. Samples that were picked have their score
# decayed, so the unseen ones move up the queue.

pacing = PacingConfig(total=len(labels), initial=0.25, warmup=4)
print("subset sizes:", [pacing_size(e, pacing) for e in range(1, 7)])

state = CurriculumState(scores)
for _ in range(5):
    plan = plan_epoch(state, StrategyKind.parse("subsets-curriculum"), pacing, 4, rng)
    print(f"subsets epoch {plan.epoch}: size {plan.subset_size:2d}, picked {np.sort(plan.indices)}")
print("selection counters:", state.counters)

# ## Weights
#
# The order is a plain shuffle, but each batch carries loss weights equal
# to the sample probabilities divided by the batch maximum.

state = CurriculumState(scores)
plan = plan_epoch(state, StrategyKind.parse("weights-curriculum"), None, 4, rng)
for idx, w in make_batches(plan):
    print("batch", idx, "weights", w)
