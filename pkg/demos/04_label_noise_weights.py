# coding: utf-8

# # Loss weights under label noise
#
# Thirty percent of the training labels are shifted to the next digit. The
# weights mechanism with uncertainty scores gives every sample a loss weight
# proportional to its predictive entropy, normalised inside each batch.
# Every run records the mean weight of corrupted and clean samples per
# epoch, so we can check which group the scheduler favours.

from curriculum_sched.experiments import ExperimentConfig, fast_profile, run_training

cfg = fast_profile(ExperimentConfig(scenario="noise", strategy="weights-curriculum",
                                    scoring="uncertainty"))
result = run_training(cfg, seed=0)

print("epoch  val error  weight(clean)  weight(corrupted)")
for h in result.history:
    print(f"{h['epoch']:5d}  {h['val_error']:8.2f}%  {h['weight_clean']:13.4f}  "
          f"{h['weight_corrupted']:17.4f}")
print(f"test error at the best validation epoch ({result.best_epoch}): {result.test.error:.2f}%")

baseline = run_training(cfg.with_(strategy="baseline"), seed=0)
print(f"baseline test error: {baseline.test.error:.2f}%")
