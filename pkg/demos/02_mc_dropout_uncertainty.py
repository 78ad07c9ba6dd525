# coding: utf-8

# # Uncertainty scores from MC dropout
#
# For the self-paced variant the score of a sample is the predictive
# entropy of the network, estimated by averaging several softmax outputs
# with dropout left on. Confident samples get low entropy; the ones the
# model is unsure about get high entropy.

import numpy as np

from curriculum_sched import data, nn
from curriculum_sched.scoring import UncertaintyConfig, uncertainty_scores

# Three overlapping Gaussian blobs in five dimensions.

blobs = data.synth_blobs(n_classes=3, per_class=200, dim=5, separation=2.5, seed=1)
train, test = data.split(blobs, (0.8, 0.2), seed=0, stratify=True)

# An untrained network with zero weights predicts the uniform distribution,
# so every score sits at the ceiling ln(3).

params = nn.init_params((5, 32, 3), seed=0)
zero = params.copy()
for w in zero.weights:
    w[:] = 0.0
mc = UncertaintyConfig(passes=10, keep_prob=0.7)
rng = np.random.default_rng(0)
s = uncertainty_scores(zero, train.features, mc, rng, epoch=0)
print(f"zero network: scores in [{s.values.min():.4f}, {s.values.max():.4f}], ln 3 = {np.log(3):.4f}")

# Train for a few epochs and watch the entropy fall.

cfg = nn.TrainConfig(epochs=10, patience=10, learning_rate=1e-2)
dropout = nn.DropoutConfig(0.9, "train")
ones = np.ones(len(train))
for epoch in range(10):
    for start in range(0, len(train), cfg.batch_size):
        idx = slice(start, start + cfg.batch_size)
        _, g = nn.loss_and_gradients(params, train.features[idx], train.labels[idx], ones[idx],
                                     dropout, rng)
        nn.optimizer_step(params, g, cfg, epoch)
    s = uncertainty_scores(params, train.features, mc, rng, epoch=epoch + 1)
    print(f"epoch {epoch + 1:2d}: mean entropy {s.values.mean():.3f}")

# Samples near the class boundaries stay uncertain. Measure how much closer
# each sample is to its nearest centre than to the runner-up: a small gap
# means the sample sits between two blobs.

means = np.array([train.features[train.labels == c].mean(axis=0) for c in range(3)])
d = np.sort(np.linalg.norm(train.features[:, None] - means[None], axis=-1), axis=1)
gap = d[:, 1] - d[:, 0]
order = np.argsort(s.values)
print("centre gap of the 50 most confident samples: ", gap[order[:50]].mean().round(3))
print("centre gap of the 50 least confident samples:", gap[order[-50:]].mean().round(3))
