"""Independent reference computations used by several test modules."""

import itertools
import math

import numpy as np


def sequential_permutation_law(p):
    """Exact probability of every permutation under successive renormalised draws."""
    p = np.asarray(p, dtype=np.float64)
    law = {}
    for perm in itertools.permutations(range(p.size)):
        remaining = p.sum()
        prob = 1.0
        for i in perm:
            prob *= p[i] / remaining
            remaining -= p[i]
        law[perm] = prob
    return law


def direct_entropy(p):
    return -sum(x * math.log(x) for x in p if x > 0)


def direct_f1(confusion):
    """Per-class F1 (%) from precision and recall, 0/0 := 0."""
    cm = np.asarray(confusion, dtype=float)
    out = []
    for c in range(cm.shape[0]):
        tp = cm[c, c]
        prec = tp / cm[:, c].sum() if cm[:, c].sum() else 0.0
        rec = tp / cm[c, :].sum() if cm[c, :].sum() else 0.0
        out.append(100 * 2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return out
