"""Curriculum data scheduling for mini-batch classifier training.

Submodules:

* ``nn``         - dense classifier, weighted loss, backprop, optimizers
* ``scoring``    - prior and MC-dropout uncertainty scores, probabilities
* ``scheduler``  - reorder / subsets / weights epoch plans
* ``data``       - MNIST IDX loading, splits, controlled corruptions
* ``experiments``- training runs, metrics, significance, CSV reports, CLI
"""

from . import data, nn, scheduler, scoring

__version__ = "0.1.0"
