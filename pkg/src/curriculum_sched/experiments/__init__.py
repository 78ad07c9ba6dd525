from .config import ExperimentConfig, fast_profile
from .metrics import Metrics, evaluate
from .report import emit_results, regenerate
from .runner import RunResult, prepare_data, repeat_runs, run_training
from .stats import welch_t_test
