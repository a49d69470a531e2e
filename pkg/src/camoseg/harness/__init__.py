"""Dataset loading, synthetic suites, benchmark execution, CLI."""

from .dataset import DatasetSpec, load_dataset
from .runner import RunConfig, RunFlags, RunResult, run_benchmark
from .synth import make_synthetic_suite

__all__ = [
    "DatasetSpec",
    "RunConfig",
    "RunFlags",
    "RunResult",
    "load_dataset",
    "make_synthetic_suite",
    "run_benchmark",
]
