"""Bench harness: workloads, trace replay, cost model and reports"""

from .cost_model import CostParams, cost_model, fit_coefficient, node_bound, predict
from .runner import Metrics, TraceRunner, run
from .workload import PRESETS, WorkloadSpec, ZipfianGenerator, generate, generate_trace

__all__ = [
    'CostParams',
    'cost_model',
    'fit_coefficient',
    'node_bound',
    'predict',
    'Metrics',
    'TraceRunner',
    'run',
    'PRESETS',
    'WorkloadSpec',
    'ZipfianGenerator',
    'generate',
    'generate_trace'
]
