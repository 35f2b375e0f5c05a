"""Handlers module: one runner per experiment kind."""
from .experiments import EXPERIMENTS, RunContext, RunResult, run_experiment

__all__ = ["EXPERIMENTS", "RunContext", "RunResult", "run_experiment"]
