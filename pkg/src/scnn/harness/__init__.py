"""Experiment harness: stimuli, probes, fits and figure-style outputs."""

from .analysis import FitError, LinearFit, RatePoint, Trace
from .builtins import builtin_names, builtin_spec
from .experiments import ExperimentResult, run_experiment
from .specfile import ExperimentSpec, load_spec, parse_spec

__all__ = [
    "ExperimentResult",
    "ExperimentSpec",
    "FitError",
    "LinearFit",
    "RatePoint",
    "Trace",
    "builtin_names",
    "builtin_spec",
    "load_spec",
    "parse_spec",
    "run_experiment",
]
