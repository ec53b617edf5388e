"""PD tuning and closed-loop simulation for integrating-plus-dead-time processes."""
from .core import (PAPER_PLANT, ControllerParams, CrossoverPair, DegenerateSpecError, DesignSpec,
                   DivergenceError, IpdtModel, NumericalError, Scenario, SignalProfile, SimTrace,
                   ValidationError, profile_value)
from .freq import MarginReport, loop_phase, loop_response, measure_margins
from .metrics import (IndexReport, StepSpecs, control_energy, integral_indices,
                      servo_segment_indices, step_specs)
from .sim import SimOptions, simulate
from .tuning import (Method, TuneReport, baseline_params, crossover_frequencies,
                     pd_derivative_time, pd_proportional_gain, tune_pd)

__all__ = [
    "PAPER_PLANT", "ControllerParams", "CrossoverPair", "DegenerateSpecError", "DesignSpec",
    "DivergenceError", "IpdtModel", "NumericalError", "Scenario", "SignalProfile", "SimTrace",
    "ValidationError", "profile_value", "MarginReport", "loop_phase", "loop_response",
    "measure_margins", "IndexReport", "StepSpecs", "control_energy", "integral_indices",
    "servo_segment_indices", "step_specs", "SimOptions", "simulate", "Method", "TuneReport",
    "baseline_params", "crossover_frequencies", "pd_derivative_time", "pd_proportional_gain",
    "tune_pd",
]
