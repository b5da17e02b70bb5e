"""Peak age-of-information simulator for Poisson bipolar networks with
locally adaptive channel access."""

from .channel import (ChannelParams, InterfererView, dominant_success_probability,
                      interference_factor, slot_sinr_success, success_probability)
from .config import ConfigError, ExperimentSpec, SweepVariable, parse_config
from .engine import (LinkRecord, Mode, SimConfig, SimResult, network_peak_aoi,
                     network_peak_aoi_truncated, run_experiment, run_realization)
from .geometry import (Boundary, NetworkRealization, Point2, RegionSpec, StoppingSet,
                       StoppingSetSpec, distance, observed_receivers, sample_bipolar, shift)
from .policy import (LocalObservation, PolicyAssignment, assign_policy,
                     example_b_closed_form, fixed_point_lhs, opportunism_condition,
                     solve_eta, tail_integral)
from .queueing import (AoiStats, LinkState, analytic_peak_aoi, peak_aoi_estimate,
                       step_arrival, step_delivery)

__version__ = "0.1.0"

__all__ = [
    "AoiStats", "Boundary", "ChannelParams", "ConfigError", "ExperimentSpec",
    "InterfererView", "LinkRecord", "LinkState", "LocalObservation", "Mode",
    "NetworkRealization", "Point2", "PolicyAssignment", "RegionSpec", "SimConfig",
    "SimResult", "StoppingSet", "StoppingSetSpec", "SweepVariable",
    "analytic_peak_aoi", "assign_policy", "distance", "dominant_success_probability",
    "example_b_closed_form", "fixed_point_lhs", "interference_factor",
    "network_peak_aoi", "network_peak_aoi_truncated", "observed_receivers",
    "opportunism_condition",
    "parse_config", "peak_aoi_estimate", "run_experiment", "run_realization",
    "sample_bipolar", "shift", "slot_sinr_success", "solve_eta", "step_arrival",
    "step_delivery", "success_probability", "tail_integral",
]
