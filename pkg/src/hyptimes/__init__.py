"""Hyperbolic times for one-dimensional maps with singular sets."""

from .dynamics import (MapModel, OrbitTrace, dist_delta, estimate_beta, eval_map,
                       inv_deriv_norm, orbit_trace, orbit_traces)
from .hyperbolic import (Censored, HTParams, HTScanResult, first_ht, frequency_estimate,
                         is_hyperbolic_time_naive, scan_hyperbolic_times)
from .maps import doubling, linear_expanding, paper_sqrt, piecewise_linear, tent

__version__ = "0.1.0"

__all__ = [
    "MapModel", "OrbitTrace", "dist_delta", "estimate_beta", "eval_map", "inv_deriv_norm",
    "orbit_trace", "orbit_traces", "Censored", "HTParams", "HTScanResult", "first_ht",
    "frequency_estimate", "is_hyperbolic_time_naive", "scan_hyperbolic_times", "doubling",
    "linear_expanding", "paper_sqrt", "piecewise_linear", "tent",
]
