"""Queueing networks whose stations share one CPU by processor sharing.

Layer one is a network of multi-server stations with probabilistic routing;
layer two is a single CPU that all busy servers share equally.  The package
provides exact first-order analysis (traffic equations, remaining-work
moments, bottleneck and critical workload), a fluid ordinary-differential
model with an invariant-manifold description, closed-form heavy-traffic
approximations for delay probability and mean sojourn time, a fast
discrete-event simulator, and a truncated continuous-time Markov-chain
oracle for small exponential instances.
"""

from .benchmarks import BENCHMARK_LOAD, BENCHMARK_ROWS, BenchmarkRow, benchmark_model
from .ctmc import StationaryLaw, stationary_law
from .distributions import (Deterministic, DistributionError, Exponential,
                            HyperExponential2, ServiceDistribution, fit_two_moments)
from .errors import ModelError, NumericsError, SingularRoutingError, UnstableModelError
from .fluid import FluidConfig, FluidModel, FluidTrajectory
from .heavy_traffic import (HeavyTrafficSummary, avi_itzhak_halfin, delay_probability,
                            mean_sojourn, mean_sojourn_raw, queue_length_law,
                            summarize, tandem_residual_mean)
from .model import (DerivedQuantities, NetworkModel, Node, critical_workload,
                    derive, find_bottleneck, remaining_work_moments, solve_traffic,
                    tandem, total_service_moments, utilization, validate)
from .modelfile import (ModelFileError, apply_scenario, dump_model, load_model,
                        parse_model)
from .simulate import Estimate, SimConfig, SimEstimates, SimTrace, simulate

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_LOAD",
    "BENCHMARK_ROWS",
    "BenchmarkRow",
    "benchmark_model",
    "StationaryLaw",
    "stationary_law",
    "Deterministic",
    "DistributionError",
    "Exponential",
    "HyperExponential2",
    "ServiceDistribution",
    "fit_two_moments",
    "ModelError",
    "NumericsError",
    "SingularRoutingError",
    "UnstableModelError",
    "FluidConfig",
    "FluidModel",
    "FluidTrajectory",
    "HeavyTrafficSummary",
    "avi_itzhak_halfin",
    "delay_probability",
    "mean_sojourn",
    "mean_sojourn_raw",
    "queue_length_law",
    "summarize",
    "tandem_residual_mean",
    "DerivedQuantities",
    "NetworkModel",
    "Node",
    "critical_workload",
    "derive",
    "find_bottleneck",
    "remaining_work_moments",
    "solve_traffic",
    "tandem",
    "total_service_moments",
    "utilization",
    "validate",
    "ModelFileError",
    "apply_scenario",
    "dump_model",
    "load_model",
    "parse_model",
    "Estimate",
    "SimConfig",
    "SimEstimates",
    "SimTrace",
    "simulate",
    "__version__",
]
