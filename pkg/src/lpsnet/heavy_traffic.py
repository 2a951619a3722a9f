"""Closed-form heavy-traffic approximations for the shared-CPU network.

In heavy traffic the total workload, viewed at the right scale, becomes an
exponential random variable with mean m = E[S^2] / (2 E[S]), and the queue
lengths are recovered by lifting that workload onto the fluid invariant
manifold with server capacities shrunk to (1 - rho) K.  Everything here is
a deterministic formula in the first-order quantities of the model.

Two variants of each quantity are produced.  The plain exponential-limit
("raw") forms follow directly from the limit theorems; the corrected forms
replace exp(-(1 - rho) c) by rho^c, which agrees asymptotically and is much
more accurate at moderate loads, and scale the mean queue sizes by rho so
that Little's law ties them exactly to the mean sojourn time.  The corrected
forms are the primary outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, UnstableModelError
from .model import DerivedQuantities, NetworkModel, derive


@dataclass(frozen=True)
class HeavyTrafficSummary:
    """All heavy-traffic outputs for one stable model."""

    theta: float                  # drift parameter of the scaling; fixed at 1
    n_star: float                 # scale factor 1 / (1 - rho)
    workload_mean: float          # mean of the limiting exponential workload (= m)
    critical_workload: float      # w_star, in the scaled units
    fluid_servers: np.ndarray     # (1 - rho) * K
    bottleneck: int
    bottleneck_tie: bool
    delay_probability: float
    delay_probability_raw: float
    mean_sojourn: float
    mean_sojourn_raw: float
    mean_queue: np.ndarray        # corrected per-node E[X_i]
    mean_queue_raw: np.ndarray
    warnings: tuple[str, ...]


def _stable_derived(model: NetworkModel) -> DerivedQuantities:
    d = derive(model)
    if d.rho >= 1.0:
        raise UnstableModelError(
            f"total utilization {d.rho:.6g} >= 1: heavy-traffic approximations need a stable model"
        )
    return d


def delay_probability(model: NetworkModel) -> tuple[float, float]:
    """P(an arriving job finds all bottleneck servers busy): (corrected, raw).

    Corrected: rho ** (rho K_b / rho_b).  Raw exponential-limit form:
    exp(-(1 - rho) rho K_b / rho_b).  The two agree as rho -> 1.
    """
    d = _stable_derived(model)
    return _delay_probability(model, d)


def _delay_probability(model: NetworkModel, d: DerivedQuantities) -> tuple[float, float]:
    b = d.bottleneck
    c = d.rho * model.nodes[b].servers / d.rho_per_node[b]
    return d.rho ** c, math.exp(-(1.0 - d.rho) * c)


def mean_sojourn(model: NetworkModel) -> float:
    """Approximate mean time in system of an arriving job (corrected form).

        E[V] = E[S] / (1 - rho) * ((1 - p_d) + p_d m / tau_b)

    A delayed job's surplus workload drains through the bottleneck, hence the
    m / tau_b weight on the delayed fraction.
    """
    d = _stable_derived(model)
    p_d, _ = _delay_probability(model, d)
    b = d.bottleneck
    return (d.mean_total_service / (1.0 - d.rho)
            * ((1.0 - p_d) + p_d * d.residual_mean / d.tau[b]))


def mean_sojourn_raw(model: NetworkModel) -> float:
    """Mean sojourn from the uncorrected exponential limit (diagnostic)."""
    d = _stable_derived(model)
    _, p_raw = _delay_probability(model, d)
    b = d.bottleneck
    return ((1.0 / d.total_arrival_rate) / (1.0 - d.rho)
            * ((1.0 - p_raw) + p_raw * d.residual_mean / d.tau[b]))


def avi_itzhak_halfin(model: NetworkModel) -> float:
    """Single-node reference formula for the mean sojourn time.

        E[V] = (1 - rho^K) E[S] / (1 - rho) + rho^K m / (1 - rho)

    Exact for K = 1 (matches the Pollaczek-Khinchine mean) and in the
    K -> infinity limit (egalitarian processor sharing).  The general
    network approximation must coincide with this when J = 1.
    """
    if model.size != 1:
        raise ModelError("the single-node reference formula applies to one-node models only")
    d = _stable_derived(model)
    p_d = d.rho ** model.nodes[0].servers
    return ((1.0 - p_d) * d.mean_total_service / (1.0 - d.rho)
            + p_d * d.residual_mean / (1.0 - d.rho))


def tandem_residual_mean(model: NetworkModel) -> float:
    """Cross-check route for m on a two-node tandem line.

        m = (rho_1 / rho)(beta_1^e + beta_2) + (rho_2 / rho) beta_2^e

    where beta^e is the stationary-excess mean of each service law.  Must
    agree with the general route E[S^2] / (2 E[S]) to rounding; keeping both
    alive guards the moment pipeline.
    """
    if model.size != 2:
        raise ModelError("the tandem cross-check applies to two-node lines only")
    P = model.routing
    lam = model.arrival_rates
    if not (P[0, 1] == 1.0 and np.all(P[1] == 0.0) and P[0, 0] == 0.0 and lam[1] == 0.0):
        raise ModelError("the tandem cross-check needs routing 1 -> 2 -> out with arrivals at node 1")
    d = _stable_derived(model)
    s1, s2 = model.nodes[0].service, model.nodes[1].service
    rho1, rho2 = d.rho_per_node
    return float((rho1 / d.rho) * (s1.residual_mean + s2.mean)
                 + (rho2 / d.rho) * s2.residual_mean)


def _law_pieces(model: NetworkModel, d: DerivedQuantities):
    """Common geometry of the lifted queue-length laws.

    Returns (fluid caps, w_star, b) where caps are the per-node invariant
    levels at the critical workload, under fluid capacities (1 - rho) K.
    """
    b = d.bottleneck
    K = model.servers.astype(float)
    shrink = 1.0 - d.rho
    caps = shrink * d.rho_per_node * (K[b] / d.rho_per_node[b])
    caps[b] = shrink * K[b]
    w_star = shrink * K[b] * d.rho * d.residual_mean / d.rho_per_node[b]
    return caps, w_star, b


def queue_length_law(model: NetworkModel, node: int, level: float,
                     raw: bool = False) -> tuple[float, float]:
    """Stationary law of the number of jobs at one node: (P(X > level), E[X]).

    The law is the image of the exponential workload under the lifting map,
    rescaled to actual units.  At the bottleneck it is a stretched exponential
    below K and a genuine exponential tail above; elsewhere it is truncated at
    the node's cap with an atom there of size p_d.

    ``raw`` selects the uncorrected exponential-limit forms, which are exactly
    the law of the lifted workload (tail and mean integrate consistently);
    the corrected forms (default) are the more accurate moderate-load
    formulas, mutually consistent only as rho -> 1.
    """
    if not 0 <= node < model.size:
        raise ModelError(f"node index {node} out of range")
    if level < 0 or not np.isfinite(level):
        raise ValueError(f"level must be nonnegative and finite, got {level}")
    d = _stable_derived(model)
    caps, w_star, b = _law_pieces(model, d)
    p_d, p_raw = _delay_probability(model, d)
    m = d.residual_mean
    y = (1.0 - d.rho) * level

    if node == b:
        if y <= caps[b]:
            w_th = w_star * (y / caps[b])
        else:
            w_th = w_star + (y - caps[b]) * d.tau[b]
    else:
        w_th = w_star * (y / caps[node]) if y < caps[node] else math.inf

    if math.isinf(w_th):
        tail = 0.0
    elif raw:
        tail = math.exp(-w_th / m)
    else:
        tail = d.rho ** (w_th / ((1.0 - d.rho) * m))

    share = d.rho_per_node[node] / d.rho
    p = p_raw if raw else p_d
    mean = share * (1.0 - p)
    if node == b:
        mean += (m / d.tau[b]) * p
    if not raw:
        mean *= d.rho
    mean /= 1.0 - d.rho
    return tail, mean


def summarize(model: NetworkModel) -> HeavyTrafficSummary:
    """Compute the full heavy-traffic summary for a stable model."""
    d = _stable_derived(model)
    p_d, p_raw = _delay_probability(model, d)
    b = d.bottleneck
    m = d.residual_mean
    shrink = 1.0 - d.rho

    share = d.rho_per_node / d.rho
    queue_c = share * (1.0 - p_d)
    queue_c[b] += (m / d.tau[b]) * p_d
    queue_c *= d.rho / shrink
    queue_r = share * (1.0 - p_raw)
    queue_r[b] += (m / d.tau[b]) * p_raw
    queue_r /= shrink

    caps, w_star, _ = _law_pieces(model, d)
    ev = (d.mean_total_service / shrink) * ((1.0 - p_d) + p_d * m / d.tau[b])
    ev_raw = (1.0 / d.total_arrival_rate / shrink) * ((1.0 - p_raw) + p_raw * m / d.tau[b])
    return HeavyTrafficSummary(
        theta=1.0,
        n_star=1.0 / shrink,
        workload_mean=m,
        critical_workload=w_star,
        fluid_servers=shrink * model.servers.astype(float),
        bottleneck=b,
        bottleneck_tie=d.bottleneck_tie,
        delay_probability=p_d,
        delay_probability_raw=p_raw,
        mean_sojourn=ev,
        mean_sojourn_raw=ev_raw,
        mean_queue=queue_c,
        mean_queue_raw=queue_r,
        warnings=d.warnings,
    )
