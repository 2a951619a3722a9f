"""Network description and first-order analysis.

A model is a set of nodes (external arrival rate, service-time distribution,
server count) plus a substochastic routing matrix; row i gives the
probabilities of moving to each node after a service completion at node i,
and any shortfall from 1 is the probability of leaving.  All servers across
all nodes share one CPU: whenever b servers are busy system-wide, each runs
at speed 1/b, so the network as a whole behaves like a single queue fed by
the aggregate arrival stream.

This module solves the traffic equations and computes the deterministic
quantities that the fluid, heavy-traffic, and simulation layers build on:
per-node throughputs and utilizations, remaining-work moments (the total
work a job brings to the system on arrival at a node, counting all future
visits), aggregate service moments, the bottleneck node, and the critical
workload level at which the bottleneck runs out of servers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import ServiceDistribution
from .errors import ModelError, NumericsError, SingularRoutingError

# A matrix with condition number beyond this is treated as singular.
SINGULAR_COND_LIMIT = 1e12
# Relative slack when deciding that two bottleneck ratios are tied.
BOTTLENECK_TIE_RTOL = 1e-9
# Throughputs below this fraction of the largest are treated as zero.
ZERO_THROUGHPUT_RTOL = 1e-12


@dataclass(frozen=True)
class Node:
    """One station: Poisson arrival rate, service law, number of servers."""

    arrival_rate: float
    service: ServiceDistribution
    servers: int


class NetworkModel:
    """Immutable network: nodes plus routing matrix.

    Construction only enforces shape compatibility; value-level problems
    (negative rates, bad row sums, a singular routing structure) are
    reported by :func:`validate` so they can all be surfaced at once.
    """

    __slots__ = ("nodes", "routing")

    def __init__(self, nodes: Sequence[Node], routing):
        nodes = tuple(nodes)
        if not nodes:
            raise ModelError("a model needs at least one node")
        routing = np.array(routing, dtype=float)
        if routing.shape != (len(nodes), len(nodes)):
            raise ModelError(
                f"routing matrix shape {routing.shape} does not match {len(nodes)} nodes"
            )
        routing.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "routing", routing)

    def __setattr__(self, name, value):
        raise AttributeError("NetworkModel is immutable")

    def __repr__(self):
        return f"NetworkModel(J={self.size}, rho={_try_rho(self)})"

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def arrival_rates(self) -> np.ndarray:
        return np.array([n.arrival_rate for n in self.nodes])

    @property
    def service_means(self) -> np.ndarray:
        return np.array([n.service.mean for n in self.nodes])

    @property
    def service_second_moments(self) -> np.ndarray:
        return np.array([n.service.second_moment for n in self.nodes])

    @property
    def service_rates(self) -> np.ndarray:
        return 1.0 / self.service_means

    @property
    def servers(self) -> np.ndarray:
        return np.array([n.servers for n in self.nodes], dtype=np.int64)

    @property
    def exit_probabilities(self) -> np.ndarray:
        return 1.0 - self.routing.sum(axis=1)


def _try_rho(model: "NetworkModel") -> str:
    try:
        return f"{utilization(model)[1]:.4g}"
    except Exception:
        return "?"


def validate(model: NetworkModel) -> list[str]:
    """Return all violated structural invariants (empty list when clean).

    Entries prefixed ``"warning:"`` are degeneracies, not errors: the model
    can still be stored and some operations still apply.
    """
    problems: list[str] = []
    P = model.routing
    for i, node in enumerate(model.nodes):
        if not (node.arrival_rate >= 0 and np.isfinite(node.arrival_rate)):
            problems.append(f"node {i}: arrival rate must be finite and >= 0, got {node.arrival_rate}")
        if node.servers < 1 or node.servers != int(node.servers):
            problems.append(f"node {i}: server count must be a positive integer, got {node.servers}")
    if np.any(P < 0) or np.any(P > 1) or not np.all(np.isfinite(P)):
        problems.append("routing matrix entries must lie in [0, 1]")
    else:
        sums = P.sum(axis=1)
        for i, s in enumerate(sums):
            if s > 1.0 + 1e-12:
                problems.append(f"routing row {i} sums to {s:.6g} > 1")
        if np.linalg.cond(np.eye(model.size) - P.T) > SINGULAR_COND_LIMIT:
            problems.append("I - P^T is numerically singular: no traffic can leave the network")
    if not problems:
        lam = model.arrival_rates
        if lam.sum() <= 0:
            problems.append("warning: no external arrivals (throughputs are all zero)")
        else:
            _, rho = utilization(model)
            if rho >= 1.0:
                problems.append(f"warning: total utilization {rho:.6g} >= 1, the network is unstable")
    return problems


def is_valid(model: NetworkModel) -> bool:
    """True when validate() reports no error-level entries."""
    return all(p.startswith("warning:") for p in validate(model))


def _routing_solve(model: NetworkModel, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.linalg.cond(A) > SINGULAR_COND_LIMIT:
        raise SingularRoutingError(
            "I - P^T is numerically singular: every job must eventually be able to leave"
        )
    return np.linalg.solve(A, b)


def solve_traffic(model: NetworkModel) -> np.ndarray:
    """Per-node total throughputs gamma from gamma = lambda + P^T gamma."""
    P = model.routing
    A = np.eye(model.size) - P.T
    return _routing_solve(model, A, model.arrival_rates)


def remaining_work_moments(model: NetworkModel) -> tuple[np.ndarray, np.ndarray]:
    """First two moments of the remaining system work of a job at node i.

    Remaining work counts the job's service at node i plus everything it
    will still require on later visits.  The first moments solve
    tau = beta + P tau; the second moments satisfy
    tau2 = (I - P)^(-1) (beta2 + 2 beta * (P tau)), with * componentwise.
    Both hold for general service-time distributions.
    """
    P = model.routing
    beta = model.service_means
    beta2 = model.service_second_moments
    A = np.eye(model.size) - P
    if np.linalg.cond(A) > SINGULAR_COND_LIMIT:
        raise SingularRoutingError(
            "I - P is numerically singular: every job must eventually be able to leave"
        )
    tau = np.linalg.solve(A, beta)
    tau2 = np.linalg.solve(A, beta2 + 2.0 * beta * (P @ tau))
    return tau, tau2


def total_service_moments(model: NetworkModel) -> tuple[float, float]:
    """Moments of the total CPU work S one arriving job brings to the system.

    Arrivals enter node i with probability lambda_i / sum(lambda), so the
    moments are mixtures of the remaining-work moments at the entry node.
    """
    lam = model.arrival_rates
    total = lam.sum()
    if total <= 0:
        raise ModelError("total service moments need at least one external arrival")
    mix = lam / total
    tau, tau2 = remaining_work_moments(model)
    return float(mix @ tau), float(mix @ tau2)


def utilization(model: NetworkModel) -> tuple[np.ndarray, float]:
    """Per-node loads rho_i = beta_i gamma_i and their total."""
    gamma = solve_traffic(model)
    rho_i = model.service_means * gamma
    return rho_i, float(rho_i.sum())


def select_bottleneck(gamma: np.ndarray, rho_per_node: np.ndarray,
                      servers: np.ndarray) -> tuple[int, bool, list[str]]:
    """Shared bottleneck rule for integer (network) and fluid server counts.

    The bottleneck minimizes servers_j / rho_j (equivalently
    mu_j K_j / gamma_j).  Nodes with zero throughput never saturate and are
    excluded, with a warning.  Ratios equal to relative 1e-9 are a tie; the
    lowest index wins and the flag is set.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.all(gamma <= 0):
        raise ModelError("bottleneck undefined: no node carries traffic")
    warnings = []
    reachable = gamma > ZERO_THROUGHPUT_RTOL * gamma.max()
    for j in np.flatnonzero(~reachable):
        warnings.append(
            f"warning: node {j} has zero throughput and is excluded from bottleneck selection"
        )
    ratios = np.full(len(gamma), np.inf)
    ratios[reachable] = np.asarray(servers, dtype=float)[reachable] / rho_per_node[reachable]
    best = int(np.argmin(ratios))
    near = np.flatnonzero(ratios <= ratios[best] * (1.0 + BOTTLENECK_TIE_RTOL))
    tie = len(near) > 1
    if tie:
        warnings.append(
            "warning: bottleneck ratio tie between nodes "
            + ", ".join(str(int(j)) for j in near)
            + "; choosing the lowest index"
        )
    return best, tie, warnings


def find_bottleneck(model: NetworkModel) -> tuple[int, bool, list[str]]:
    """Node that saturates first as load grows, plus tie flag and warnings."""
    gamma = solve_traffic(model)
    rho_i = model.service_means * gamma
    return select_bottleneck(gamma, rho_i, model.servers)


def critical_workload(model: NetworkModel) -> float:
    """Workload level at which the bottleneck node exhausts its servers.

    The level is (1 - rho) * K_b * rho * m / rho_b, where m is the mean of
    the limiting workload distribution.  The factor rho * m equals half the
    arrival-rate-weighted remaining-work second moment, so it is evaluated
    by two algebraically equal but computationally independent routes,

        rho * m   via the aggregate moments E[S], E[S^2],
        lambda^T tau_second / 2   via the per-node second moments,

    which must agree to 1e-10 relative; disagreement means the moment
    pipeline is inconsistent and raises.
    """
    _, tau_second = remaining_work_moments(model)
    rho_i, rho = utilization(model)
    b, _, _ = find_bottleneck(model)
    es, es2 = total_service_moments(model)
    m = es2 / (2.0 * es)
    scale = (1.0 - rho) * model.nodes[b].servers / rho_i[b]
    primary = scale * float(model.arrival_rates @ tau_second) / 2.0
    alt = scale * rho * m
    if abs(primary - alt) > 1e-10 * max(abs(primary), abs(alt), 1e-300):
        raise NumericsError(
            f"critical workload routes disagree: {primary!r} vs {alt!r}"
        )
    return primary


@dataclass(frozen=True)
class DerivedQuantities:
    """Everything first-order analysis produces, computed once."""

    gamma: np.ndarray
    rho_per_node: np.ndarray
    rho: float
    tau: np.ndarray
    tau_second: np.ndarray
    total_arrival_rate: float
    entry_mix: np.ndarray
    mean_total_service: float
    second_total_service: float
    residual_mean: float          # m = E[S^2] / (2 E[S])
    sigma_squared: float          # E[S^2] / E[S]
    scv_total_service: float
    bottleneck: int
    bottleneck_tie: bool
    critical_workload: float
    warnings: tuple[str, ...] = field(default=())


def derive(model: NetworkModel) -> DerivedQuantities:
    """Run the full first-order pipeline on a structurally valid model."""
    problems = [p for p in validate(model) if not p.startswith("warning:")]
    if problems:
        raise ModelError("; ".join(problems))
    gamma = solve_traffic(model)
    rho_i, rho = utilization(model)
    tau, tau2 = remaining_work_moments(model)
    lam = model.arrival_rates
    total = lam.sum()
    if total <= 0:
        raise ModelError("analysis needs at least one external arrival")
    es, es2 = total_service_moments(model)
    m = es2 / (2.0 * es)
    b, tie, warnings = find_bottleneck(model)
    w_star = critical_workload(model)
    return DerivedQuantities(
        gamma=gamma,
        rho_per_node=rho_i,
        rho=rho,
        tau=tau,
        tau_second=tau2,
        total_arrival_rate=float(total),
        entry_mix=lam / total,
        mean_total_service=es,
        second_total_service=es2,
        residual_mean=m,
        sigma_squared=es2 / es,
        scv_total_service=es2 / es ** 2 - 1.0,
        bottleneck=b,
        bottleneck_tie=tie,
        critical_workload=w_star,
        warnings=tuple(warnings),
    )


def tandem(arrival_rate: float, services: Sequence[ServiceDistribution],
           servers: Sequence[int]) -> NetworkModel:
    """Convenience constructor: a serial line fed at the first node."""
    J = len(services)
    if len(servers) != J:
        raise ModelError("services and servers must have the same length")
    P = np.zeros((J, J))
    for i in range(J - 1):
        P[i, i + 1] = 1.0
    nodes = [
        Node(arrival_rate=arrival_rate if i == 0 else 0.0,
             service=services[i], servers=int(servers[i]))
        for i in range(J)
    ]
    return NetworkModel(nodes, P)
