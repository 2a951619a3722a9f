"""Exact stationary law of small all-exponential networks.

With exponential services the node-occupancy vector is a continuous-time
Markov chain on Z_+^J: arrivals at rate lambda_i, completions at node i at
rate mu_i R_i(x) split between leaving and re-routing by the routing row.
This module truncates each coordinate at a level N (transitions that would
push past N are suppressed, i.e. reflected), assembles the sparse generator
over the (N+1)^J states, and solves the balance equations directly.

The probability mass caught on the truncation boundary is reported; it
bounds the bias of every expectation computed here, so a tiny boundary mass
certifies the result.  Intended for cross-validating the simulator and the
closed-form approximations on small instances, not for production sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .distributions import Exponential
from .errors import ModelError
from .model import NetworkModel, validate

MAX_STATES = 1_000_000


@dataclass(frozen=True)
class StationaryLaw:
    """Stationary distribution summary of the truncated chain."""

    level: int                      # truncation level N per coordinate
    n_states: int
    mean_queue: np.ndarray          # E[X_i]
    mean_total: float
    mean_sojourn: float             # by Little's law at the external rate
    marginals: tuple[np.ndarray, ...]  # P(X_i = k) for k = 0..N
    delay_probability: np.ndarray   # P(X_i >= K_i)
    truncation_mass: float          # P(any X_i = N); error bound for the above

    def tail(self, node: int, level: float) -> float:
        """P(X_node > level) from the marginal."""
        marg = self.marginals[node]
        k = int(np.floor(level))
        if k >= len(marg) - 1:
            return 0.0
        return float(marg[max(k + 1, 0):].sum())


def stationary_law(model: NetworkModel, level: int) -> StationaryLaw:
    """Solve the truncated chain at per-coordinate level N = `level`."""
    problems = [p for p in validate(model) if not p.startswith("warning:")]
    if problems:
        raise ModelError("; ".join(problems))
    for i, node in enumerate(model.nodes):
        if not isinstance(node.service, Exponential):
            raise ModelError(
                f"node {i}: exact analysis supports exponential service only, "
                f"got {type(node.service).__name__}"
            )
    J = model.size
    N = int(level)
    if N < 1:
        raise ModelError("truncation level must be at least 1")
    if max(model.servers) > N:
        raise ModelError("truncation level must cover the largest server count")
    n_states = (N + 1) ** J
    if n_states > MAX_STATES:
        raise ModelError(
            f"state space too large: (N+1)^J = {n_states} > {MAX_STATES}"
        )
    lam = model.arrival_rates
    if lam.sum() <= 0:
        raise ModelError("exact analysis needs at least one external arrival")
    mu = model.service_rates
    P = model.routing
    K = model.servers

    # state enumeration; coordinate i has stride (N+1)^(J-1-i)
    shape = (N + 1,) * J
    idx = np.arange(n_states)
    states = np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64)
    strides = np.array([(N + 1) ** (J - 1 - i) for i in range(J)], dtype=np.int64)

    active = np.minimum(states, K)
    busy = active.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(busy[:, None] > 0, active / np.maximum(busy, 1)[:, None], 0.0)

    rows, cols, vals = [], [], []

    def add(src, dst, rate):
        rows.append(src)
        cols.append(dst)
        vals.append(rate)

    exit_prob = 1.0 - P.sum(axis=1)
    for i in range(J):
        if lam[i] > 0.0:
            mask = states[:, i] < N
            src = idx[mask]
            add(src, src + strides[i], np.full(len(src), lam[i]))
        comp = mu[i] * share[:, i]
        if exit_prob[i] > 0.0:
            mask = states[:, i] > 0
            src = idx[mask]
            add(src, src - strides[i], comp[mask] * exit_prob[i])
        for j in range(J):
            if P[i, j] <= 0.0 or j == i:
                continue
            mask = (states[:, i] > 0) & (states[:, j] < N)
            src = idx[mask]
            add(src, src - strides[i] + strides[j], comp[mask] * P[i, j])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    diag = np.zeros(n_states)
    np.add.at(diag, rows, vals)

    # balance equations transposed (pi Q = 0), with the last equation replaced
    # by normalization; the dropped balance row is the all-full corner state.
    keep = cols != n_states - 1
    eq_rows = np.concatenate([cols[keep], np.arange(n_states)[idx != n_states - 1],
                              np.full(n_states, n_states - 1)])
    eq_cols = np.concatenate([rows[keep], idx[idx != n_states - 1], idx])
    eq_vals = np.concatenate([vals[keep], -diag[idx != n_states - 1],
                              np.ones(n_states)])
    A = sp.csc_matrix((eq_vals, (eq_rows, eq_cols)), shape=(n_states, n_states))
    b = np.zeros(n_states)
    b[-1] = 1.0
    pi = spla.spsolve(A, b)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()

    marginals = tuple(
        np.bincount(states[:, i], weights=pi, minlength=N + 1) for i in range(J)
    )
    mean_queue = np.array([float(np.arange(N + 1) @ m) for m in marginals])
    boundary = float(pi[(states == N).any(axis=1)].sum())
    delay = np.array([float(marginals[i][K[i]:].sum()) for i in range(J)])
    return StationaryLaw(
        level=N,
        n_states=n_states,
        mean_queue=mean_queue,
        mean_total=float(mean_queue.sum()),
        mean_sojourn=float(mean_queue.sum() / lam.sum()),
        marginals=marginals,
        delay_probability=delay,
        truncation_mass=boundary,
    )
