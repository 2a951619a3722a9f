"""Deterministic fluid dynamics of the shared-CPU network.

The fluid state x(t) tracks the mass of jobs at each node.  Node i holds
min(x_i, K_i) active servers and receives the CPU share

    R_i(x) = min(x_i, K_i) / sum_j min(x_j, K_j),       R(0) = 0,

so mass drains from node i at rate mu_i R_i(x) and is redistributed through
the routing matrix:

    x'(t) = Psi(x) = lambda + (P^T - I) (mu * R(x)).

The workload tau^T x is conserved at critical load.  Trajectories relax onto
an invariant manifold parameterized by the workload: ``invariant_point(w)``
fills all nodes proportionally to their loads until the bottleneck runs out
of servers at w = w_star, after which the surplus queues at the bottleneck.
A quadratic Lyapunov function measures the distance from that point.

Server capacities here are plain (possibly fractional) numbers supplied by
the caller; the heavy-traffic layer passes scaled capacities when it uses
this module to approximate a stochastic system.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import ModelError, NumericsError, SingularRoutingError
from .model import SINGULAR_COND_LIMIT, NetworkModel, select_bottleneck

# Auto-selected RK4 step: h = min(AUTO_STEP_HORIZON_FRAC * T, AUTO_STEP_RATE_FRAC / scale).
AUTO_STEP_HORIZON_FRAC = 1e-3
AUTO_STEP_RATE_FRAC = 1e-2


@dataclass(frozen=True)
class FluidConfig:
    """Integration settings for the fixed-step RK4 solver."""

    horizon: float
    step: Optional[float] = None     # None: auto from horizon and rate scale
    max_samples: int = 1001          # trajectory rows kept (ends always included)

    def __post_init__(self):
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.step is not None and not (0 < self.step <= self.horizon):
            raise ValueError("step must lie in (0, horizon]")
        if self.max_samples < 2:
            raise ValueError("max_samples must be at least 2")


@dataclass(frozen=True)
class FluidTrajectory:
    """Sampled solution of the fluid ODE with per-sample diagnostics."""

    times: np.ndarray        # (n,)
    states: np.ndarray       # (n, J)
    workload: np.ndarray     # (n,) tau^T x
    lyapunov: np.ndarray     # (n,) quadratic distance from invariant point
    dist_manifold: np.ndarray  # (n,) sup-norm distance from invariant point
    step: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def lyapunov_monotone(self, rtol: float = 1e-9, atol: Optional[float] = None) -> bool:
        """True when the Lyapunov values never increase between samples.

        An increase of at most rtol * current value is tolerated, plus a tiny
        absolute floor for rounding noise once the value has collapsed to
        machine zero.
        """
        ly = self.lyapunov
        if np.any(np.isnan(ly)):
            return False
        if atol is None:
            atol = 1e-15 * (1.0 + float(ly[0]))
        return bool(np.all(np.diff(ly) <= rtol * ly[:-1] + atol))

    def to_csv(self, target) -> None:
        """Write columns t, x_1..x_J, workload, lyapunov, dist_manifold."""
        J = self.states.shape[1]
        header = ["t"] + [f"x_{i + 1}" for i in range(J)]
        header += ["workload", "lyapunov", "dist_manifold"]
        table = np.column_stack(
            [self.times, self.states, self.workload, self.lyapunov, self.dist_manifold]
        )
        if hasattr(target, "write"):
            _write_csv(target, header, table)
        else:
            with open(target, "w", encoding="utf-8") as fh:
                _write_csv(fh, header, table)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def _write_csv(fh, header, table) -> None:
    fh.write(",".join(header) + "\n")
    for row in table:
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class FluidModel:
    """Fluid parameters: arrival rates, mean services, routing, capacities."""

    arrival_rates: np.ndarray
    service_means: np.ndarray
    routing: np.ndarray
    servers: np.ndarray

    def __post_init__(self):
        for name in ("arrival_rates", "service_means", "routing", "servers"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        J = self.size
        if self.routing.shape != (J, J):
            raise ModelError("routing matrix shape does not match the number of nodes")
        if len(self.service_means) != J or len(self.servers) != J:
            raise ModelError("parameter vectors must all have the same length")
        if np.any(self.service_means <= 0):
            raise ModelError("service means must be positive")
        if np.any(self.servers <= 0):
            raise ModelError("server capacities must be positive")
        if np.any(self.arrival_rates < 0):
            raise ModelError("arrival rates must be nonnegative")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_network(cls, network: NetworkModel, servers: Optional[Sequence[float]] = None,
                     critical: bool = False) -> "FluidModel":
        """Copy a network's parameters; optionally rescale arrivals to load 1.

        ``servers`` overrides the capacity vector (the heavy-traffic layer
        passes (1 - rho) * K here); by default the network's own counts are
        used.
        """
        lam = network.arrival_rates
        if critical:
            from .model import utilization

            _, rho = utilization(network)
            if rho <= 0:
                raise ModelError("cannot rescale to critical load without traffic")
            lam = lam / rho
        return cls(
            arrival_rates=lam,
            service_means=network.service_means,
            routing=network.routing,
            servers=network.servers.astype(float) if servers is None else np.asarray(servers, float),
        )

    @property
    def size(self) -> int:
        return len(self.arrival_rates)

    @property
    def service_rates(self) -> np.ndarray:
        return 1.0 / self.service_means

    # -- cached first-order quantities -------------------------------------

    @cached_property
    def _inv_i_minus_pt(self) -> np.ndarray:
        A = np.eye(self.size) - self.routing.T
        if np.linalg.cond(A) > SINGULAR_COND_LIMIT:
            raise SingularRoutingError("I - P^T is numerically singular")
        return np.linalg.inv(A)

    @cached_property
    def gamma(self) -> np.ndarray:
        return self._inv_i_minus_pt @ self.arrival_rates

    @cached_property
    def rho_per_node(self) -> np.ndarray:
        return self.service_means * self.gamma

    @cached_property
    def rho(self) -> float:
        return float(self.rho_per_node.sum())

    @cached_property
    def tau(self) -> np.ndarray:
        """Remaining-work means: tau = (I - P)^(-1) beta = M^T beta."""
        return self._inv_i_minus_pt.T @ self.service_means

    @cached_property
    def _bottleneck_info(self) -> tuple[int, bool, tuple[str, ...]]:
        b, tie, warnings = select_bottleneck(self.gamma, self.rho_per_node, self.servers)
        return b, tie, tuple(warnings)

    @property
    def bottleneck(self) -> int:
        return self._bottleneck_info[0]

    @property
    def bottleneck_tie(self) -> bool:
        return self._bottleneck_info[1]

    @property
    def warnings(self) -> tuple[str, ...]:
        return self._bottleneck_info[2]

    @cached_property
    def manifold_caps(self) -> np.ndarray:
        """Invariant-point state at w = w_star (bottleneck exactly full)."""
        b = self.bottleneck
        caps = self.rho_per_node * (float(self.servers[b]) / self.rho_per_node[b])
        caps[b] = float(self.servers[b])
        caps.setflags(write=False)
        return caps

    @cached_property
    def critical_workload(self) -> float:
        """w_star = tau^T x at the state where the bottleneck just fills up."""
        return float(self.tau @ self.manifold_caps)

    @cached_property
    def lyapunov_certified(self) -> bool:
        """True when the symmetric part of (I - P^T)^(-1) is positive definite.

        The quadratic form is guaranteed nonnegative only in that case; for
        networks failing the check the Lyapunov diagnostic is still reported
        but carries no monotonicity guarantee.
        """
        M = self._inv_i_minus_pt
        eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        return bool(eigs.min() > -1e-12 * max(1.0, eigs.max()))

    # -- pointwise dynamics -------------------------------------------------

    def share(self, x: np.ndarray) -> np.ndarray:
        """CPU share vector R(x); zero at the empty state."""
        active = np.minimum(np.maximum(np.asarray(x, dtype=float), 0.0), self.servers)
        total = active.sum()
        if total <= 0.0:
            return np.zeros(self.size)
        return active / total

    def drift(self, x: np.ndarray) -> np.ndarray:
        """Psi(x) = lambda + (P^T - I) (mu * R(x))."""
        outflow = self.service_rates * self.share(x)
        return self.arrival_rates - outflow + self.routing.T @ outflow

    def workload(self, x: np.ndarray) -> float:
        """tau^T x: total work the current state still requires."""
        return float(self.tau @ np.asarray(x, dtype=float))

    # -- invariant manifold --------------------------------------------------

    def invariant_point(self, w: float) -> np.ndarray:
        """The state on the invariant manifold with workload exactly w.

        Below the critical workload every node fills proportionally to its
        load; beyond it only the bottleneck grows, at slope 1/tau_bottleneck.
        """
        if w < 0 or not np.isfinite(w):
            raise ValueError(f"workload must be nonnegative and finite, got {w}")
        b = self.bottleneck
        w_star = self.critical_workload
        if w <= w_star:
            return self.manifold_caps * (w / w_star)
        x = self.manifold_caps.copy()
        x[b] += (w - w_star) / self.tau[b]
        return x

    # The lifting map of the workload process is exactly the invariant point.
    lifting_map = invariant_point

    def lyapunov(self, x: np.ndarray, w: Optional[float] = None) -> float:
        """Quadratic distance (x - x_w)^T (I - P^T)^(-1) (x - x_w).

        ``w`` defaults to the workload of x itself, which is the conserved
        value along critical-load trajectories.
        """
        x = np.asarray(x, dtype=float)
        if w is None:
            w = self.workload(x)
        d = x - self.invariant_point(w)
        return float(d @ self._inv_i_minus_pt @ d)

    def distance_to_manifold(self, x: np.ndarray) -> float:
        """Sup-norm distance between x and the invariant point of its workload."""
        x = np.asarray(x, dtype=float)
        return float(np.max(np.abs(x - self.invariant_point(self.workload(x)))))

    # -- integration ----------------------------------------------------------

    def default_step(self, horizon: float) -> float:
        scale = float(self.arrival_rates.sum() + 2.0 * self.service_rates.max())
        return min(AUTO_STEP_HORIZON_FRAC * horizon, AUTO_STEP_RATE_FRAC / max(scale, 1e-12))

    def integrate(self, x0: Sequence[float], config: FluidConfig) -> FluidTrajectory:
        """Run classical RK4 from x0 and sample states plus diagnostics.

        Components are projected back onto [0, inf) after every step; the
        dynamics never push a coordinate through zero, so the projection only
        guards against rounding.  A non-finite state aborts with the last
        good sample in the error message.
        """
        x = np.array(x0, dtype=float)
        if x.shape != (self.size,):
            raise ModelError(f"x0 must have {self.size} components")
        if np.any(x < 0):
            raise ModelError("x0 must be nonnegative")
        h = config.step if config.step is not None else self.default_step(config.horizon)
        n_steps = max(1, int(round(config.horizon / h)))
        h = config.horizon / n_steps
        stride = max(1, -(-n_steps // (config.max_samples - 1)))

        sample_t = [0.0]
        sample_x = [x.copy()]
        for k in range(1, n_steps + 1):
            k1 = self.drift(x)
            k2 = self.drift(np.maximum(x + 0.5 * h * k1, 0.0))
            k3 = self.drift(np.maximum(x + 0.5 * h * k2, 0.0))
            k4 = self.drift(np.maximum(x + h * k3, 0.0))
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            np.maximum(x, 0.0, out=x)
            if not np.all(np.isfinite(x)):
                raise NumericsError(
                    f"fluid state became non-finite at t={k * h:.6g} "
                    f"(last good state {sample_x[-1]!r} at t={sample_t[-1]:.6g})"
                )
            if k % stride == 0 or k == n_steps:
                sample_t.append(k * h)
                sample_x.append(x.copy())

        times = np.array(sample_t)
        states = np.array(sample_x)
        work = states @ self.tau
        try:
            lyap = np.array([self.lyapunov(s, w) for s, w in zip(states, work)])
            dist = np.array([
                float(np.max(np.abs(s - self.invariant_point(w))))
                for s, w in zip(states, work)
            ])
        except ModelError:
            # No traffic anywhere: the manifold is undefined, diagnostics are not.
            lyap = np.full(len(times), np.nan)
            dist = np.full(len(times), np.nan)
        return FluidTrajectory(times=times, states=states, workload=work,
                               lyapunov=lyap, dist_manifold=dist, step=h)

    def relax_to_manifold(self, x0: Sequence[float], tol: float = 1e-4,
                          horizon: float = 50.0, max_doublings: int = 6,
                          ) -> tuple[FluidTrajectory, bool]:
        """Integrate with doubling horizons until the invariant point is reached.

        Returns the last trajectory and whether its terminal state lies within
        ``tol`` (sup-norm) of the invariant point of the initial workload.
        """
        target = self.invariant_point(self.workload(np.asarray(x0, dtype=float)))
        traj = None
        for _ in range(max_doublings + 1):
            traj = self.integrate(x0, FluidConfig(horizon=horizon))
            if float(np.max(np.abs(traj.final_state - target))) <= tol:
                return traj, True
            horizon *= 2.0
        return traj, False

    def richardson_error(self, x0: Sequence[float], config: FluidConfig) -> float:
        """Sup-norm gap between terminal states at step h and h/2.

        A cheap a-posteriori accuracy probe for the fixed-step integrator.
        """
        h = config.step if config.step is not None else self.default_step(config.horizon)
        coarse = self.integrate(x0, FluidConfig(config.horizon, step=h, max_samples=2))
        fine = self.integrate(x0, FluidConfig(config.horizon, step=h / 2.0, max_samples=2))
        return float(np.max(np.abs(coarse.final_state - fine.final_state)))
