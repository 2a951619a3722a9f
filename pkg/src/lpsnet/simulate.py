"""Monte Carlo estimation of stationary performance measures.

A run is a fixed number of independent replications.  Each replication owns
private random substreams derived from (seed, replication index), simulates
until a fixed number of jobs have left the system, discards a warmup
fraction of those departures, and reports one mean per measure.  Point
estimates average the replication means; uncertainty is a Student-t
confidence interval across replications.  Results are bit-reproducible for
a given (model, config): nothing depends on scheduling or wall-clock state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as _stats

from . import _engine
from .distributions import Deterministic, Exponential, HyperExponential2
from .errors import ModelError, NumericsError
from .model import NetworkModel, utilization, validate
from .rng import ALGORITHM


@dataclass(frozen=True)
class SimConfig:
    """Replication plan and estimator settings."""

    seed: int
    replications: int = 10
    horizon_jobs: int = 100_000
    warmup_fraction: float = 0.2
    confidence: float = 0.95
    collect_trace: bool = False
    debug_checks: bool = False

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.horizon_jobs < 1:
            raise ValueError("horizon must be at least one completed job")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError("warmup fraction must lie in [0, 1)")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")

    @property
    def warmup_jobs(self) -> int:
        return int(self.horizon_jobs * self.warmup_fraction)


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a confidence-interval half width (None if 1 rep)."""

    value: float
    half_width: Optional[float]

    def covers(self, target: float) -> bool:
        if self.half_width is None or math.isnan(self.value):
            return False
        return abs(self.value - target) <= self.half_width


@dataclass(frozen=True)
class ReplicationStats:
    """Raw per-replication measurements."""

    replication: int
    completed_jobs: int
    measured_jobs: int
    mean_sojourn: float
    mean_queue: np.ndarray
    delay_probability: np.ndarray
    total_population: float
    measured_time: float
    end_time: float
    arrivals: int
    max_work_violation: float


@dataclass(frozen=True)
class SimTrace:
    """Per-visit records (one row per node visit, chronological per rep)."""

    replication: np.ndarray
    job: np.ndarray
    node: np.ndarray
    t_enter: np.ndarray
    t_admit: np.ndarray
    t_depart: np.ndarray

    def to_csv(self, target) -> None:
        """Write one row per job: replication, job, entry, exit, path.

        ``exit`` is empty for jobs still in the system at the end of the run;
        ``path`` is the visited node sequence joined by ``>``.
        """
        rows: dict[tuple[int, int], list] = {}
        for r, j, n, te, td in zip(self.replication, self.job, self.node,
                                   self.t_enter, self.t_depart):
            key = (int(r), int(j))
            if key not in rows:
                rows[key] = [te, td, [int(n)]]
            else:
                rows[key][1] = td
                rows[key][2].append(int(n))
        lines = ["replication,job,entry,exit,path"]
        for (r, j), (entry, depart, path) in sorted(rows.items()):
            exit_txt = "" if math.isnan(depart) else repr(float(depart))
            lines.append(f"{r},{j},{float(entry)!r},{exit_txt}," + ">".join(map(str, path)))
        text = "\n".join(lines) + "\n"
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(text)


@dataclass(frozen=True)
class SimEstimates:
    """Merged output of a simulation run."""

    mean_sojourn: Estimate
    mean_queue: tuple[Estimate, ...]
    delay_probability: tuple[Estimate, ...]
    total_population: Estimate
    replications: tuple[ReplicationStats, ...]
    algorithm: str
    seed: int
    config: SimConfig
    warnings: tuple[str, ...]
    trace: Optional[SimTrace] = None

    def to_dict(self) -> dict:
        def est(e: Estimate) -> dict:
            return {"value": _jsonable(e.value), "half_width": _jsonable(e.half_width)}

        return {
            "rng": {"algorithm": self.algorithm, "seed": self.seed},
            "config": {
                "replications": self.config.replications,
                "horizon_jobs": self.config.horizon_jobs,
                "warmup_fraction": self.config.warmup_fraction,
                "confidence": self.config.confidence,
            },
            "estimates": {
                "mean_sojourn": est(self.mean_sojourn),
                "mean_queue": [est(e) for e in self.mean_queue],
                "delay_probability": [est(e) for e in self.delay_probability],
                "total_population": est(self.total_population),
            },
            "replications": [
                {
                    "replication": r.replication,
                    "completed_jobs": r.completed_jobs,
                    "measured_jobs": r.measured_jobs,
                    "mean_sojourn": _jsonable(r.mean_sojourn),
                    "mean_queue": [_jsonable(v) for v in r.mean_queue],
                    "delay_probability": [_jsonable(v) for v in r.delay_probability],
                    "total_population": _jsonable(r.total_population),
                    "measured_time": _jsonable(r.measured_time),
                    "end_time": _jsonable(r.end_time),
                    "arrivals": r.arrivals,
                }
                for r in self.replications
            ],
            "warnings": list(self.warnings),
        }


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def _encode_services(model: NetworkModel):
    J = model.size
    kind = np.zeros(J, dtype=np.int64)
    a = np.zeros(J)
    b = np.zeros(J)
    c = np.zeros(J)
    for i, node in enumerate(model.nodes):
        s = node.service
        if isinstance(s, Exponential):
            kind[i] = _engine.KIND_EXPONENTIAL
            a[i] = s.mean_value
        elif isinstance(s, HyperExponential2):
            kind[i] = _engine.KIND_HYPEREXP2
            a[i] = s.p1
            b[i] = 1.0 / s.rate1
            c[i] = 1.0 / s.rate2
        elif isinstance(s, Deterministic):
            kind[i] = _engine.KIND_DETERMINISTIC
            a[i] = s.value
        else:
            raise ModelError(f"node {i}: cannot simulate service distribution {type(s).__name__}")
    return kind, a, b, c


def _halfwidth(values: np.ndarray, confidence: float) -> Optional[float]:
    n = len(values)
    if n < 2 or np.any(np.isnan(values)):
        return None
    s = float(np.std(values, ddof=1))
    q = float(_stats.t.ppf(0.5 * (1.0 + confidence), n - 1))
    return q * s / math.sqrt(n)


def simulate(model: NetworkModel, config: SimConfig) -> SimEstimates:
    """Run all replications and merge them into estimates."""
    problems = [p for p in validate(model) if not p.startswith("warning:")]
    if problems:
        raise ModelError("; ".join(problems))
    lam = model.arrival_rates
    if lam.sum() <= 0:
        raise ModelError("simulation needs at least one external arrival stream")
    warnings = []
    _, rho = utilization(model)
    if rho >= 1.0:
        warnings.append(
            f"warning: total utilization {rho:.6g} >= 1; "
            "stationary estimates do not exist and results depend on the horizon"
        )

    arr_mean = np.where(lam > 0.0, 1.0 / np.where(lam > 0.0, lam, 1.0), np.inf)
    K = model.servers
    cum = np.minimum(np.cumsum(model.routing, axis=1), 1.0)
    kind, a, b, c = _encode_services(model)
    warmup = config.warmup_jobs

    reps: list[ReplicationStats] = []
    tr_parts = []
    for r in range(config.replications):
        out = _engine.run_replication(
            lam, arr_mean, K, cum, kind, a, b, c,
            np.uint64(config.seed), r, config.horizon_jobs, warmup,
            config.collect_trace, config.debug_checks)
        (code, t_end, _clock, x_final, sum_soj, n_soj, admitted, waited, area,
         meas_time, arrivals, completed, violation,
         tj, tn, te, ta, td) = out
        if code == _engine.ERR_INVARIANT:
            raise NumericsError(
                f"replication {r}: internal invariant violated at t={t_end:.6g} "
                f"(state {list(x_final)}, max work drift {violation:.3g})"
            )
        if code != _engine.OK:
            raise NumericsError(
                f"replication {r}: simulation cannot advance at t={t_end:.6g} "
                f"(state {list(x_final)}, {completed} jobs completed)"
            )
        mean_q = np.where(meas_time > 0, area / max(meas_time, 1e-300), np.nan)
        delay = np.where(admitted > 0, waited / np.maximum(admitted, 1), np.nan)
        reps.append(ReplicationStats(
            replication=r,
            completed_jobs=int(completed),
            measured_jobs=int(n_soj),
            mean_sojourn=sum_soj / n_soj if n_soj > 0 else math.nan,
            mean_queue=mean_q,
            delay_probability=delay,
            total_population=float(mean_q.sum()),
            measured_time=float(meas_time),
            end_time=float(t_end),
            arrivals=int(arrivals),
            max_work_violation=float(violation),
        ))
        if config.collect_trace:
            tr_parts.append((np.full(len(tj), r, dtype=np.int64), tj, tn, te, ta, td))

    J = model.size
    soj = np.array([r.mean_sojourn for r in reps])
    pop = np.array([r.total_population for r in reps])
    queue = np.array([r.mean_queue for r in reps])
    delay = np.array([r.delay_probability for r in reps])
    conf = config.confidence

    trace = None
    if config.collect_trace:
        cols = [np.concatenate([p[k] for p in tr_parts]) for k in range(6)]
        trace = SimTrace(*cols)

    return SimEstimates(
        mean_sojourn=Estimate(float(soj.mean()), _halfwidth(soj, conf)),
        mean_queue=tuple(
            Estimate(float(queue[:, i].mean()), _halfwidth(queue[:, i], conf)) for i in range(J)
        ),
        delay_probability=tuple(
            Estimate(float(delay[:, i].mean()), _halfwidth(delay[:, i], conf)) for i in range(J)
        ),
        total_population=Estimate(float(pop.mean()), _halfwidth(pop, conf)),
        replications=tuple(reps),
        algorithm=ALGORITHM,
        seed=config.seed,
        config=config,
        warnings=tuple(warnings),
        trace=trace,
    )
