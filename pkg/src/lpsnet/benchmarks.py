"""Built-in benchmark instances: two-node tandem lines at load 0.7.

Sixteen tandem configurations spanning slow/fast service-mean splits,
moderate and high service variability, and different server splits.  Each
row records two reference values for the mean sojourn time: the closed-form
heavy-traffic approximation (``reference_approx``) and a long discrete-event
simulation (``reference_sim``, 10 runs of one million jobs each).  They are
what ``lpsnet validate`` checks a build against.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distributions import fit_two_moments
from .model import NetworkModel, tandem

# All benchmark rows use this total utilization.
BENCHMARK_LOAD = 0.7


@dataclass(frozen=True)
class BenchmarkRow:
    """One tandem configuration plus its reference mean sojourn times."""

    index: int
    mean_first: float
    mean_second: float
    scv_first: float
    scv_second: float
    servers_first: int
    servers_second: int
    reference_approx: float
    reference_sim: float

    @property
    def label(self) -> str:
        return (f"beta=({self.mean_first:g},{self.mean_second:g}) "
                f"scv=({self.scv_first:g},{self.scv_second:g}) "
                f"K=({self.servers_first},{self.servers_second})")


BENCHMARK_ROWS: tuple[BenchmarkRow, ...] = tuple(
    BenchmarkRow(i + 1, *row)
    for i, row in enumerate([
        # mean1, mean2, scv1, scv2, K1, K2, approx, sim
        (1.0, 2.0, 4.0, 4.0, 3, 7, 10.24, 10.41),
        (1.0, 2.0, 4.0, 10.0, 4, 6, 11.37, 10.71),
        (1.0, 2.0, 10.0, 4.0, 4, 6, 10.77, 10.57),
        (1.0, 2.0, 10.0, 10.0, 4, 6, 11.58, 10.87),
        (2.0, 1.0, 4.0, 4.0, 6, 4, 10.24, 10.49),
        (2.0, 1.0, 4.0, 10.0, 6, 4, 10.38, 10.70),
        (2.0, 1.0, 10.0, 4.0, 6, 4, 10.78, 10.98),
        (2.0, 1.0, 10.0, 10.0, 6, 4, 10.91, 11.18),
        (1.0, 10.0, 4.0, 4.0, 2, 8, 38.86, 37.43),
        (1.0, 10.0, 4.0, 10.0, 2, 8, 43.20, 37.83),
        (1.0, 10.0, 10.0, 4.0, 2, 8, 38.91, 37.53),
        (1.0, 10.0, 10.0, 10.0, 2, 8, 43.24, 37.97),
        (10.0, 1.0, 4.0, 4.0, 8, 2, 38.52, 38.88),
        (10.0, 1.0, 4.0, 10.0, 8, 2, 38.56, 39.11),
        (10.0, 1.0, 10.0, 4.0, 8, 2, 42.46, 40.77),
        (10.0, 1.0, 10.0, 10.0, 8, 2, 42.50, 41.00),
    ])
)


def benchmark_model(row: BenchmarkRow, load: float = BENCHMARK_LOAD) -> NetworkModel:
    """Build the tandem model for a benchmark row at the given total load.

    Every job visits both nodes, so the external rate at node 1 satisfies
    ``load = rate * (mean_first + mean_second)``.
    """
    rate = load / (row.mean_first + row.mean_second)
    services = [
        fit_two_moments(row.mean_first, row.scv_first),
        fit_two_moments(row.mean_second, row.scv_second),
    ]
    return tandem(rate, services, [row.servers_first, row.servers_second])
