"""Run counters and the derived loss / delay statistics.

Delay is measured in slots from arrival to delivery; packets delivered
directly (never buffered) contribute delay 0.  A run with no offered
traffic reports loss rate and average delay as 0 rather than erroring.
"""

import math
from dataclasses import dataclass, field


@dataclass
class RunMetrics:
    """Counters for one run, over packets offered after warm-up.

    offered = delivered + sum of dropped_by_reason once the run has
    drained.  traffic_id identifies the exact arrival stream so that
    paired comparisons can verify they saw identical traffic.
    """

    offered: int = 0
    delivered: int = 0
    dropped_by_reason: dict[str, int] = field(default_factory=dict)
    delay_sum: int = 0
    delay_histogram: dict[int, int] = field(default_factory=dict)
    traffic_id: str = ""

    @property
    def dropped(self) -> int:
        return sum(self.dropped_by_reason.values())

    @property
    def no_traffic(self) -> bool:
        """Flags the degenerate zero-offered run."""
        return self.offered == 0


def plr(metrics: RunMetrics) -> float:
    """Packet loss rate: drops / offered, 0 for a zero-offered run."""
    if metrics.offered == 0:
        return 0.0
    return metrics.dropped / metrics.offered


def avg_delay(metrics: RunMetrics) -> float:
    """Mean delivery delay in slots; 0 when nothing was delivered."""
    if metrics.delivered == 0:
        return 0.0
    return metrics.delay_sum / metrics.delivered


def loss_reduction(with_aux2: RunMetrics, without_aux2: RunMetrics) -> float:
    """Percent loss removed by the second stage, on identical traffic.

    100 * (plr(without) - plr(with)) / plr(without); 0 when the run
    without the second stage already lost nothing.  Raises ValueError
    if the two runs did not see the same arrival stream.
    """
    if with_aux2.traffic_id != without_aux2.traffic_id:
        raise ValueError(
            "loss_reduction requires runs on identical traffic: "
            f"{with_aux2.traffic_id!r} != {without_aux2.traffic_id!r}")
    base = plr(without_aux2)
    if base == 0.0:
        return 0.0
    return 100.0 * (base - plr(with_aux2)) / base


@dataclass(frozen=True)
class AggregateStats:
    runs: int
    plr_mean: float
    plr_std: float
    delay_mean: float
    delay_std: float
    offered: int
    delivered: int
    dropped: int


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2 or min(values) == max(values):
        # identical runs must report exactly zero spread
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate(seed_runs: list[RunMetrics]) -> AggregateStats:
    """Unweighted mean and sample std of PLR and delay across seeds."""
    if not seed_runs:
        raise ValueError("aggregate requires at least one run")
    plr_mean, plr_std = _mean_std([plr(m) for m in seed_runs])
    delay_mean, delay_std = _mean_std([avg_delay(m) for m in seed_runs])
    return AggregateStats(
        runs=len(seed_runs),
        plr_mean=plr_mean,
        plr_std=plr_std,
        delay_mean=delay_mean,
        delay_std=delay_std,
        offered=sum(m.offered for m in seed_runs),
        delivered=sum(m.delivered for m in seed_runs),
        dropped=sum(m.dropped for m in seed_runs),
    )
