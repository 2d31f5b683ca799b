"""Delay-value assignment for a bank of fiber delay lines.

A bank of m lines carries integer delay values 1, 2, ..., Z spread as
evenly as possible, two lines per value: Z = ceil(m / 2), so buffering
depth grows linearly with the bank size.  Tiny banks keep at least two
distinct values (a two-line bank is {1, 2}, giving the second-stage
banks one short and one longer line).  Surplus lines, when Z does not
divide m, go to the smallest delay values, which keeps buffered packets
as short-lived as possible.
"""

from dataclasses import dataclass, field


def num_delay_values(m: int) -> int:
    """Number of distinct delay values Z for a bank of m FDLs.

    Z = max(2, ceil(m / 2)) for m >= 2; a single line has one value and
    a zero-sized bank has none.
    """
    if m < 0:
        raise ValueError(f"FDL count must be nonnegative, got {m}")
    if m <= 1:
        return m
    return max(2, (m + 1) // 2)


@dataclass(frozen=True)
class DelayProfile:
    """Per-FDL delay assignment for one bank.

    delays[i] is the delay in slots of FDL i; the list is nondecreasing,
    so lines with the same delay value occupy a contiguous index range.
    """

    m: int
    z: int
    t_max: int
    delays: tuple[int, ...] = field(default=())

    def value_counts(self) -> dict[int, int]:
        """FDL count per distinct delay value."""
        counts: dict[int, int] = {}
        for d in self.delays:
            counts[d] = counts.get(d, 0) + 1
        return counts


def build_profile(m: int) -> DelayProfile:
    """Assign a delay value to each of m FDLs.

    Values 1..Z are dealt round-robin and then sorted ascending, so the
    per-value counts differ by at most one and smaller delays receive
    any surplus lines.  m = 0 yields an empty profile (bank unused).
    """
    z = num_delay_values(m)
    delays = sorted((i % z) + 1 for i in range(m)) if m else []
    return DelayProfile(m=m, z=z, t_max=z, delays=tuple(delays))
