"""State model for a two-stage shared-FDL optical packet switch.

The switch buffers contending packets in three banks of fiber delay
lines: a large feed-forward bank in the first auxiliary stage (aux1),
plus a small feed-forward bank and a small feedback (recirculating)
bank in the second auxiliary stage.  Time is slotted and every packet
is one slot long.

An FDL of delay D behaves as a pipeline: it can accept one packet per
slot at its input and holds up to D packets in flight, each keyed by
the slot at which it emerges (entry slot + D).
"""

from dataclasses import dataclass

from .delays import DelayProfile, build_profile

AUX1 = "aux1"
AUX2_FORWARD = "aux2_forward"
AUX2_FEEDBACK = "aux2_feedback"


class FdlEntryOccupiedError(RuntimeError):
    """Raised on insertion into an FDL whose input is taken this slot."""


@dataclass(frozen=True)
class SwitchConfig:
    """Switch dimensions and scheme parameters.

    n_ports: number of input ports = number of output ports.
    m_aux1: FDL count of the first-stage shared buffer (may be 0).
    k_aux2: FDL count of each second-stage bank (feed-forward and
        feedback each have k_aux2 lines).
    max_circulations: cap on feedback traversals per packet.
    aux2_enabled: disables the whole second stage when False, for
        ablation runs.
    """

    n_ports: int = 32
    m_aux1: int = 32
    k_aux2: int = 2
    max_circulations: int = 5
    aux2_enabled: bool = True

    def __post_init__(self) -> None:
        if self.n_ports < 1:
            raise ValueError(f"n_ports must be >= 1, got {self.n_ports}")
        if self.m_aux1 < 0:
            raise ValueError(f"m_aux1 must be >= 0, got {self.m_aux1}")
        if self.k_aux2 < 1:
            raise ValueError(f"k_aux2 must be >= 1, got {self.k_aux2}")
        if self.max_circulations < 1:
            raise ValueError(
                f"max_circulations must be >= 1, got {self.max_circulations}"
            )


@dataclass(slots=True)
class Packet:
    """One fixed-length optical cell."""

    id: int
    arrival_slot: int
    dest_port: int
    circulations: int = 0


class FdlPipeline:
    """A single fiber delay line with fixed delay in slots.

    At most one packet may enter per slot; a packet entering at slot s
    emerges at slot s + delay.  in_flight maps emergence slot -> packet.
    """

    __slots__ = ("delay", "in_flight")

    def __init__(self, delay: int):
        if delay < 1:
            raise ValueError(f"FDL delay must be >= 1, got {delay}")
        self.delay = delay
        self.in_flight: dict[int, Packet] = {}

    def entry_free(self, slot: int) -> bool:
        """True iff the input is unoccupied this slot."""
        return (slot + self.delay) not in self.in_flight

    def insert(self, slot: int, packet: Packet) -> int:
        """Store a packet entering at `slot`; returns its emergence slot."""
        emergence = slot + self.delay
        if emergence in self.in_flight:
            raise FdlEntryOccupiedError(
                f"FDL entry at slot {slot} already taken (delay {self.delay})"
            )
        self.in_flight[emergence] = packet
        return emergence

    def pop_due(self, slot: int) -> Packet | None:
        return self.in_flight.pop(slot, None)


class FdlBank:
    """An ordered set of FDL pipelines sharing one role in the switch."""

    __slots__ = ("kind", "pipelines", "delay_groups")

    def __init__(self, kind: str, profile: DelayProfile):
        self.kind = kind
        self.pipelines = [FdlPipeline(d) for d in profile.delays]
        # Profile delays are nondecreasing, so lines with equal delay
        # form contiguous index runs; group them for min-delay scans.
        groups: list[tuple[int, list[int]]] = []
        for i, d in enumerate(profile.delays):
            if groups and groups[-1][0] == d:
                groups[-1][1].append(i)
            else:
                groups.append((d, [i]))
        self.delay_groups = groups

    def __len__(self) -> int:
        return len(self.pipelines)

    def entry_free(self, fdl_index: int, slot: int) -> bool:
        return self.pipelines[fdl_index].entry_free(slot)

    def insert_packet(self, fdl_index: int, slot: int, packet: Packet) -> int:
        return self.pipelines[fdl_index].insert(slot, packet)

    def emergences(self, slot: int) -> list[tuple[int, Packet]]:
        """Packets due this slot, removed, ordered by ascending FDL index."""
        due = []
        for i, pipe in enumerate(self.pipelines):
            pkt = pipe.pop_due(slot)
            if pkt is not None:
                due.append((i, pkt))
        return due

    def in_flight_count(self) -> int:
        return sum(len(p.in_flight) for p in self.pipelines)

    def max_delay(self) -> int:
        return self.pipelines[-1].delay if self.pipelines else 0


class ReservationCalendar:
    """Future (output port, slot) claims held by buffered aux1 packets.

    At most one reservation may exist per (port, slot); this is the
    no-conflict guarantee that keeps aux1 emergences collision-free
    among themselves.
    """

    __slots__ = ("_claims",)

    def __init__(self):
        self._claims: set[tuple[int, int]] = set()

    def is_reserved(self, port: int, slot: int) -> bool:
        return (port, slot) in self._claims

    def reserve(self, port: int, slot: int) -> None:
        key = (port, slot)
        if key in self._claims:
            raise RuntimeError(f"duplicate reservation for port {port} slot {slot}")
        self._claims.add(key)

    def release(self, port: int, slot: int) -> None:
        self._claims.remove((port, slot))

    def __len__(self) -> int:
        return len(self._claims)

    def __iter__(self):
        return iter(self._claims)


class PortClaims:
    """Output ports already delivering a packet in the current slot."""

    __slots__ = ("_claimed",)

    def __init__(self):
        self._claimed: set[int] = set()

    def clear(self) -> None:
        self._claimed.clear()

    def is_claimed(self, port: int) -> bool:
        return port in self._claimed

    def claim(self, port: int) -> None:
        if port in self._claimed:
            raise RuntimeError(f"output port {port} claimed twice in one slot")
        self._claimed.add(port)

    def __len__(self) -> int:
        return len(self._claimed)


class SwitchState:
    """Complete mutable state of one simulated switch.

    Owned by a single run; never shared between concurrent runs.
    """

    __slots__ = ("config", "aux1", "aux2_forward", "aux2_feedback",
                 "calendar", "claims")

    def __init__(self, config: SwitchConfig):
        self.config = config
        self.aux1 = FdlBank(AUX1, build_profile(config.m_aux1))
        self.aux2_forward = FdlBank(AUX2_FORWARD, build_profile(config.k_aux2))
        self.aux2_feedback = FdlBank(AUX2_FEEDBACK, build_profile(config.k_aux2))
        self.calendar = ReservationCalendar()
        self.claims = PortClaims()

    def banks(self) -> tuple[FdlBank, FdlBank, FdlBank]:
        return (self.aux1, self.aux2_forward, self.aux2_feedback)

    def in_flight_count(self) -> int:
        return sum(b.in_flight_count() for b in self.banks())

    def validate(self, current_slot: int | None = None) -> None:
        """Deep invariant check; raises AssertionError on violation.

        Intended for tests and debugging runs, not the hot loop.
        """
        cfg = self.config
        for bank in self.banks():
            for pipe in bank.pipelines:
                assert len(pipe.in_flight) <= pipe.delay, \
                    f"{bank.kind}: pipeline over capacity"
                for emergence, pkt in pipe.in_flight.items():
                    assert 0 <= pkt.dest_port < cfg.n_ports
                    assert pkt.circulations <= cfg.max_circulations
                    if current_slot is not None:
                        assert emergence > current_slot, \
                            f"{bank.kind}: stale packet at slot {emergence}"
        expected = set()
        for pipe in self.aux1.pipelines:
            for emergence, pkt in pipe.in_flight.items():
                key = (pkt.dest_port, emergence)
                assert key not in expected, "two aux1 packets share a (port, slot)"
                expected.add(key)
        actual = set(self.calendar)
        assert actual == expected, (
            f"calendar out of sync: extra={actual - expected} "
            f"missing={expected - actual}"
        )
