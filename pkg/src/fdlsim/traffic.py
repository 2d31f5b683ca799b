"""Slotted Bernoulli traffic generation and trace files.

Each input port independently carries a packet in a given slot with
probability rho, destination uniform over all output ports.  The
per-slot draw pattern is fixed (two uniform vectors of length n_ports,
arrival flags then destinations) so that a chunked generator can
reproduce the exact same stream as repeated per-slot calls.

Traces are line-oriented text, one packet per line: three integers
``slot input_port dest_port``, ordered by slot then input port, with
``#``-prefixed header lines.  Replaying a trace through two runs (for
example with and without the second-stage buffers) guarantees identical
offered traffic.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .model import Packet


@dataclass(frozen=True)
class TrafficConfig:
    """Offered load rho per input per slot, RNG seed, and port count."""

    rho: float
    seed: int
    n_ports: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if self.n_ports < 1:
            raise ValueError(f"n_ports must be >= 1, got {self.n_ports}")


def traffic_rng(config: TrafficConfig) -> np.random.Generator:
    """The arrival stream generator for a config (stream 0 of the seed)."""
    arrivals_seq, _ = np.random.SeedSequence(config.seed).spawn(2)
    return np.random.default_rng(arrivals_seq)


def scheduler_rng(config: TrafficConfig) -> np.random.Generator:
    """The arrival-ordering generator paired with a config (stream 1)."""
    _, order_seq = np.random.SeedSequence(config.seed).spawn(2)
    return np.random.default_rng(order_seq)


def slot_draws(rng: np.random.Generator, n_ports: int) -> np.ndarray:
    """Consume one slot's worth of uniforms: shape (2, n_ports)."""
    return rng.random((2, n_ports))


def slot_arrivals_from_draws(draws: np.ndarray, rho: float,
                             n_ports: int) -> tuple[np.ndarray, np.ndarray]:
    """(input ports, destinations) for one slot given its uniform draws."""
    ports = np.flatnonzero(draws[0] < rho)
    dests = (draws[1, ports] * n_ports).astype(np.int64)
    return ports, dests


def generate_arrivals(rng: np.random.Generator, slot: int,
                      config: TrafficConfig, id_start: int = 0) -> list[Packet]:
    """One slot of arrivals, ordered by input port, with fresh ids."""
    ports, dests = slot_arrivals_from_draws(
        slot_draws(rng, config.n_ports), config.rho, config.n_ports)
    return [Packet(id_start + k, slot, int(d), 0) for k, d in enumerate(dests)]


def generated_traffic_id(config: TrafficConfig) -> str:
    return f"bernoulli:seed={config.seed}:n={config.n_ports}:rho={config.rho!r}"


@dataclass
class Trace:
    """In-memory arrival trace: parallel arrays sorted by slot.

    slots / in_ports / dest_ports have one entry per packet;
    offsets[s] .. offsets[s+1] index the packets of slot s.
    """

    n_ports: int
    total_slots: int
    slots: np.ndarray
    in_ports: np.ndarray
    dest_ports: np.ndarray

    def __post_init__(self) -> None:
        counts = np.bincount(self.slots, minlength=self.total_slots)
        self.offsets = np.concatenate(([0], np.cumsum(counts)))

    def __len__(self) -> int:
        return len(self.slots)

    def slot_ports_dests(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[slot], self.offsets[slot + 1]
        return self.in_ports[lo:hi], self.dest_ports[lo:hi]

    def traffic_id(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.slots, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.in_ports, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.dest_ports, dtype=np.int64).tobytes())
        return f"trace:n={self.n_ports}:slots={self.total_slots}:{h.hexdigest()[:16]}"


def record_trace(config: TrafficConfig, total_slots: int) -> Trace:
    """Materialize the arrival stream a config would generate."""
    rng = traffic_rng(config)
    all_slots, all_ports, all_dests = [], [], []
    for slot in range(total_slots):
        ports, dests = slot_arrivals_from_draws(
            slot_draws(rng, config.n_ports), config.rho, config.n_ports)
        if len(ports):
            all_slots.append(np.full(len(ports), slot, dtype=np.int64))
            all_ports.append(ports)
            all_dests.append(dests)
    if all_slots:
        slots = np.concatenate(all_slots)
        in_ports = np.concatenate(all_ports)
        dest_ports = np.concatenate(all_dests)
    else:
        slots = in_ports = dest_ports = np.empty(0, dtype=np.int64)
    return Trace(config.n_ports, total_slots, slots, in_ports, dest_ports)


def write_trace(path, trace: Trace) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write("# fdlsim traffic trace v1\n")
        f.write(f"# n_ports={trace.n_ports} total_slots={trace.total_slots}\n")
        for s, p, d in zip(trace.slots, trace.in_ports, trace.dest_ports):
            f.write(f"{s} {p} {d}\n")


def read_trace(path) -> Trace:
    n_ports = total_slots = None
    slots, in_ports, dest_ports = [], [], []
    with open(path, encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("n_ports="):
                        n_ports = int(tok.split("=", 1)[1])
                    elif tok.startswith("total_slots="):
                        total_slots = int(tok.split("=", 1)[1])
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 'slot input_port dest_port'")
            slots.append(int(parts[0]))
            in_ports.append(int(parts[1]))
            dest_ports.append(int(parts[2]))
    if n_ports is None or total_slots is None:
        raise ValueError(f"{path}: missing n_ports/total_slots header")
    return Trace(n_ports, total_slots,
                 np.asarray(slots, dtype=np.int64),
                 np.asarray(in_ports, dtype=np.int64),
                 np.asarray(dest_ports, dtype=np.int64))
