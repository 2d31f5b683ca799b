"""Slot loop driving a single simulation run.

A run executes ``total_slots`` slots of traffic and then keeps stepping
with no new arrivals (the drain tail) until every delay line is empty,
so loss and delay counters are complete and offered = delivered +
dropped holds exactly.  Events before ``warmup_slots`` are excluded
from metrics: a packet counts iff its arrival slot is past warm-up.

Two interchangeable engines exist: this reference engine, built on the
object model (and the only one that can record event logs or run deep
invariant checks), and the compiled kernel in ``fast``, which produces
identical metrics and is picked automatically for plain metric runs.
"""

from dataclasses import dataclass

import numpy as np

from .metrics import RunMetrics
from .model import Packet, SwitchConfig, SwitchState
from .scheduler import (DELIVERED, DROP_REASONS, DROPPED, Disposition,
                        assign_phase, release_phase)
from .traffic import (Trace, TrafficConfig, generated_traffic_id,
                      scheduler_rng, slot_arrivals_from_draws, slot_draws,
                      traffic_rng)

EventLog = list[tuple[int, Disposition]]


@dataclass(frozen=True)
class RunPlan:
    """Everything needed to execute one deterministic run."""

    total_slots: int
    switch: SwitchConfig
    traffic: TrafficConfig
    warmup_slots: int = 0
    record_event_log: bool = False
    check_invariants: bool = False
    engine: str = "auto"  # auto | reference | fast

    def __post_init__(self) -> None:
        if self.total_slots < 1:
            raise ValueError("total_slots must be >= 1")
        if not 0 <= self.warmup_slots < self.total_slots:
            raise ValueError("warmup_slots must satisfy 0 <= warmup < total")
        if self.engine not in ("auto", "reference", "fast"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.switch.n_ports != self.traffic.n_ports:
            raise ValueError("switch and traffic disagree on n_ports")


@dataclass
class RunResult:
    metrics: RunMetrics
    event_log: EventLog | None = None


def drain_bound(config: SwitchConfig) -> int:
    """Upper bound on slots needed to empty all pipelines after the
    last arrival: worst aux1 delay, then a full set of circulations."""
    from .delays import build_profile
    aux1_max = build_profile(config.m_aux1).t_max
    aux2_max = build_profile(config.k_aux2).t_max
    return aux1_max + aux2_max + config.max_circulations * aux2_max + 1


def step(state: SwitchState, slot: int, arrivals: list[Packet],
         rng: np.random.Generator) -> list[Disposition]:
    """One slot: clear port claims, release due packets, place arrivals."""
    state.claims.clear()
    dispositions = release_phase(state, slot)
    dispositions += assign_phase(state, slot, arrivals, rng)
    return dispositions


class _Accumulator:
    """Folds dispositions into RunMetrics, applying the warm-up cut."""

    __slots__ = ("warmup_first_id", "metrics",
                 "raw_offered", "raw_delivered", "raw_dropped")

    def __init__(self):
        # Sentinel until the warm-up boundary fixes the first counted id.
        self.warmup_first_id = 2**63
        self.metrics = RunMetrics(dropped_by_reason={r: 0 for r in DROP_REASONS})
        self.raw_offered = 0
        self.raw_delivered = 0
        self.raw_dropped = 0

    def offered(self, slot: int, count: int, warmup: int) -> None:
        self.raw_offered += count
        if slot >= warmup:
            self.metrics.offered += count

    def consume(self, dispositions: list[Disposition]) -> None:
        m = self.metrics
        cut = self.warmup_first_id
        for d in dispositions:
            if d.kind == DELIVERED:
                self.raw_delivered += 1
                if d.packet_id >= cut:
                    m.delivered += 1
                    m.delay_sum += d.delay
                    m.delay_histogram[d.delay] = \
                        m.delay_histogram.get(d.delay, 0) + 1
            elif d.kind == DROPPED:
                self.raw_dropped += 1
                if d.packet_id >= cut:
                    m.dropped_by_reason[d.reason] += 1


def run(plan: RunPlan, trace: Trace | None = None) -> RunResult:
    """Execute a plan (optionally replaying a recorded trace).

    Deterministic in (plan, trace): identical inputs give bit-identical
    metrics and event logs.
    """
    use_fast = plan.engine == "fast" or (
        plan.engine == "auto"
        and not plan.record_event_log
        and not plan.check_invariants
        and _fast_available()
    )
    if use_fast:
        if plan.record_event_log or plan.check_invariants:
            raise ValueError(
                "event logs and invariant checks need engine='reference'")
        from .fast import run_fast
        return run_fast(plan, trace)
    return _run_reference(plan, trace)


def _fast_available() -> bool:
    try:
        from . import fast  # noqa: F401
    except ImportError:
        return False
    return True


def _run_reference(plan: RunPlan, trace: Trace | None) -> RunResult:
    cfg = plan.switch
    tcfg = plan.traffic
    if trace is not None:
        if trace.n_ports != cfg.n_ports:
            raise ValueError("trace n_ports does not match switch config")
        if trace.total_slots != plan.total_slots:
            raise ValueError("trace horizon does not match plan.total_slots")

    state = SwitchState(cfg)
    rng_traffic = traffic_rng(tcfg)
    rng_sched = scheduler_rng(tcfg)
    acc = _Accumulator()
    events: EventLog | None = [] if plan.record_event_log else None

    next_id = 0
    warmup = plan.warmup_slots
    for slot in range(plan.total_slots):
        if slot == warmup:
            acc.warmup_first_id = next_id
        if trace is None:
            ports, dests = slot_arrivals_from_draws(
                slot_draws(rng_traffic, cfg.n_ports), tcfg.rho, cfg.n_ports)
        else:
            ports, dests = trace.slot_ports_dests(slot)
        arrivals = [Packet(next_id + k, slot, int(d), 0)
                    for k, d in enumerate(dests)]
        next_id += len(arrivals)
        acc.offered(slot, len(arrivals), warmup)

        dispositions = step(state, slot, arrivals, rng_sched)
        acc.consume(dispositions)
        if events is not None:
            events.extend((slot, d) for d in dispositions)
        if plan.check_invariants:
            state.validate(slot)
            assert acc.raw_offered == (acc.raw_delivered + acc.raw_dropped
                                       + state.in_flight_count())

    slot = plan.total_slots
    limit = plan.total_slots + drain_bound(cfg)
    while state.in_flight_count() > 0:
        if slot > limit:
            raise RuntimeError(
                f"drain did not terminate within {drain_bound(cfg)} slots; "
                "pipeline state is corrupt")
        dispositions = step(state, slot, [], rng_sched)
        acc.consume(dispositions)
        if events is not None:
            events.extend((slot, d) for d in dispositions)
        if plan.check_invariants:
            state.validate(slot)
        slot += 1

    if acc.raw_offered != acc.raw_delivered + acc.raw_dropped:
        raise RuntimeError(
            f"conservation violated: offered {acc.raw_offered} != "
            f"delivered {acc.raw_delivered} + dropped {acc.raw_dropped}")

    acc.metrics.traffic_id = (trace.traffic_id() if trace is not None
                              else generated_traffic_id(tcfg))
    return RunResult(metrics=acc.metrics, event_log=events)


def format_event_log(events: EventLog) -> str:
    """Stable text rendering of an event log, one line per disposition."""
    lines = []
    for slot, d in events:
        detail = ""
        if d.kind == "delivered":
            detail = f" delay={d.delay}"
        elif d.kind in ("buffered", "recirculated"):
            detail = f" bank={d.bank} fdl={d.fdl_index}"
        elif d.kind == "dropped":
            detail = f" reason={d.reason}"
        lines.append(f"{slot} {d.packet_id} {d.kind} src={d.source} "
                     f"dest={d.dest_port}{detail}")
    return "\n".join(lines) + ("\n" if lines else "")
