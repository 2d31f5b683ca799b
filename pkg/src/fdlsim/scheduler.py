"""Per-slot contention resolution with packet-releasing priority.

Each slot has two phases.  The release phase runs first and lets
packets emerging from the delay lines claim their output ports:
second-stage feed-forward lines, then the feedback lines, then the
first-stage (aux1) lines, each scanned in ascending FDL index.  A
released packet that finds its port taken falls into a free feedback
line when one exists (costing one circulation), otherwise it is
dropped.  The assignment phase then handles new arrivals in seeded
random order: direct delivery if the port is still free, else an aux1
line chosen so that no two buffered packets for one port emerge in the
same slot, else a second-stage feed-forward line, else the packet is
dropped.
"""

from dataclasses import dataclass

import numpy as np

from .model import (AUX1, AUX2_FEEDBACK, AUX2_FORWARD, FdlBank, Packet,
                    SwitchState)

DELIVERED = "delivered"
BUFFERED = "buffered"
RECIRCULATED = "recirculated"
DROPPED = "dropped"

SRC_ARRIVAL = "arrival"

DROP_ASSIGN_BLOCKED = "assign_blocked"
DROP_AUX2_FF_BLOCKED = "aux2_ff_blocked"
DROP_RECIRCULATION_EXHAUSTED = "recirculation_exhausted"
DROP_FEEDBACK_FULL_FROM_AUX1 = "feedback_full_from_aux1"
DROP_FEEDBACK_FULL_FROM_FF = "feedback_full_from_ff"

DROP_REASONS = (
    DROP_ASSIGN_BLOCKED,
    DROP_AUX2_FF_BLOCKED,
    DROP_RECIRCULATION_EXHAUSTED,
    DROP_FEEDBACK_FULL_FROM_AUX1,
    DROP_FEEDBACK_FULL_FROM_FF,
)


@dataclass(slots=True)
class Disposition:
    """What happened to one packet touched during a slot.

    kind is one of delivered / buffered / recirculated / dropped.
    source names where the packet came from this slot: "arrival" or the
    bank it emerged from.  delay is filled for deliveries, bank and
    fdl_index for buffer insertions, reason for drops.
    """

    packet_id: int
    kind: str
    source: str
    dest_port: int
    delay: int = -1
    bank: str = ""
    fdl_index: int = -1
    reason: str = ""


def _min_delay_free_entry(bank: FdlBank, slot: int) -> int | None:
    """Lowest-index FDL with a free entry among those of minimum delay."""
    for _delay, indices in bank.delay_groups:
        for i in indices:
            if bank.pipelines[i].entry_free(slot):
                return i
    return None


def select_aux1_fdl(state: SwitchState, dest_port: int, slot: int) -> int | None:
    """Pick an aux1 FDL for a contended arrival, or None.

    Eligible lines have a free entry this slot and no existing
    reservation for (dest_port, slot + delay); minimum delay wins,
    ties broken by lowest index.
    """
    calendar = state.calendar
    pipelines = state.aux1.pipelines
    for delay, indices in state.aux1.delay_groups:
        if calendar.is_reserved(dest_port, slot + delay):
            continue
        for i in indices:
            if pipelines[i].entry_free(slot):
                return i
    return None


def select_feedback_fdl(state: SwitchState, slot: int,
                        circulations: int) -> int | None:
    """Pick a feedback FDL for a blocked release, or None.

    None when the second stage is disabled, when another circulation
    would exceed the cap, or when every feedback entry is taken.
    """
    cfg = state.config
    if not cfg.aux2_enabled:
        return None
    if circulations + 1 > cfg.max_circulations:
        return None
    return _min_delay_free_entry(state.aux2_feedback, slot)


def _enter_feedback(state: SwitchState, slot: int, pkt: Packet,
                    fdl_index: int) -> None:
    pkt.circulations += 1
    state.aux2_feedback.insert_packet(fdl_index, slot, pkt)


def release_phase(state: SwitchState, slot: int) -> list[Disposition]:
    """Release due packets, highest priority first.

    Order: aux2 feed-forward, aux2 feedback, aux1; ascending FDL index
    within each bank.  Aux1 emergences clear their calendar reservation
    whether or not they deliver.
    """
    out: list[Disposition] = []
    claims = state.claims

    for fdl_index, pkt in state.aux2_forward.emergences(slot):
        if not claims.is_claimed(pkt.dest_port):
            claims.claim(pkt.dest_port)
            out.append(Disposition(pkt.id, DELIVERED, AUX2_FORWARD,
                                   pkt.dest_port, delay=slot - pkt.arrival_slot))
        else:
            fb = select_feedback_fdl(state, slot, pkt.circulations)
            if fb is None:
                out.append(Disposition(pkt.id, DROPPED, AUX2_FORWARD,
                                       pkt.dest_port,
                                       reason=DROP_FEEDBACK_FULL_FROM_FF))
            else:
                _enter_feedback(state, slot, pkt, fb)
                out.append(Disposition(pkt.id, BUFFERED, AUX2_FORWARD,
                                       pkt.dest_port, bank=AUX2_FEEDBACK,
                                       fdl_index=fb))

    for fdl_index, pkt in state.aux2_feedback.emergences(slot):
        if not claims.is_claimed(pkt.dest_port):
            claims.claim(pkt.dest_port)
            out.append(Disposition(pkt.id, DELIVERED, AUX2_FEEDBACK,
                                   pkt.dest_port, delay=slot - pkt.arrival_slot))
        else:
            fb = select_feedback_fdl(state, slot, pkt.circulations)
            if fb is None:
                out.append(Disposition(pkt.id, DROPPED, AUX2_FEEDBACK,
                                       pkt.dest_port,
                                       reason=DROP_RECIRCULATION_EXHAUSTED))
            else:
                _enter_feedback(state, slot, pkt, fb)
                out.append(Disposition(pkt.id, RECIRCULATED, AUX2_FEEDBACK,
                                       pkt.dest_port, bank=AUX2_FEEDBACK,
                                       fdl_index=fb))

    for fdl_index, pkt in state.aux1.emergences(slot):
        state.calendar.release(pkt.dest_port, slot)
        if not claims.is_claimed(pkt.dest_port):
            claims.claim(pkt.dest_port)
            out.append(Disposition(pkt.id, DELIVERED, AUX1,
                                   pkt.dest_port, delay=slot - pkt.arrival_slot))
        else:
            fb = select_feedback_fdl(state, slot, pkt.circulations)
            if fb is None:
                out.append(Disposition(pkt.id, DROPPED, AUX1, pkt.dest_port,
                                       reason=DROP_FEEDBACK_FULL_FROM_AUX1))
            else:
                _enter_feedback(state, slot, pkt, fb)
                out.append(Disposition(pkt.id, BUFFERED, AUX1, pkt.dest_port,
                                       bank=AUX2_FEEDBACK, fdl_index=fb))

    return out


def assign_phase(state: SwitchState, slot: int, arrivals: list[Packet],
                 rng: np.random.Generator) -> list[Disposition]:
    """Place this slot's arrivals; must run after the release phase.

    Arrivals are processed in a uniformly random order drawn from rng
    (one key per arrival, stable argsort), so no input port is favored.
    """
    out: list[Disposition] = []
    if not arrivals:
        return out
    keys = rng.random(len(arrivals))
    order = np.argsort(keys, kind="stable")

    claims = state.claims
    cfg = state.config
    for j in order:
        pkt = arrivals[j]
        port = pkt.dest_port
        if not claims.is_claimed(port):
            claims.claim(port)
            out.append(Disposition(pkt.id, DELIVERED, SRC_ARRIVAL, port,
                                   delay=slot - pkt.arrival_slot))
            continue
        a1 = select_aux1_fdl(state, port, slot)
        if a1 is not None:
            emergence = state.aux1.insert_packet(a1, slot, pkt)
            state.calendar.reserve(port, emergence)
            out.append(Disposition(pkt.id, BUFFERED, SRC_ARRIVAL, port,
                                   bank=AUX1, fdl_index=a1))
            continue
        if cfg.aux2_enabled:
            ff = _min_delay_free_entry(state.aux2_forward, slot)
            if ff is not None:
                state.aux2_forward.insert_packet(ff, slot, pkt)
                out.append(Disposition(pkt.id, BUFFERED, SRC_ARRIVAL, port,
                                       bank=AUX2_FORWARD, fdl_index=ff))
                continue
        out.append(Disposition(pkt.id, DROPPED, SRC_ARRIVAL, port,
                               reason=DROP_ASSIGN_BLOCKED))
    return out
