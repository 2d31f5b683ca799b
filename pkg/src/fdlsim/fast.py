"""Compiled metric-only engine, stream-identical to the reference.

The object engine in ``engine`` is the behavioral reference; this
module replays the exact same scheduling decisions on flat arrays
inside a numba kernel, consuming the exact same random streams (traffic
uniforms are drawn in chunks that concatenate to the per-slot draws,
shuffle keys likewise), so metrics match the reference bit for bit.
The equivalence is enforced by tests across a configuration matrix.

Pipelines become ring buffers indexed by emergence slot modulo
(max delay + 1): a line's entry at slot s is free iff the cell
(s + delay) % ring is empty, and everything due at slot s sits in row
s % ring.  Event logs are not supported here; ask the reference engine.
"""

import numpy as np
from numba import njit

from .delays import build_profile
from .metrics import RunMetrics
from .scheduler import (DROP_ASSIGN_BLOCKED, DROP_FEEDBACK_FULL_FROM_AUX1,
                        DROP_FEEDBACK_FULL_FROM_FF,
                        DROP_RECIRCULATION_EXHAUSTED, DROP_REASONS)
from .traffic import (Trace, generated_traffic_id, scheduler_rng, traffic_rng)

C_OFFERED = 0
C_DELIVERED = 1
C_DELAY_SUM = 2
C_RAW_OFFERED = 3
C_RAW_DELIVERED = 4
C_RAW_DROPPED = 5
C_IN_FLIGHT = 6
C_DROP_BASE = 7  # five reason slots, in DROP_REASONS order
C_ERR = 12
N_COUNTERS = 13

_DROP_ASSIGN = C_DROP_BASE + DROP_REASONS.index(DROP_ASSIGN_BLOCKED)
_DROP_RECIRC = C_DROP_BASE + DROP_REASONS.index(DROP_RECIRCULATION_EXHAUSTED)
_DROP_FROM_AUX1 = C_DROP_BASE + DROP_REASONS.index(DROP_FEEDBACK_FULL_FROM_AUX1)
_DROP_FROM_FF = C_DROP_BASE + DROP_REASONS.index(DROP_FEEDBACK_FULL_FROM_FF)


@njit(cache=True)
def _simulate_chunk(slot0, n_slots, dests, offsets, keys, warmup,
                    n_ports, m, k, max_circ, aux2_enabled,
                    a1_delays, ff_delays, fb_delays,
                    a1_dest, a1_arr, ff_dest, ff_arr,
                    fb_dest, fb_arr, fb_circ,
                    resv, claims, counters, hist, order):
    ring1 = a1_dest.shape[0]
    ring_ff = ff_dest.shape[0]
    ring_fb = fb_dest.shape[0]
    hist_cap = hist.shape[0]

    for t in range(n_slots):
        s = slot0 + t

        # -- release: aux2 feed-forward --
        row = s % ring_ff
        for i in range(k):
            dest = ff_dest[row, i]
            if dest < 0:
                continue
            arr = ff_arr[row, i]
            ff_dest[row, i] = -1
            counters[C_IN_FLIGHT] -= 1
            if claims[dest] != s:
                claims[dest] = s
                counters[C_RAW_DELIVERED] += 1
                if arr >= warmup:
                    counters[C_DELIVERED] += 1
                    d = s - arr
                    counters[C_DELAY_SUM] += d
                    if d < hist_cap:
                        hist[d] += 1
                    else:
                        counters[C_ERR] += 1
            else:
                chosen = -1
                if aux2_enabled != 0 and 1 <= max_circ:
                    for j in range(k):
                        if fb_dest[(s + fb_delays[j]) % ring_fb, j] < 0:
                            chosen = j
                            break
                if chosen < 0:
                    counters[C_RAW_DROPPED] += 1
                    if arr >= warmup:
                        counters[_DROP_FROM_FF] += 1
                else:
                    cell = (s + fb_delays[chosen]) % ring_fb
                    fb_dest[cell, chosen] = dest
                    fb_arr[cell, chosen] = arr
                    fb_circ[cell, chosen] = 1
                    counters[C_IN_FLIGHT] += 1

        # -- release: aux2 feedback --
        row = s % ring_fb
        for i in range(k):
            dest = fb_dest[row, i]
            if dest < 0:
                continue
            arr = fb_arr[row, i]
            circ = fb_circ[row, i]
            fb_dest[row, i] = -1
            counters[C_IN_FLIGHT] -= 1
            if claims[dest] != s:
                claims[dest] = s
                counters[C_RAW_DELIVERED] += 1
                if arr >= warmup:
                    counters[C_DELIVERED] += 1
                    d = s - arr
                    counters[C_DELAY_SUM] += d
                    if d < hist_cap:
                        hist[d] += 1
                    else:
                        counters[C_ERR] += 1
            else:
                chosen = -1
                if aux2_enabled != 0 and circ + 1 <= max_circ:
                    for j in range(k):
                        if fb_dest[(s + fb_delays[j]) % ring_fb, j] < 0:
                            chosen = j
                            break
                if chosen < 0:
                    counters[C_RAW_DROPPED] += 1
                    if arr >= warmup:
                        counters[_DROP_RECIRC] += 1
                else:
                    cell = (s + fb_delays[chosen]) % ring_fb
                    fb_dest[cell, chosen] = dest
                    fb_arr[cell, chosen] = arr
                    fb_circ[cell, chosen] = circ + 1
                    counters[C_IN_FLIGHT] += 1

        # -- release: aux1 (clears its reservation either way) --
        row = s % ring1
        for i in range(m):
            dest = a1_dest[row, i]
            if dest < 0:
                continue
            arr = a1_arr[row, i]
            a1_dest[row, i] = -1
            resv[row, dest] = 0
            counters[C_IN_FLIGHT] -= 1
            if claims[dest] != s:
                claims[dest] = s
                counters[C_RAW_DELIVERED] += 1
                if arr >= warmup:
                    counters[C_DELIVERED] += 1
                    d = s - arr
                    counters[C_DELAY_SUM] += d
                    if d < hist_cap:
                        hist[d] += 1
                    else:
                        counters[C_ERR] += 1
            else:
                chosen = -1
                if aux2_enabled != 0 and 1 <= max_circ:
                    for j in range(k):
                        if fb_dest[(s + fb_delays[j]) % ring_fb, j] < 0:
                            chosen = j
                            break
                if chosen < 0:
                    counters[C_RAW_DROPPED] += 1
                    if arr >= warmup:
                        counters[_DROP_FROM_AUX1] += 1
                else:
                    cell = (s + fb_delays[chosen]) % ring_fb
                    fb_dest[cell, chosen] = dest
                    fb_arr[cell, chosen] = arr
                    fb_circ[cell, chosen] = 1
                    counters[C_IN_FLIGHT] += 1

        # -- assignment: arrivals in shuffled order --
        lo = offsets[t]
        count = offsets[t + 1] - lo
        if count == 0:
            continue
        counters[C_RAW_OFFERED] += count
        if s >= warmup:
            counters[C_OFFERED] += count

        for a in range(count):
            order[a] = a
        for a in range(1, count):
            oj = order[a]
            key = keys[lo + oj]
            b = a - 1
            while b >= 0 and keys[lo + order[b]] > key:
                order[b + 1] = order[b]
                b -= 1
            order[b + 1] = oj

        for a in range(count):
            dest = dests[lo + order[a]]
            if claims[dest] != s:
                claims[dest] = s
                counters[C_RAW_DELIVERED] += 1
                if s >= warmup:
                    counters[C_DELIVERED] += 1
                    hist[0] += 1
                continue
            chosen = -1
            for i in range(m):
                cell = (s + a1_delays[i]) % ring1
                if resv[cell, dest] != 0:
                    continue
                if a1_dest[cell, i] < 0:
                    chosen = i
                    break
            if chosen >= 0:
                cell = (s + a1_delays[chosen]) % ring1
                a1_dest[cell, chosen] = dest
                a1_arr[cell, chosen] = s
                resv[cell, dest] = 1
                counters[C_IN_FLIGHT] += 1
                continue
            if aux2_enabled != 0:
                ffi = -1
                for j in range(k):
                    if ff_dest[(s + ff_delays[j]) % ring_ff, j] < 0:
                        ffi = j
                        break
                if ffi >= 0:
                    cell = (s + ff_delays[ffi]) % ring_ff
                    ff_dest[cell, ffi] = dest
                    ff_arr[cell, ffi] = s
                    counters[C_IN_FLIGHT] += 1
                    continue
            counters[C_RAW_DROPPED] += 1
            if s >= warmup:
                counters[_DROP_ASSIGN] += 1


_EMPTY_DESTS = np.empty(0, dtype=np.int64)
_EMPTY_KEYS = np.empty(0, dtype=np.float64)


def run_fast(plan, trace: Trace | None = None):
    """Array-engine equivalent of engine.run for metric-only plans."""
    from .engine import RunResult, drain_bound

    cfg = plan.switch
    tcfg = plan.traffic
    n = cfg.n_ports
    if trace is not None:
        if trace.n_ports != n:
            raise ValueError("trace n_ports does not match switch config")
        if trace.total_slots != plan.total_slots:
            raise ValueError("trace horizon does not match plan.total_slots")

    a1 = build_profile(cfg.m_aux1)
    a2 = build_profile(cfg.k_aux2)
    m, k = cfg.m_aux1, cfg.k_aux2
    ring1 = a1.t_max + 1
    ring2 = a2.t_max + 1

    a1_delays = np.asarray(a1.delays, dtype=np.int64)
    ff_delays = np.asarray(a2.delays, dtype=np.int64)
    fb_delays = ff_delays.copy()

    a1_dest = np.full((ring1, m), -1, dtype=np.int64)
    a1_arr = np.zeros((ring1, m), dtype=np.int64)
    ff_dest = np.full((ring2, k), -1, dtype=np.int64)
    ff_arr = np.zeros((ring2, k), dtype=np.int64)
    fb_dest = np.full((ring2, k), -1, dtype=np.int64)
    fb_arr = np.zeros((ring2, k), dtype=np.int64)
    fb_circ = np.zeros((ring2, k), dtype=np.int64)
    resv = np.zeros((ring1, n), dtype=np.uint8)
    claims = np.full(n, -1, dtype=np.int64)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    hist_cap = a1.t_max + a2.t_max * (cfg.max_circulations + 1) + 2
    hist = np.zeros(hist_cap, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)

    rng_traffic = traffic_rng(tcfg)
    rng_sched = scheduler_rng(tcfg)
    aux2_flag = 1 if cfg.aux2_enabled else 0
    warmup = plan.warmup_slots

    chunk = max(1024, min(65536, 8_000_000 // max(n, 1)))
    total = plan.total_slots
    for start in range(0, total, chunk):
        n_slots = min(chunk, total - start)
        if trace is None:
            draws = rng_traffic.random((n_slots, 2, n))
            mask = draws[:, 0, :] < tcfg.rho
            slot_idx, port_idx = np.nonzero(mask)
            dests = (draws[slot_idx, 1, port_idx] * n).astype(np.int64)
            offsets = np.zeros(n_slots + 1, dtype=np.int64)
            np.cumsum(mask.sum(axis=1), out=offsets[1:])
        else:
            lo = int(trace.offsets[start])
            hi = int(trace.offsets[start + n_slots])
            dests = trace.dest_ports[lo:hi].astype(np.int64)
            offsets = (trace.offsets[start:start + n_slots + 1] - lo).astype(np.int64)
        keys = rng_sched.random(len(dests))
        _simulate_chunk(start, n_slots, dests, offsets, keys, warmup,
                        n, m, k, cfg.max_circulations, aux2_flag,
                        a1_delays, ff_delays, fb_delays,
                        a1_dest, a1_arr, ff_dest, ff_arr,
                        fb_dest, fb_arr, fb_circ,
                        resv, claims, counters, hist, order)

    # drain tail: no arrivals until all pipelines empty
    empty_offsets = np.zeros(2, dtype=np.int64)
    slot = total
    limit = total + drain_bound(cfg)
    while counters[C_IN_FLIGHT] > 0:
        if slot > limit:
            raise RuntimeError(
                f"drain did not terminate within {drain_bound(cfg)} slots; "
                "pipeline state is corrupt")
        _simulate_chunk(slot, 1, _EMPTY_DESTS, empty_offsets, _EMPTY_KEYS,
                        warmup, n, m, k, cfg.max_circulations, aux2_flag,
                        a1_delays, ff_delays, fb_delays,
                        a1_dest, a1_arr, ff_dest, ff_arr,
                        fb_dest, fb_arr, fb_circ,
                        resv, claims, counters, hist, order)
        slot += 1

    if counters[C_ERR] != 0:
        raise RuntimeError("delay histogram capacity exceeded")
    if counters[C_RAW_OFFERED] != counters[C_RAW_DELIVERED] + counters[C_RAW_DROPPED]:
        raise RuntimeError(
            f"conservation violated: offered {counters[C_RAW_OFFERED]} != "
            f"delivered {counters[C_RAW_DELIVERED]} + "
            f"dropped {counters[C_RAW_DROPPED]}")

    metrics = RunMetrics(
        offered=int(counters[C_OFFERED]),
        delivered=int(counters[C_DELIVERED]),
        dropped_by_reason={r: int(counters[C_DROP_BASE + i])
                           for i, r in enumerate(DROP_REASONS)},
        delay_sum=int(counters[C_DELAY_SUM]),
        delay_histogram={int(d): int(c) for d, c in enumerate(hist) if c},
        traffic_id=(trace.traffic_id() if trace is not None
                    else generated_traffic_id(tcfg)),
    )
    return RunResult(metrics=metrics, event_log=None)
