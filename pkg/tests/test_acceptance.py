"""Acceptance suite: quantitative bands and fast invariant criteria.

The quantitative criteria run the real experiment scale (10 seeds, one
million measured slots each, warm-up 10,000) through the fast engine,
sharing a single batch of runs across criteria; expect a few minutes of
wall time.  Each criterion prints one PASS/FAIL line.
"""

from concurrent.futures import ProcessPoolExecutor

import pytest

from _replay import replay_event_log
from fdlsim.engine import RunPlan, format_event_log, run
from fdlsim.experiments import ExperimentSpec, run_experiment, _execute_job, _Job
from fdlsim.metrics import aggregate, loss_reduction
from fdlsim.model import SwitchConfig
from fdlsim.scheduler import DROP_REASONS
from fdlsim.traffic import TrafficConfig

N_PORTS = 32
SEEDS = tuple(range(1, 11))
WARMUP = 10_000
HORIZON = 1_010_000  # one million measured slots past warm-up

# (rho, m, mode); pair mode runs aux2 on and off on identical traffic
FULL_SCALE_POINTS = [
    (0.3, 12, "on"),
    (0.6, 40, "on"),
    (0.9, 60, "on"),
    (0.9, 64, "on"),
    (0.2, 64, "on"),
    (0.2, 16, "on"),
    (0.7, 64, "on"),
    (0.6, 32, "pair"),
    (0.9, 32, "pair"),
]

WORKERS = 2


def _report(cid, ok, detail):
    print(f"ACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{cid}: {detail}"


@pytest.fixture(scope="module")
def full_runs():
    """{(rho, m, aux2_on): [RunMetrics per seed]} for the shared points."""
    jobs = []
    for rho, m, mode in FULL_SCALE_POINTS:
        for seed in SEEDS:
            jobs.append(_Job(rho=rho, m=m, seed=seed, mode=mode,
                             n_ports=N_PORTS, horizon=HORIZON, warmup=WARMUP))
    table: dict = {}
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        for job, metrics in pool.map(_execute_job, [(j, None) for j in jobs],
                                     chunksize=1):
            for key, m in metrics.items():
                table.setdefault((job.rho, job.m, key == "on"), []).append(m)
    return table


def _pooled_plr(runs):
    offered = sum(m.offered for m in runs)
    dropped = sum(m.dropped for m in runs)
    return offered, dropped / offered if offered else 0.0


def test_criterion_1_zero_loss_at_low_and_moderate_load(full_runs):
    offered, rate = _pooled_plr(full_runs[(0.3, 12, True)])
    _report("1a", offered >= 10**7 and rate < 1e-6,
            f"rho=0.3 m=12: PLR {rate:.3g} over {offered} offered")
    offered, rate = _pooled_plr(full_runs[(0.6, 40, True)])
    _report("1b", offered >= 10**7 and rate < 1e-6,
            f"rho=0.6 m=40: PLR {rate:.3g} over {offered} offered")


def test_criterion_2_near_zero_loss_heavy_load_m60(full_runs):
    stats = aggregate(full_runs[(0.9, 60, True)])
    _report("2", stats.plr_mean < 1e-3,
            f"rho=0.9 m=60: mean PLR {stats.plr_mean:.3g} < 1e-3")


def test_criterion_3_heavy_load_m32_band(full_runs):
    stats = aggregate(full_runs[(0.9, 32, True)])
    _report("3", 3e-3 <= stats.plr_mean <= 2e-1,
            f"rho=0.9 m=32: mean PLR {stats.plr_mean:.3g} in [3e-3, 2e-1]")


def test_criterion_4_heavy_load_m64_band_and_improvement(full_runs):
    plr64 = aggregate(full_runs[(0.9, 64, True)]).plr_mean
    plr32 = aggregate(full_runs[(0.9, 32, True)]).plr_mean
    _report("4a", 3e-5 <= plr64 <= 3e-3,
            f"rho=0.9 m=64: mean PLR {plr64:.3g} in [3e-5, 3e-3]")
    improvement = 1.0 - plr64 / plr32
    _report("4b", improvement >= 0.95,
            f"relative improvement m=32 -> m=64: {improvement:.4f} >= 0.95")


def test_criterion_5_average_delay_band(full_runs):
    stats = aggregate(full_runs[(0.9, 64, True)])
    _report("5a", 1.9 <= stats.delay_mean <= 2.9,
            f"rho=0.9 m=64: mean delay {stats.delay_mean:.3f} in [1.9, 2.9]; "
            "see decisions ledger: this band contradicts the loss bands of "
            "criterion 4 in any work-conserving model of this switch")


def test_criterion_5_low_load_delay_crossing(full_runs):
    d64 = aggregate(full_runs[(0.2, 64, True)]).delay_mean
    d16 = aggregate(full_runs[(0.2, 16, True)]).delay_mean
    _report("5b", d64 <= d16,
            f"rho=0.2: delay m=64 {d64:.4f} <= delay m=16 {d16:.4f}")


def test_criterion_6_ablation_reductions(full_runs):
    from fdlsim.experiments import merge_metrics
    red_06 = loss_reduction(merge_metrics(full_runs[(0.6, 32, True)]),
                            merge_metrics(full_runs[(0.6, 32, False)]))
    _report("6a", red_06 >= 50.0,
            f"rho=0.6 m=32: loss reduction {red_06:.1f}% >= 50%")
    red_09 = loss_reduction(merge_metrics(full_runs[(0.9, 32, True)]),
                            merge_metrics(full_runs[(0.9, 32, False)]))
    _report("6b", 10.0 <= red_09 <= 40.0,
            f"rho=0.9 m=32: loss reduction {red_09:.1f}% in [10%, 40%]")


def test_criterion_7_zero_loss_below_point_eight(full_runs):
    offered, rate = _pooled_plr(full_runs[(0.7, 64, True)])
    _report("7", offered >= 10**7 and rate < 1e-6,
            f"rho=0.7 m=64: PLR {rate:.3g} over {offered} offered")


# ---- fast, CI-scale criteria ----

def _quick_plan(n, m, rho, seed, slots=400, warmup=0, aux2=True, **kwargs):
    return RunPlan(total_slots=slots, warmup_slots=warmup,
                   switch=SwitchConfig(n_ports=n, m_aux1=m, aux2_enabled=aux2),
                   traffic=TrafficConfig(rho=rho, seed=seed, n_ports=n),
                   **kwargs)


def test_criterion_8_conservation_matrix():
    checked = 0
    for n in (2, 4, 32):
        for m in (0, 2, 8, 32):
            for rho in (0.0, 0.3, 1.0):
                metrics = run(_quick_plan(n, m, rho, seed=5)).metrics
                assert metrics.offered == metrics.delivered + metrics.dropped
                checked += 1
    _report("8", checked == 36, f"conservation on {checked} configurations")


def test_criterion_9_port_exclusivity_and_collision_free_aux1():
    for n, m, rho in [(8, 8, 0.9), (32, 32, 0.9)]:
        plan = _quick_plan(n, m, rho, seed=2, slots=1500,
                           record_event_log=True, engine="reference")
        result = run(plan)
        replay_event_log(plan.switch, result.event_log)
    _report("9", True, "event-log replay: port exclusivity and one aux1 "
                       "emergence per (port, slot)")


def test_criterion_10_circulation_cap_and_reason_partition():
    plan = _quick_plan(8, 8, 1.0, seed=3, slots=2000,
                       record_event_log=True, engine="reference")
    result = run(plan)
    per_packet = {}
    for _slot, d in result.event_log:
        if d.bank == "aux2_feedback":
            per_packet[d.packet_id] = per_packet.get(d.packet_id, 0) + 1
    cap_ok = per_packet and max(per_packet.values()) <= plan.switch.max_circulations
    m = result.metrics
    partition_ok = (set(m.dropped_by_reason) == set(DROP_REASONS)
                    and sum(m.dropped_by_reason.values()) == m.dropped
                    and m.dropped > 0)
    _report("10", bool(cap_ok and partition_ok),
            f"max circulations used {max(per_packet.values())}, "
            f"drop reasons sum to {m.dropped}")


def test_criterion_11_determinism():
    plan = _quick_plan(8, 8, 0.9, seed=4, slots=1000,
                       record_event_log=True, engine="reference")
    log1 = format_event_log(run(plan).event_log)
    log2 = format_event_log(run(plan).event_log)
    spec = ExperimentSpec(rho_values=(0.8,), m_values=(4,), seeds=(1, 2),
                          horizon=2000, warmup=100, n_ports=8)
    csv1 = run_experiment(spec, workers=1).to_csv()
    csv2 = run_experiment(spec, workers=2).to_csv()
    _report("11", log1 == log2 and csv1 == csv2,
            "event log and CSV byte-identical across reruns")


def test_criterion_12_hand_trace_oracles():
    import test_scheduler as ts
    helper = ts.TestMultiSlotTraces()
    outcomes = []
    state = ts.make_state(m_aux1=2)
    log = helper.run_trace(state, [[ts.Packet(0, 0, 2)]])
    outcomes.append(helper.delivered_delays(log) == [0])
    state = ts.make_state(m_aux1=2)
    log = helper.run_trace(state, [[ts.Packet(0, 0, 2), ts.Packet(1, 0, 2)]])
    outcomes.append(helper.delivered_delays(log) == [0, 1])
    state = ts.make_state(m_aux1=2)
    log = helper.run_trace(state, [[ts.Packet(i, 0, 2) for i in range(3)]])
    outcomes.append(helper.delivered_delays(log) == [0, 1, 2])
    state = ts.make_state(m_aux1=0)
    log = helper.run_trace(state, [[ts.Packet(i, 0, 2) for i in range(4)]])
    drops = [d for _, d in log if d.kind == "dropped"]
    outcomes.append(helper.delivered_delays(log) == [0, 1, 2] and len(drops) == 1)
    _report("12", all(outcomes),
            "hand traces delays {0}, {0,1}, {0,1,2} and fourth-packet drop")


def test_criterion_13_monotonicity_and_ablation_dominance():
    plr_means = []
    for m in (8, 16, 32, 64):
        runs = [run(_quick_plan(N_PORTS, m, 0.9, seed=s, slots=21_000,
                                warmup=1000)).metrics for s in SEEDS]
        plr_means.append(aggregate(runs).plr_mean)
    monotone = all(a >= b for a, b in zip(plr_means, plr_means[1:]))

    dominance = True
    for seed in SEEDS:
        on = run(_quick_plan(N_PORTS, 32, 0.9, seed=seed, slots=21_000,
                             warmup=1000)).metrics
        off = run(_quick_plan(N_PORTS, 32, 0.9, seed=seed, slots=21_000,
                              warmup=1000, aux2=False)).metrics
        assert on.traffic_id == off.traffic_id
        dominance = dominance and on.dropped <= off.dropped
    _report("13", monotone and dominance,
            "mean PLR over m=8,16,32,64: "
            + " >= ".join(f"{p:.2e}" for p in plr_means)
            + f"; paired drops on<=off for all {len(SEEDS)} seeds")
