"""One simulation run, narrated.

Builds the default 32x32 switch with 32 first-stage delay lines, offers
heavy Bernoulli traffic for 200k slots, and prints what happened to the
packets: how many went straight through, how many waited in a delay
line, and why the rest were dropped.
"""

from fdlsim import (RunPlan, SwitchConfig, TrafficConfig, avg_delay, plr, run)

plan = RunPlan(
    total_slots=200_000,
    warmup_slots=5_000,
    switch=SwitchConfig(n_ports=32, m_aux1=32),
    traffic=TrafficConfig(rho=0.9, seed=42, n_ports=32),
)

print(f"running {plan.total_slots} slots at load {plan.traffic.rho} ...")
metrics = run(plan).metrics

print(f"offered packets : {metrics.offered}")
print(f"delivered       : {metrics.delivered}")
print(f"dropped         : {metrics.dropped}")
print(f"packet loss rate: {plr(metrics):.3e}")
print(f"average delay   : {avg_delay(metrics):.3f} slots")

print("\ndrop breakdown:")
for reason, count in sorted(metrics.dropped_by_reason.items()):
    print(f"  {reason:28s} {count}")

print("\ndelay distribution (delay: packets):")
direct = metrics.delay_histogram.get(0, 0)
print(f"  direct (no buffering): {direct} "
      f"({100 * direct / metrics.delivered:.1f}%)")
for delay in sorted(d for d in metrics.delay_histogram if d > 0)[:10]:
    print(f"  {delay:3d} slots: {metrics.delay_histogram[delay]}")
