"""Recording and replaying traffic traces.

A trace pins the exact arrival stream (slot, input port, destination)
to a text file, so different switch configurations can be compared on
identical offered traffic, or a run can be reproduced elsewhere.
"""

import os
import tempfile

from fdlsim import (RunPlan, SwitchConfig, TrafficConfig, plr, read_trace,
                    record_trace, run, write_trace)

tcfg = TrafficConfig(rho=0.8, seed=7, n_ports=8)
trace = record_trace(tcfg, total_slots=20_000)
print(f"recorded {len(trace)} packets over {trace.total_slots} slots")
print(f"trace id: {trace.traffic_id()}")

path = os.path.join(tempfile.mkdtemp(), "traffic.txt")
write_trace(path, trace)
trace_back = read_trace(path)
print(f"round-tripped through {path}: id matches ->",
      trace_back.traffic_id() == trace.traffic_id())

for m_aux1 in (2, 8):
    plan = RunPlan(total_slots=trace.total_slots, warmup_slots=500,
                   switch=SwitchConfig(n_ports=8, m_aux1=m_aux1),
                   traffic=tcfg)
    metrics = run(plan, trace=trace_back).metrics
    print(f"m={m_aux1}: PLR {plr(metrics):.3e} on the replayed trace "
          f"({metrics.traffic_id[:24]}...)")
