"""Packet loss versus number of first-stage delay lines.

A desk-scale version of the loss-vs-FDL-count experiment: three loads,
a sweep over the bank size, reduced horizon so it finishes in about a
minute.  Loss falls steeply as the bank grows; heavier load needs more
lines before it reaches zero.  The CSV written at the end has the same
schema the CLI produces at full scale.
"""

from fdlsim.experiments import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    name="loss-vs-buffering",
    rho_values=(0.3, 0.6, 0.9),
    m_values=(4, 8, 12, 16, 24, 32, 48, 64),
    seeds=(1, 2, 3),
    horizon=100_000,
    warmup=2_000,
    output="loss_vs_buffering.csv",
)

result = run_experiment(spec, workers=2)

print(f"{'rho':>5} {'m':>4} {'mean PLR':>12} {'mean delay':>11}")
for row in result.rows:
    print(f"{row.rho:5.1f} {row.m:4d} {row.plr_mean:12.3e} {row.delay_mean:11.3f}")
print(f"\nwrote {spec.output}")
