"""What the tiny second-stage buffer bank is worth.

Runs each seed's arrival stream through the switch twice, with and
without the second auxiliary stage (two feed-forward plus two feedback
lines), and reports how much of the packet loss those four extra lines
remove.  At moderate load they absorb nearly all residual loss; under
heavy load they still trim a measurable slice.
"""

from fdlsim.experiments import ExperimentSpec, run_experiment

spec = ExperimentSpec(
    name="second-stage-ablation",
    rho_values=(0.5, 0.6, 0.7, 0.8, 0.9),
    m_values=(16,),  # small first stage so residual loss is visible
    seeds=(1, 2, 3),
    horizon=150_000,
    warmup=2_000,
    aux2_mode="pair",
)

result = run_experiment(spec, workers=2)

print(f"{'rho':>5} {'PLR with':>12} {'PLR without':>12} {'reduction':>10}")
for rho in spec.rho_values:
    pair = {row.aux2_enabled: row for row in result.rows if row.rho == rho}
    print(f"{rho:5.1f} {pair[True].plr_mean:12.3e} "
          f"{pair[False].plr_mean:12.3e} {pair[True].reduction_pct:9.1f}%")
