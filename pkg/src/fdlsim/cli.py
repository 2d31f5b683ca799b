"""Command-line harness for single runs and figure sweeps.

Examples:
    fdlsim --preset fig2b --output fig2b.csv
    fdlsim --config sweep.cfg --workers 4 -v
    fdlsim --rho 0.9 --m 32 --seed 1 --horizon 200000 --output point.csv
    fdlsim --rho 0.6 --m 32 --seed 1 --export-trace traffic.txt
    fdlsim --rho 0.6 --m 32 --replay-trace traffic.txt --no-aux2

Exit codes: 0 success, 2 bad configuration or usage, 1 runtime failure.
"""

import argparse
import sys
import time
from dataclasses import replace

from .experiments import (ConfigError, ExperimentSpec, parse_config,
                          preset_spec, run_experiment)
from .metrics import avg_delay, plr
from .traffic import TrafficConfig, read_trace, record_trace, write_trace


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fdlsim",
        description="Simulate a two-stage shared-FDL optical packet switch "
                    "and sweep loss/delay experiments to CSV.")
    p.add_argument("--config", metavar="PATH",
                   help="experiment config file (flat key = value text)")
    p.add_argument("--preset", choices=("fig2a", "fig2b", "fig3a", "fig3b"),
                   help="use a bundled figure grid (overridden by --config keys)")
    p.add_argument("--output", metavar="PATH",
                   help="CSV output path (default: stdout)")
    p.add_argument("--workers", type=int, metavar="N",
                   help="parallel worker processes (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="print per-job progress to stderr")
    single = p.add_argument_group("single-point overrides")
    single.add_argument("--rho", type=float, help="offered load per input")
    single.add_argument("--m", type=int, help="first-stage FDL count")
    single.add_argument("--seed", type=int, help="run a single seed")
    single.add_argument("--horizon", type=int, help="slots per run")
    single.add_argument("--warmup", type=int, help="warm-up slots excluded from metrics")
    single.add_argument("--n-ports", type=int, help="switch port count")
    single.add_argument("--no-aux2", action="store_true",
                        help="disable the second-stage buffers")
    traces = p.add_argument_group("traffic traces")
    traces.add_argument("--export-trace", metavar="PATH",
                        help="write the generated traffic of a single point "
                             "to a trace file (and run from it)")
    traces.add_argument("--replay-trace", metavar="PATH",
                        help="replay a trace file instead of generating traffic")
    return p


def _spec_from_args(args) -> ExperimentSpec:
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            spec = parse_config(f.read())
    elif args.preset:
        spec = preset_spec(args.preset)
    elif args.rho is not None and args.m is not None:
        spec = ExperimentSpec(rho_values=(args.rho,), m_values=(args.m,))
    else:
        raise ConfigError(
            "nothing to run: pass --config, --preset, or both --rho and --m")

    updates = {}
    if args.rho is not None:
        updates["rho_values"] = (args.rho,)
    if args.m is not None:
        updates["m_values"] = (args.m,)
    if args.seed is not None:
        updates["seeds"] = (args.seed,)
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    if args.warmup is not None:
        updates["warmup"] = args.warmup
    if args.n_ports is not None:
        updates["n_ports"] = args.n_ports
    if args.no_aux2:
        updates["aux2_mode"] = "off"
    if args.output is not None:
        updates["output"] = args.output
    spec = replace(spec, **updates)
    spec.validate()
    return spec


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)

        trace = None
        if args.replay_trace and args.export_trace:
            raise ConfigError("--export-trace and --replay-trace are exclusive")
        if args.replay_trace or args.export_trace:
            if len(spec.rho_values) > 1 or len(spec.m_values) > 1:
                raise ConfigError("trace options require a single (rho, m) point")
        if args.export_trace:
            tcfg = TrafficConfig(rho=spec.rho_values[0], seed=spec.seeds[0],
                                 n_ports=spec.n_ports)
            trace = record_trace(tcfg, spec.horizon)
            write_trace(args.export_trace, trace)
            if args.verbose:
                print(f"wrote {len(trace)} packets to {args.export_trace}",
                      file=sys.stderr)
        elif args.replay_trace:
            trace = read_trace(args.replay_trace)
            spec = replace(spec, n_ports=trace.n_ports,
                           horizon=trace.total_slots,
                           warmup=min(spec.warmup, max(0, trace.total_slots - 1)))
            spec.validate()
    except (ConfigError, ValueError, OSError) as exc:
        print(f"fdlsim: error: {exc}", file=sys.stderr)
        return 2

    progress = None
    if args.verbose:
        t0 = time.perf_counter()

        def progress(job, metrics):
            for key, m in sorted(metrics.items()):
                print(f"[{time.perf_counter() - t0:8.1f}s] rho={job.rho:g} "
                      f"m={job.m} seed={job.seed} aux2={key}: "
                      f"plr={plr(m):.4g} delay={avg_delay(m):.3f}",
                      file=sys.stderr)

    try:
        result = run_experiment(spec, workers=args.workers, trace=trace,
                                progress=progress)
    except (ConfigError, ValueError) as exc:
        print(f"fdlsim: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure in a worker
        print(f"fdlsim: run failed: {exc}", file=sys.stderr)
        return 1

    if not spec.output:
        sys.stdout.write(result.to_csv())
    elif args.verbose:
        print(f"wrote {len(result.rows)} rows to {spec.output}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
