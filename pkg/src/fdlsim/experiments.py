"""Experiment harness: config parsing, grid sweeps, CSV output.

A sweep is a grid of (rho, m) points, each run over a list of seeds,
with the second-stage buffers on, off, or both ("pair" mode, which runs
every seed's identical arrival stream through both switch variants and
reports the loss reduction the second stage buys).

Config files are flat ``key = value`` text; repeating a key builds a
list.  Presets expand to the four bundled figure grids and explicit
keys override preset values.

CSV schema (one row per rho/m/aux2 combination, header always present):
rho, m, aux2_enabled, seeds, offered, delivered, dropped, plr_mean,
plr_std, delay_mean, delay_std, reduction_pct.  reduction_pct is only
populated on rows belonging to an ablation pair, and equals the
loss_reduction of the seed-pooled counters.  Running the same spec
twice yields byte-identical output.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .engine import RunPlan, run
from .metrics import RunMetrics, aggregate, loss_reduction
from .model import SwitchConfig
from .traffic import Trace, TrafficConfig

PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b", "custom")

_RHO_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))

DEFAULT_HORIZON = 1_000_000
DEFAULT_WARMUP = 10_000
DEFAULT_SEEDS = tuple(range(1, 11))


class ConfigError(ValueError):
    """Config file problem, with line numbers where applicable."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    figure_preset: str = "custom"
    rho_values: tuple[float, ...] = ()
    m_values: tuple[int, ...] = ()
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    horizon: int = DEFAULT_HORIZON
    warmup: int = DEFAULT_WARMUP
    aux2_mode: str = "on"  # on | off | pair
    n_ports: int = 32
    min_offered: int = 0  # escalate horizon until a point offers this many
    output: str = ""

    def validate(self) -> None:
        if self.figure_preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.figure_preset!r}")
        if not self.rho_values:
            raise ConfigError("no rho values configured (set rho or a preset)")
        if not self.m_values:
            raise ConfigError("no m values configured (set m or a preset)")
        if not self.seeds:
            raise ConfigError("no seeds configured")
        for r in self.rho_values:
            if not 0.0 <= r <= 1.0:
                raise ConfigError(f"rho {r} out of range [0, 1]")
        for m in self.m_values:
            if m < 0:
                raise ConfigError(f"m {m} must be nonnegative")
        if self.aux2_mode not in ("on", "off", "pair"):
            raise ConfigError(f"aux2 must be on, off or pair, not {self.aux2_mode!r}")
        if not 0 <= self.warmup < self.horizon:
            raise ConfigError("warmup must satisfy 0 <= warmup < horizon")
        if self.n_ports < 1:
            raise ConfigError("n_ports must be >= 1")


def preset_spec(preset: str) -> ExperimentSpec:
    """The bundled grid for a figure preset."""
    if preset == "fig2a":
        # loss vs number of FDLs at three loads; zero-loss points need
        # enough offered packets for the claim to mean something
        return ExperimentSpec(figure_preset=preset, name=preset,
                              rho_values=(0.3, 0.6, 0.9),
                              m_values=tuple(range(4, 68, 4)),
                              min_offered=10_000_000)
    if preset == "fig2b":
        return ExperimentSpec(figure_preset=preset, name=preset,
                              rho_values=_RHO_GRID, m_values=(32, 64))
    if preset == "fig3a":
        return ExperimentSpec(figure_preset=preset, name=preset,
                              rho_values=_RHO_GRID, m_values=(16, 32, 64))
    if preset == "fig3b":
        return ExperimentSpec(figure_preset=preset, name=preset,
                              rho_values=_RHO_GRID, m_values=(32,),
                              aux2_mode="pair")
    if preset == "custom":
        return ExperimentSpec(figure_preset=preset)
    raise ConfigError(f"unknown preset {preset!r}")


_LIST_KEYS = ("rho", "m", "seed")
_SCALAR_KEYS = ("name", "preset", "horizon", "warmup", "aux2", "n_ports",
                "min_offered", "output")


def parse_config(text: str) -> ExperimentSpec:
    """Parse flat key = value config text into a validated spec.

    Repeated rho / m / seed keys form the grid lists.  Raises
    ConfigError naming the offending line for unknown keys, malformed
    lines, and out-of-range values.
    """
    assignments: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _LIST_KEYS and key not in _SCALAR_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        assignments.append((lineno, key, value))

    if not assignments:
        raise ConfigError(
            "empty config: set 'preset = fig2a|fig2b|fig3a|fig3b' or provide "
            "'rho = ...' and 'm = ...' lines (optional keys: seed, horizon, "
            "warmup, aux2, n_ports, min_offered, name, output)")

    preset = "custom"
    for lineno, key, value in assignments:
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(
                    f"line {lineno}: unknown preset {value!r} "
                    f"(choose from {', '.join(PRESETS)})")
            preset = value
    spec = preset_spec(preset)

    rhos: list[float] = []
    ms: list[int] = []
    seeds: list[int] = []
    updates: dict = {}
    for lineno, key, value in assignments:
        try:
            if key == "rho":
                rhos.append(float(value))
            elif key == "m":
                ms.append(int(value))
            elif key == "seed":
                seeds.append(int(value))
            elif key in ("horizon", "warmup", "n_ports", "min_offered"):
                updates[key] = int(value)
            elif key == "aux2":
                if value not in ("on", "off", "pair"):
                    raise ConfigError(
                        f"line {lineno}: aux2 must be on, off or pair")
                updates["aux2_mode"] = value
            elif key in ("name", "output"):
                updates[key] = value
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}")

    if rhos:
        updates["rho_values"] = tuple(rhos)
    if ms:
        updates["m_values"] = tuple(ms)
    if seeds:
        updates["seeds"] = tuple(seeds)
    spec = replace(spec, **updates)

    for lineno, key, value in assignments:
        if key == "rho" and not 0.0 <= float(value) <= 1.0:
            raise ConfigError(f"line {lineno}: rho {value} out of range [0, 1]")
    spec.validate()
    return spec


def point_horizon(spec: ExperimentSpec, rho: float) -> int:
    """Horizon for one grid point, escalated so the point offers at
    least spec.min_offered packets (when rho allows any traffic)."""
    if spec.min_offered and rho > 0:
        per_seed = math.ceil(spec.min_offered / (spec.n_ports * rho))
        return max(spec.horizon, spec.warmup + per_seed)
    return spec.horizon


@dataclass(frozen=True)
class _Job:
    rho: float
    m: int
    seed: int
    mode: str  # on | off | pair
    n_ports: int
    horizon: int
    warmup: int


def _make_plan(job: _Job, aux2: bool) -> RunPlan:
    return RunPlan(
        total_slots=job.horizon,
        warmup_slots=job.warmup,
        switch=SwitchConfig(n_ports=job.n_ports, m_aux1=job.m,
                            aux2_enabled=aux2),
        traffic=TrafficConfig(rho=job.rho, seed=job.seed, n_ports=job.n_ports),
    )


def _execute_job(args: tuple[_Job, Trace | None]) -> tuple[_Job, dict[str, RunMetrics]]:
    job, trace = args
    out: dict[str, RunMetrics] = {}
    if job.mode in ("on", "pair"):
        out["on"] = run(_make_plan(job, True), trace=trace).metrics
    if job.mode in ("off", "pair"):
        out["off"] = run(_make_plan(job, False), trace=trace).metrics
    return job, out


def merge_metrics(runs: list[RunMetrics]) -> RunMetrics:
    """Pool per-seed counters into one RunMetrics (for loss_reduction
    over a whole seed set); traffic ids concatenate in order."""
    merged = RunMetrics(dropped_by_reason={}, delay_histogram={})
    ids = []
    for m in runs:
        merged.offered += m.offered
        merged.delivered += m.delivered
        merged.delay_sum += m.delay_sum
        for k, v in m.dropped_by_reason.items():
            merged.dropped_by_reason[k] = merged.dropped_by_reason.get(k, 0) + v
        for k, v in m.delay_histogram.items():
            merged.delay_histogram[k] = merged.delay_histogram.get(k, 0) + v
        ids.append(m.traffic_id)
    merged.traffic_id = "+".join(ids)
    return merged


@dataclass
class SweepRow:
    rho: float
    m: int
    aux2_enabled: bool
    seeds: int
    offered: int
    delivered: int
    dropped: int
    plr_mean: float
    plr_std: float
    delay_mean: float
    delay_std: float
    reduction_pct: float | None = None


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["rho,m,aux2_enabled,seeds,offered,delivered,dropped,"
                 "plr_mean,plr_std,delay_mean,delay_std,reduction_pct"]
        for r in self.rows:
            red = "" if r.reduction_pct is None else f"{r.reduction_pct:.10g}"
            lines.append(
                f"{r.rho:.10g},{r.m},{str(r.aux2_enabled).lower()},{r.seeds},"
                f"{r.offered},{r.delivered},{r.dropped},"
                f"{r.plr_mean:.10g},{r.plr_std:.10g},"
                f"{r.delay_mean:.10g},{r.delay_std:.10g},{red}")
        return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec, workers: int | None = None,
                   trace: Trace | None = None,
                   progress=None) -> SweepResult:
    """Run a sweep and return its rows (also writes spec.output if set).

    Seeds and grid points execute as independent jobs, in parallel when
    workers > 1; merging is order independent, so reruns of the same
    spec are byte-identical.  An optional trace replays fixed traffic
    into every job (the grid must then be a single point and the trace
    horizon must match).
    """
    spec.validate()
    if trace is not None and (len(spec.rho_values) > 1 or len(spec.m_values) > 1):
        raise ConfigError("trace replay requires a single (rho, m) point")

    jobs: list[_Job] = []
    for rho in spec.rho_values:
        horizon = point_horizon(spec, rho)
        for m in spec.m_values:
            for seed in spec.seeds:
                jobs.append(_Job(rho, m, seed, spec.aux2_mode,
                                 spec.n_ports, horizon, spec.warmup))

    if workers is None:
        workers = os.cpu_count() or 1
    results: dict[_Job, dict[str, RunMetrics]] = {}
    args = [(job, trace) for job in jobs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, metrics in pool.map(_execute_job, args):
                results[job] = metrics
                if progress:
                    progress(job, metrics)
    else:
        for arg in args:
            job, metrics = _execute_job(arg)
            results[job] = metrics
            if progress:
                progress(job, metrics)

    result = SweepResult(spec=spec)
    for rho in spec.rho_values:
        horizon = point_horizon(spec, rho)
        for m in spec.m_values:
            seed_jobs = [_Job(rho, m, seed, spec.aux2_mode, spec.n_ports,
                              horizon, spec.warmup) for seed in spec.seeds]
            variants = (("on", True), ("off", False))
            per_variant = {}
            for key, flag in variants:
                if all(key in results[j] for j in seed_jobs):
                    per_variant[key] = [results[j][key] for j in seed_jobs]
            reduction = None
            if spec.aux2_mode == "pair":
                reduction = loss_reduction(merge_metrics(per_variant["on"]),
                                           merge_metrics(per_variant["off"]))
            for key, flag in variants:
                if key not in per_variant:
                    continue
                runs = per_variant[key]
                stats = aggregate(runs)
                result.rows.append(SweepRow(
                    rho=rho, m=m, aux2_enabled=flag, seeds=len(runs),
                    offered=stats.offered, delivered=stats.delivered,
                    dropped=stats.dropped,
                    plr_mean=stats.plr_mean, plr_std=stats.plr_std,
                    delay_mean=stats.delay_mean, delay_std=stats.delay_std,
                    reduction_pct=reduction,
                ))

    if spec.output:
        with open(spec.output, "w", encoding="ascii") as f:
            f.write(result.to_csv())
    return result
