"""Experiment configuration, ensemble sweeps and deterministic CSV output.

Realization ``i`` of a sweep uses the graph ``random_regular(n, c, seed_i)``
with ``seed_i = SeedSequence(master, spawn_key=(i,)).generate_state(1)[0]``,
a 32-bit integer. The derivation depends only on ``(master, i)``, so any
other implementation using numpy's SeedSequence reproduces the instances.

Floats are written with ``repr``, which round-trips exactly, and rows are
sorted by a fixed key before writing, so output bytes do not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_DT, DEFAULT_SAMPLES, SCHEDULE_KINDS, Schedule, Trajectory, evolve
from .errors import CQAError
from .graph import Graph, coloring_oracle, random_regular
from .hilbert import DRIVER_KINDS, DriverSpec, build_problem_diagonal
from .metrics import AnnealOutcome, outcome
from .spectral import LevelPopulation, SpectrumSample, population_distribution

SWEEP_HEADER = ("graph_id", "seed", "driver", "schedule", "tau", "E_res", "P_suc", "colorable")
AGGREGATE_HEADER = ("driver", "schedule", "tau", "mean_E_res", "mean_P_suc", "n_ok", "n_failed")
TRAJECTORY_HEADER = ("t", "s", "E_ir", "f_g", "norm")
GAP_HEADER = ("s", "E0", "E1", "gap")
POPULATION_HEADER = ("s", "level", "energy", "population", "cluster_id")

DEFAULT_TAU_BOUNDS = {"linear": (0.5, 200.0), "exp": (0.05, 20.0)}
POINTS_PER_DECADE = 16
DEFAULT_SNAPSHOTS = (0.8, 0.9, 1.0)


def tau_grid(lo: float, hi: float, per_decade: int = POINTS_PER_DECADE) -> tuple[float, ...]:
    """Log-spaced grid from ``lo`` to ``hi`` inclusive with about ``per_decade`` points per decade."""
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {lo}, {hi}")
    count = round(per_decade * math.log10(hi / lo)) + 1
    return tuple(float(t) for t in np.geomspace(lo, hi, count))


def default_tau_grid(schedule: str) -> tuple[float, ...]:
    return tau_grid(*DEFAULT_TAU_BOUNDS[schedule])


def realization_seed(master: int, i: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(i,)).generate_state(1)[0])


def worker_count() -> int:
    env = os.environ.get("CQA_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"CQA_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"CQA_THREADS must be positive, got {n}")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    n_nodes: int = 6
    connectivity: int = 3
    q: int = 4
    drivers: tuple[str, ...] = DRIVER_KINDS
    schedules: tuple[str, ...] = ("linear",)
    taus: tuple[float, ...] | None = None
    realizations: int = 100
    master_seed: int = 0
    dt: float = DEFAULT_DT
    sample_count: int = DEFAULT_SAMPLES
    output: str | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        for kind in self.drivers:
            if kind not in DRIVER_KINDS:
                raise ValueError(f"unknown driver {kind!r}")
        for kind in self.schedules:
            if kind not in SCHEDULE_KINDS:
                raise ValueError(f"unknown schedule {kind!r}")
        if self.taus is not None:
            taus = [float(t) for t in self.taus]
            if not taus or taus[0] <= 0 or any(b <= a for a, b in zip(taus, taus[1:])):
                raise ValueError("tau grid must be non-empty, positive and strictly increasing")
            object.__setattr__(self, "taus", tuple(taus))

    def taus_for(self, schedule: str) -> tuple[float, ...]:
        return self.taus if self.taus is not None else default_tau_grid(schedule)

    def seeds(self) -> list[int]:
        return [realization_seed(self.master_seed, i) for i in range(self.realizations)]


@dataclass(frozen=True)
class CellResult:
    graph_id: int
    seed: int
    driver: str
    schedule: str
    tau: float
    colorable: bool
    outcome: AnnealOutcome | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.outcome is not None

    def sort_key(self):
        return (self.driver, self.schedule, self.tau, self.graph_id)


@dataclass(frozen=True)
class AggregateRow:
    driver: str
    schedule: str
    tau: float
    mean_residual_energy: float
    mean_success_probability: float
    n_ok: int
    n_failed: int


@dataclass
class SweepResult:
    cells: list[CellResult]
    aggregate: list[AggregateRow] = field(default_factory=list)

    @property
    def failures(self) -> list[CellResult]:
        return [c for c in self.cells if not c.ok]

    def mean_curve(self, driver: str, schedule: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = [r for r in self.aggregate if r.driver == driver and r.schedule == schedule]
        return (
            np.array([r.tau for r in rows]),
            np.array([r.mean_residual_energy for r in rows]),
            np.array([r.mean_success_probability for r in rows]),
        )


def anneal(g: Graph, q: int, driver: str, schedule: str, tau: float, dt=DEFAULT_DT, sample_count=DEFAULT_SAMPLES,
           graph_id=0, seed=0, colorable=None) -> AnnealOutcome:
    """One anneal from the driver ground state; returns the end-of-anneal metrics."""
    diag = build_problem_diagonal(g, q)
    if colorable is None:
        colorable = coloring_oracle(g, q).colorable
    traj = evolve(diag, q, DriverSpec.make(driver, q), Schedule(schedule, tau), dt, sample_count)
    return outcome(traj.final_state, diag, tau, schedule, driver, graph_id, seed, colorable)


def _run_cell(job) -> CellResult:
    graph_id, seed, colorable, cfg, driver, schedule, tau = job
    g = random_regular(cfg.n_nodes, cfg.connectivity, seed)
    try:
        res = anneal(g, cfg.q, driver, schedule, tau, cfg.dt, cfg.sample_count, graph_id, seed, colorable)
    except CQAError as exc:
        return CellResult(graph_id, seed, driver, schedule, tau, colorable, error=f"{type(exc).__name__}: {exc}")
    return CellResult(graph_id, seed, driver, schedule, tau, colorable, res)


def aggregate(cells: list[CellResult]) -> list[AggregateRow]:
    groups: dict[tuple, list[CellResult]] = {}
    for c in sorted(cells, key=CellResult.sort_key):
        groups.setdefault((c.driver, c.schedule, c.tau), []).append(c)
    rows = []
    for (driver, schedule, tau), members in groups.items():
        good = [c.outcome for c in members if c.ok]
        e = float(np.mean([o.residual_energy for o in good])) if good else math.nan
        p = float(np.mean([o.success_probability for o in good])) if good else math.nan
        rows.append(AggregateRow(driver, schedule, tau, e, p, len(good), len(members) - len(good)))
    return rows


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """Anneal every (realization, driver, schedule, tau) cell and average over realizations.

    Failed cells (for instance a norm-drift abort) are kept with an error
    message and excluded from the means; the sweep itself carries on.
    """
    graphs = []
    for i, seed in enumerate(cfg.seeds()):
        g = random_regular(cfg.n_nodes, cfg.connectivity, seed)
        graphs.append((i, seed, coloring_oracle(g, cfg.q).colorable))
    jobs = [
        (i, seed, colorable, cfg, driver, schedule, tau)
        for schedule in cfg.schedules
        for driver in cfg.drivers
        for tau in cfg.taus_for(schedule)
        for i, seed, colorable in graphs
    ]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        cells = [_run_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    cells.sort(key=CellResult.sort_key)
    result = SweepResult(cells, aggregate(cells))
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(sweep_csv(result.cells))
    return result


def run_trajectory(g: Graph, q: int, driver: str, sch: Schedule, dt=DEFAULT_DT, sample_count=DEFAULT_SAMPLES,
                   snapshots=(), k: int = 10) -> tuple[Trajectory, dict[float, list[LevelPopulation]]]:
    """Anneal with ground-population tracking and population tables at the ``snapshots`` s values."""
    diag = build_problem_diagonal(g, q)
    d = DriverSpec.make(driver, q)
    traj = evolve(diag, q, d, sch, dt, sample_count, track_ground=True, snapshot_s=snapshots)
    tables = {s: population_distribution(traj.snapshots[s], s, diag, d, k) for s in sorted(traj.snapshots)}
    return traj, tables


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def sweep_csv(cells: list[CellResult]) -> str:
    rows = []
    for c in cells:
        e = c.outcome.residual_energy if c.ok else None
        p = c.outcome.success_probability if c.ok else None
        rows.append((c.graph_id, c.seed, c.driver, c.schedule, float(c.tau), e, p, c.colorable))
    return _csv(SWEEP_HEADER, rows)


def aggregate_csv(rows: list[AggregateRow]) -> str:
    return _csv(
        AGGREGATE_HEADER,
        [(r.driver, r.schedule, float(r.tau), r.mean_residual_energy, r.mean_success_probability, r.n_ok, r.n_failed)
         for r in rows],
    )


def trajectory_csv(traj: Trajectory) -> str:
    rows = [
        (float(x.t), float(x.s), float(x.residual_energy),
         None if x.ground_population is None else float(x.ground_population), float(x.norm))
        for x in traj.samples
    ]
    return _csv(TRAJECTORY_HEADER, rows)


def gap_csv(samples: list[SpectrumSample]) -> str:
    return _csv(
        GAP_HEADER,
        [(float(x.s), float(x.eigenvalues[0]), float(x.eigenvalues[1]), float(x.gap)) for x in samples],
    )


def populations_csv(tables: dict[float, list[LevelPopulation]]) -> str:
    rows = []
    for s in sorted(tables):
        for lv in tables[s]:
            rows.append((float(s), lv.level, float(lv.energy), float(lv.population), lv.cluster_id))
    return _csv(POPULATION_HEADER, rows)
