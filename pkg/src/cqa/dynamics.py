"""Annealing schedules and real-time Schrödinger integration.

Time is in units of hbar/J. The integrator is classical fourth-order
Runge-Kutta with a fixed step. It runs in a rotating frame: the equation is
integrated with ``H(s) - c(s)``, where ``c(s)`` interpolates linearly between
the driver ground energy and the problem ground energy. The frame only adds a
global phase, which is known in closed form and is removed again, so the
returned states solve ``i dpsi/dt = H(s(t)) psi`` itself. Keeping the
reference energy near the occupied levels lets the RK4 stability polynomial
conserve the norm far more tightly at a given ``dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NormDriftError, ScheduleRangeError
from .graph import Graph
from .hilbert import (
    DriverSpec,
    ProblemDiagonal,
    build_problem_diagonal,
    driver_ground_energy,
    driver_ground_state,
)

DEFAULT_DT = 0.005
DEFAULT_SAMPLES = 100
MAX_NORM_DRIFT = 1e-6
EXP_HORIZON = 15.0

SCHEDULE_KINDS = ("linear", "exp")


@dataclass(frozen=True)
class Schedule:
    """Annealing schedule ``s(t)``.

    ``linear``: ``s = t / tau`` and ``T = tau``.
    ``exp``: ``s = 1 - exp(-t / tau)`` and ``T = 15 tau``.
    """

    kind: str
    tau: float

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"schedule kind must be one of {SCHEDULE_KINDS}, got {self.kind!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @property
    def total_time(self) -> float:
        return self.tau if self.kind == "linear" else EXP_HORIZON * self.tau

    @property
    def _code(self) -> int:
        return 0 if self.kind == "linear" else 1

    def time_at(self, s: float) -> float:
        """Earliest time with ``s(t) = s``; ``s = 1`` maps to ``T`` for the exponential schedule."""
        if not 0.0 <= s <= 1.0:
            raise ScheduleRangeError(f"s={s} outside [0, 1]")
        if self.kind == "linear":
            return s * self.tau
        if s >= 1.0:
            return self.total_time
        return min(-self.tau * math.log1p(-s), self.total_time)

    def integral(self, t: float) -> float:
        """Closed-form integral of ``s`` over ``[0, t]``."""
        if self.kind == "linear":
            return t * t / (2.0 * self.tau)
        return t + self.tau * math.expm1(-t / self.tau)


def schedule_s(sch: Schedule, t: float) -> float:
    T = sch.total_time
    if t < 0.0 or t > T * (1.0 + 1e-12):
        raise ScheduleRangeError(f"t={t} outside [0, {T}]")
    return float(_kernels.schedule_value(sch._code, sch.tau, float(t)))


def instantaneous_residual(psi, diag: ProblemDiagonal) -> float:
    """``<psi|H_p|psi> - E_0`` in units of J."""
    weights = np.abs(psi) ** 2
    return float(np.dot(weights, diag.as_float()) - diag.ground_energy)


@dataclass(frozen=True)
class Sample:
    t: float
    s: float
    residual_energy: float
    norm: float
    ground_population: float | None = None

    @property
    def norm_drift(self) -> float:
        return abs(self.norm - 1.0)


@dataclass
class Trajectory:
    samples: list[Sample]
    final_state: np.ndarray
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def max_norm_drift(self) -> float:
        return max(smp.norm_drift for smp in self.samples)


def _breakpoints(sch: Schedule, sample_count: int, snapshot_s) -> tuple[list[float], set[int], dict[int, float]]:
    T = sch.total_time
    times = [T * k / sample_count for k in range(sample_count + 1)]

    def snap(t):
        # reuse a sample time when a snapshot coincides with it up to roundoff
        nearest = min(times, key=lambda u: abs(u - t))
        return nearest if abs(nearest - t) <= 1e-9 * T else t

    snap_times = {float(s): snap(sch.time_at(s)) for s in snapshot_s}
    points = sorted(set(times) | set(snap_times.values()))
    sample_idx = {points.index(t) for t in times}
    snap_idx = {}
    for s, t in snap_times.items():
        snap_idx.setdefault(points.index(t), []).append(s)
    return points, sample_idx, snap_idx


def evolve(
    g: Graph | ProblemDiagonal,
    q: int,
    d: DriverSpec,
    sch: Schedule,
    dt: float = DEFAULT_DT,
    sample_count: int = DEFAULT_SAMPLES,
    *,
    track_ground: bool = False,
    snapshot_s=(),
    max_norm_drift: float = MAX_NORM_DRIFT,
) -> Trajectory:
    """Anneal from the driver ground state and record ``sample_count + 1`` samples.

    Each interval between consecutive sample (or snapshot) times is split into
    the fewest equal RK4 steps no longer than ``dt``, so the run lands exactly
    on every recorded time and on ``T``. The state is never renormalized;
    :class:`NormDriftError` is raised as soon as a sample drifts by more than
    ``max_norm_drift``.

    ``snapshot_s`` lists schedule values whose states are kept in
    ``Trajectory.snapshots``. With ``track_ground`` each sample also carries
    the instantaneous ground-manifold population.
    """
    diag = g if isinstance(g, ProblemDiagonal) else build_problem_diagonal(g, q)
    if diag.q != q or d.q != q:
        raise ValueError("problem, driver and q disagree on the color count")
    T = sch.total_time
    if not 0 < dt <= T:
        raise ValueError(f"need 0 < dt <= T={T}, got dt={dt}")
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")

    n = diag.n_nodes
    hop = d.hop_matrix()
    energies = diag.as_float()
    e_start = driver_ground_energy(d, n)
    e_end = float(diag.ground_energy)

    def lab_frame(phi, t):
        # undo exp(+i * integral of c) picked up in the rotating frame
        phase = e_start * t + (e_end - e_start) * sch.integral(t)
        return phi * np.exp(-1j * phase)

    phi = driver_ground_state(d, n)
    points, sample_idx, snap_idx = _breakpoints(sch, sample_count, snapshot_s)

    samples = []
    snapshots = {}
    ground_cache = {}

    def record(k, t):
        psi = lab_frame(phi, t)
        if k in snap_idx:
            for s_snap in snap_idx[k]:
                snapshots[s_snap] = psi.copy()
        if k not in sample_idx:
            return psi
        s = schedule_s(sch, t)
        norm = float(np.linalg.norm(psi))
        fg = None
        if track_ground:
            from .spectral import ground_population

            fg = ground_population(psi, s, diag, d, cache=ground_cache)
        samples.append(Sample(t, s, instantaneous_residual(psi, diag), norm, fg))
        if abs(norm - 1.0) > max_norm_drift:
            raise NormDriftError(t, abs(norm - 1.0), max_norm_drift)
        return psi

    psi = record(0, 0.0)
    for k in range(1, len(points)):
        t0, t1 = points[k - 1], points[k]
        span = t1 - t0
        nsteps = max(1, math.ceil(span / dt - 1e-9))
        _kernels.rk4_segment(
            phi.view(np.float64), t0, span / nsteps, nsteps, sch._code, sch.tau, energies, hop, q, n, e_start, e_end
        )
        psi = record(k, t1)
    return Trajectory(samples, psi, snapshots)
