"""Figure-reproduction harness: time series, U sweeps and the theta x U map.

Maximum purity is taken over a fine tracking grid (every ``peak_stride``
steps, default 0.02/J) on top of the coarse record grid, because the
transient purity bursts of symmetric inputs last only a few tenths of 1/J.
The late-time average uses the record grid only.

The map is computed one U column at a time.  Each column evolves the
exchange-symmetric and antisymmetric parts of the input separately; every
theta in the column is then a fixed linear combination of the two, and its
purity follows from three Gram matrices.  This is exact up to roundoff and
costs two trajectories per column instead of one per cell.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .chain import ChainSpec, InitialCondition, TwoParticleState, build_initial_state, sector_states
from .errors import InputError, NormDriftError, NumericalFailure
from .observables import correlation_map
from .propagator import EvolutionTrace, PropagatorConfig, _Stepper, _warn_large_u, evolve, step_count

log = logging.getLogger(__name__)

DEFAULT_PEAK_STRIDE = 2
PEAK_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Preset:
    n_sites: int
    t_final: float
    dt: float
    order: int
    n_theta: int
    n_u: int
    u_max: float = 20.0

    @property
    def m0(self) -> int:
        return self.n_sites // 2

    @property
    def n0(self) -> int:
        return self.n_sites // 2 + 1

    def theta_grid(self) -> tuple[float, ...]:
        return tuple(np.linspace(0.0, math.pi, self.n_theta))

    def u_grid(self) -> tuple[float, ...]:
        return tuple(np.linspace(0.0, self.u_max, self.n_u))


PRESETS = {
    "paper": Preset(n_sites=300, t_final=70.0, dt=0.01, order=20, n_theta=33, n_u=41),
    "desk": Preset(n_sites=201, t_final=40.0, dt=0.01, order=20, n_theta=17, n_u=21),
}


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class SweepSpec:
    chain: ChainSpec
    ic_template: InitialCondition
    u_grid: tuple[float, ...]
    theta_grid: tuple[float, ...]
    propagation: PropagatorConfig = field(default_factory=PropagatorConfig)
    t_final: float = 70.0
    late_window_fraction: float = 0.2
    peak_stride: int = DEFAULT_PEAK_STRIDE

    def __post_init__(self):
        object.__setattr__(self, "u_grid", tuple(float(u) for u in self.u_grid))
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        for key, grid in (("u_grid", self.u_grid), ("theta_grid", self.theta_grid)):
            if not grid:
                raise InputError(f"{key} is empty", key)
            if not _strictly_increasing(grid):
                raise InputError(f"{key} must be strictly increasing", key)
        if self.u_grid[0] < 0:
            raise InputError("u_grid values must be >= 0", "u_grid")
        if self.theta_grid[0] < -1e-12 or self.theta_grid[-1] > math.pi + 1e-12:
            raise InputError("theta_grid values must lie in [0, pi]", "theta_grid")
        if not (math.isfinite(self.t_final) and self.t_final > 0):
            raise InputError(f"t_final must be > 0, got {self.t_final!r}", "t_final")
        if not 0 < self.late_window_fraction <= 1:
            raise InputError("late_window_fraction must lie in (0, 1]", "late_window_fraction")
        if int(self.peak_stride) != self.peak_stride or self.peak_stride < 1:
            raise InputError("peak_stride must be an integer >= 1", "peak_stride")
        # theta is overridden per point; only the sites are checked here
        self.ic_template.with_theta(0.0).validate(self.chain.n_sites)


@dataclass
class USweepRow:
    u: float
    gamma_max: float
    t_at_max: float
    gamma_late_avg: float
    gamma_slice: float | None = None
    error: str | None = None


@dataclass
class MapCell:
    theta: float
    u: float
    gamma_max: float
    t_at_max: float
    gamma_late_avg: float
    error: str | None = None


@dataclass
class MapResult:
    cells: list[MapCell]
    theta_grid: tuple[float, ...]
    u_grid: tuple[float, ...]

    def gamma_max_grid(self) -> np.ndarray:
        """``(len(theta_grid), len(u_grid))`` array of gamma_max."""
        grid = np.full((len(self.theta_grid), len(self.u_grid)), np.nan)
        t_index = {t: i for i, t in enumerate(self.theta_grid)}
        u_index = {u: j for j, u in enumerate(self.u_grid)}
        for c in self.cells:
            grid[t_index[c.theta], u_index[c.u]] = c.gamma_max
        return grid

    @property
    def failed(self) -> list[MapCell]:
        return [c for c in self.cells if c.error is not None]


# --- purity tracking ------------------------------------------------------


def purity_of_amplitudes(f: np.ndarray) -> float:
    rho = f @ f.conj().T
    return float(np.sum(rho.real**2 + rho.imag**2))


@dataclass
class _Schedule:
    """Which steps get a purity evaluation and which belong to the record grid."""

    n_steps: int
    sample_stride: int
    peak_stride: int
    slice_step: int | None = None

    def is_sample(self, k: int) -> bool:
        return k % self.sample_stride == 0 or k == self.n_steps

    def is_tracked(self, k: int) -> bool:
        return k % self.peak_stride == 0 or self.is_sample(k) or k == self.slice_step


@dataclass
class PuritySeries:
    dt: float
    steps: list[int] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)
    sample: list[bool] = field(default_factory=list)

    def add(self, k: int, gamma: float, sample: bool) -> None:
        self.steps.append(k)
        self.gamma.append(gamma)
        self.sample.append(sample)

    def maximum(self) -> tuple[float, float]:
        """Largest purity and the first time it is reached.

        Values within ``PEAK_TIE_TOL`` of the maximum count as ties so that a
        flat trace reports t = 0 instead of a roundoff-selected time.
        """
        g = np.asarray(self.gamma)
        g_max = float(g.max())
        i = int(np.argmax(g >= g_max - PEAK_TIE_TOL))
        return g_max, self.steps[i] * self.dt

    def late_average(self, fraction: float) -> float:
        t_end = self.steps[-1] * self.dt
        t_start = t_end * (1.0 - fraction)
        vals = [g for k, g, s in zip(self.steps, self.gamma, self.sample)
                if s and k * self.dt >= t_start - 1e-9]
        return float(np.mean(vals))

    def at_step(self, k: int) -> float:
        return self.gamma[self.steps.index(k)]


def late_time_average(trace: EvolutionTrace, fraction: float = 0.2) -> float:
    """Mean gamma_a over records in the trailing ``fraction`` of the run."""
    t_start = trace.t_final * (1.0 - fraction)
    vals = [r.gamma_a for r in trace.records if r.t >= t_start - 1e-9]
    return float(np.mean(vals))


def _track_direct(
    spec: ChainSpec, state0: TwoParticleState, cfg: PropagatorConfig, t_final: float,
    peak_stride: int, slice_time: float | None = None,
) -> PuritySeries:
    n_steps = step_count(t_final, cfg.dt)
    slice_step = None if slice_time is None else _slice_step(slice_time, cfg.dt, n_steps)
    sched = _Schedule(n_steps, cfg.sample_stride, peak_stride, slice_step)
    series = PuritySeries(cfg.dt)
    series.add(0, purity_of_amplitudes(state0.matrix), True)

    def monitor(k: int, f: np.ndarray) -> None:
        if sched.is_tracked(k):
            series.add(k, purity_of_amplitudes(f), sched.is_sample(k))

    evolve(spec, state0, cfg, t_final, observer=lambda t, s: None, monitor=monitor)
    return series


def _slice_step(slice_time: float, dt: float, n_steps: int) -> int:
    k = round(slice_time / dt)
    if not 0 <= k <= n_steps:
        raise InputError(f"slice_time={slice_time} outside [0, t_final]", "slice_time")
    return k


class _SectorGram:
    """Purities of a_j F_sym + b_j F_anti for many (a_j, b_j) from three Gram matrices."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.alpha = np.abs(a) ** 2
        self.beta = np.abs(b) ** 2
        self.gamma = a * np.conj(b)

    def purities(self, fs: np.ndarray, fa: np.ndarray | None) -> np.ndarray:
        # tr(XY) for Hermitian X is vdot(X, Y); only tr(CC) needs a transpose
        A = fs @ fs.conj().T
        s_aa = np.vdot(A, A).real
        if fa is None:
            return self.alpha**2 * s_aa
        B = fa @ fa.conj().T
        C = fs @ fa.conj().T
        s_bb = np.vdot(B, B).real
        s_ab = np.vdot(A, B).real
        s_ac = np.vdot(A, C)
        s_bc = np.vdot(B, C)
        s_cc = np.sum(C * C.T)
        s_ccd = np.vdot(C, C).real
        al, be, ga = self.alpha, self.beta, self.gamma
        return (
            al**2 * s_aa
            + be**2 * s_bb
            + 2.0 * al * be * s_ab
            + 2.0 * np.real(ga**2 * s_cc)
            + 4.0 * al * np.real(ga * s_ac)
            + 4.0 * be * np.real(ga * s_bc)
            + 2.0 * np.abs(ga) ** 2 * s_ccd
        )


def _track_sector_column(
    spec: ChainSpec, ic: InitialCondition, thetas: Sequence[float], cfg: PropagatorConfig,
    t_final: float, peak_stride: int,
) -> list[PuritySeries]:
    weights = [sector_states(spec, ic.with_theta(th)) for th in thetas]
    _, psi_sym, _, psi_anti = weights[0]
    a = np.array([w[0] for w in weights], dtype=np.complex128)
    b = np.array([w[2] for w in weights], dtype=np.complex128)
    if psi_anti is not None and not np.any(b):
        psi_anti = None
    gram = _SectorGram(a, b)

    n_steps = step_count(t_final, cfg.dt)
    sched = _Schedule(n_steps, cfg.sample_stride, peak_stride)
    _warn_large_u(spec, cfg.dt)
    sym = _Stepper(spec, psi_sym, cfg.dt, cfg.order)
    anti = None if psi_anti is None else _Stepper(spec, psi_anti, cfg.dt, cfg.order)
    series = [PuritySeries(cfg.dt) for _ in thetas]

    def record(k: int) -> None:
        vals = gram.purities(sym.f, None if anti is None else anti.f)
        for s, g in zip(series, vals):
            s.add(k, float(g), sched.is_sample(k))

    record(0)
    for k in range(1, n_steps + 1):
        for stepper in (sym, anti):
            if stepper is None:
                continue
            drift = abs(stepper.drift(stepper.step()))
            if drift > cfg.norm_abort_threshold:
                raise NormDriftError(k, drift, cfg.norm_abort_threshold)
        if sched.is_tracked(k):
            record(k)
    return series


# --- tasks (top-level so they pickle for worker processes) -----------------


@dataclass(frozen=True)
class _CellTask:
    spec: ChainSpec
    ic: InitialCondition
    cfg: PropagatorConfig
    t_final: float
    late_fraction: float
    peak_stride: int
    slice_time: float | None = None


def _run_u_cell(task: _CellTask) -> USweepRow:
    u = task.spec.interaction
    try:
        series = _track_direct(
            task.spec, build_initial_state(task.spec, task.ic), task.cfg, task.t_final,
            task.peak_stride, task.slice_time,
        )
    except NumericalFailure as exc:
        log.error("U=%g failed: %s", u, exc)
        return USweepRow(u, math.nan, math.nan, math.nan,
                         None if task.slice_time is None else math.nan, error=str(exc))
    g_max, t_max = series.maximum()
    g_slice = None
    if task.slice_time is not None:
        g_slice = series.at_step(_slice_step(task.slice_time, task.cfg.dt, series.steps[-1]))
    return USweepRow(u, g_max, t_max, series.late_average(task.late_fraction), g_slice)


def _run_map_cell(task: _CellTask) -> MapCell:
    row = _run_u_cell(task)
    return MapCell(task.ic.theta, row.u, row.gamma_max, row.t_at_max, row.gamma_late_avg, row.error)


@dataclass(frozen=True)
class _ColumnTask:
    spec: ChainSpec
    ic: InitialCondition
    thetas: tuple[float, ...]
    cfg: PropagatorConfig
    t_final: float
    late_fraction: float
    peak_stride: int


def _run_map_column(task: _ColumnTask) -> list[MapCell]:
    u = task.spec.interaction
    cells: list[MapCell] = []
    ok_thetas, bad = [], {}
    for th in task.thetas:
        try:
            task.ic.with_theta(th).validate(task.spec.n_sites)
            ok_thetas.append(th)
        except InputError as exc:
            bad[th] = str(exc)
    results: dict[float, MapCell] = {}
    if ok_thetas:
        try:
            series = _track_sector_column(
                task.spec, task.ic, ok_thetas, task.cfg, task.t_final, task.peak_stride
            )
            for th, s in zip(ok_thetas, series):
                g_max, t_max = s.maximum()
                results[th] = MapCell(th, u, g_max, t_max, s.late_average(task.late_fraction))
        except NumericalFailure as exc:
            log.error("U=%g column failed: %s", u, exc)
            bad.update({th: str(exc) for th in ok_thetas})
    for th in task.thetas:
        if th in bad:
            cells.append(MapCell(th, u, math.nan, math.nan, math.nan, error=bad[th]))
        else:
            cells.append(results[th])
    return cells


def default_workers() -> int:
    return os.cpu_count() or 1


def _pool_map(fn: Callable, tasks: Iterable, workers: int | None) -> list:
    tasks = list(tasks)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        out = []
        for i, t in enumerate(tasks, 1):
            out.append(fn(t))
            log.info("finished task %d/%d", i, len(tasks))
        return out
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# --- public operations -----------------------------------------------------


def run_timeseries(
    spec: ChainSpec, ic: InitialCondition, cfg: PropagatorConfig, t_final: float
) -> EvolutionTrace:
    """Full observable trace on the record grid."""
    return evolve(spec, build_initial_state(spec, ic), cfg, t_final)


def run_u_sweep(
    sweep: SweepSpec,
    fixed_theta: float,
    workers: int | None = 1,
    slice_time: float | None = None,
) -> list[USweepRow]:
    """One trajectory per U at a fixed input phase."""
    ic = sweep.ic_template.with_theta(fixed_theta)
    ic.validate(sweep.chain.n_sites)
    tasks = [
        _CellTask(sweep.chain.with_interaction(u), ic, sweep.propagation, sweep.t_final,
                  sweep.late_window_fraction, sweep.peak_stride, slice_time)
        for u in sweep.u_grid
    ]
    log.info("U sweep: %d trajectories at theta=%g", len(tasks), fixed_theta)
    return _pool_map(_run_u_cell, tasks, workers)


def run_max_purity_map(
    sweep: SweepSpec, workers: int | None = 1, method: str = "sector"
) -> MapResult:
    """gamma_max, its time and the late-time mean for every (theta, U) cell.

    ``method="sector"`` evolves the two exchange sectors once per U column;
    ``method="direct"`` evolves every cell on its own.  Both give the same
    values up to roundoff.  Cells are ordered theta-major, U-minor.
    """
    n_cells = len(sweep.theta_grid) * len(sweep.u_grid)
    log.info("max-purity map: %d cells (%d theta x %d U), method=%s",
             n_cells, len(sweep.theta_grid), len(sweep.u_grid), method)
    if method == "sector":
        tasks = [
            _ColumnTask(sweep.chain.with_interaction(u), sweep.ic_template, sweep.theta_grid,
                        sweep.propagation, sweep.t_final, sweep.late_window_fraction,
                        sweep.peak_stride)
            for u in sweep.u_grid
        ]
        columns = _pool_map(_run_map_column, tasks, workers)
        by_key = {(c.theta, c.u): c for col in columns for c in col}
    elif method == "direct":
        tasks = []
        bad: dict[tuple[float, float], MapCell] = {}
        for th in sweep.theta_grid:
            ic = sweep.ic_template.with_theta(th)
            for u in sweep.u_grid:
                try:
                    ic.validate(sweep.chain.n_sites)
                except InputError as exc:
                    bad[(th, u)] = MapCell(th, u, math.nan, math.nan, math.nan, str(exc))
                    continue
                tasks.append(_CellTask(sweep.chain.with_interaction(u), ic, sweep.propagation,
                                       sweep.t_final, sweep.late_window_fraction,
                                       sweep.peak_stride))
        by_key = {(c.theta, c.u): c for c in _pool_map(_run_map_cell, tasks, workers)}
        by_key.update(bad)
    else:
        raise InputError(f"unknown map method {method!r}", "method")
    cells = [by_key[(th, u)] for th in sweep.theta_grid for u in sweep.u_grid]
    return MapResult(cells, sweep.theta_grid, sweep.u_grid)


def phase_trajectory(trace: EvolutionTrace) -> list[tuple[float, float, float]]:
    """``(gamma_diag, gamma_a, t)`` points of a trace, in time order."""
    if not trace.records:
        raise InputError("empty trace")
    return [(r.gamma_diag, r.gamma_a, r.t) for r in trace.records]


@dataclass
class CorrelationSnapshot:
    probs: np.ndarray
    t: float


def correlation_snapshot(
    spec: ChainSpec, ic: InitialCondition, cfg: PropagatorConfig, t: float
) -> CorrelationSnapshot:
    """Joint occupation probabilities ``|f[m, n](t)|^2``."""
    state = build_initial_state(spec, ic)
    if t == 0:
        return CorrelationSnapshot(correlation_map(state), 0.0)
    trace = evolve(spec, state, replace(cfg, sample_stride=10**9), t, observer=lambda t, s: None)
    return CorrelationSnapshot(correlation_map(trace.final_state), trace.t_final)
