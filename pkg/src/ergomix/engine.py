"""Exploration loop: travel/dwell phases, timing conditions, and logging.

A run is one deterministic episode. At step 0 the agents deposit at their
initial positions, the first target hole is chosen by the distance-over-
weight rule, and a greedy nearest-neighbor tour is frozen. Every later step,
in fixed agent order: blend weight r and nearest deficit point g are read
from the previous step's fields, positions advance under the blended law
(clamped into the domain), deposits fold into the running average, and the
coverage metric V is logged.

Phases. A segment is one TRAVEL phase plus the following DWELL phase at a
single target hole. Arrival (TRAVEL -> DWELL) happens the step every agent's
entry latch is set. Departure (DWELL -> TRAVEL toward the next tour hole)
happens at the first step where the team-average dwell time exceeds both
the contraction bound (a / (1 - a)) * h_mean, frozen at dwell start, and the
first dwell duration at which the hole-error condition held. The cycle
counter increments whenever the team arrives at the tour's start hole again.

During travel the nearest-point target is restricted to deficit cells inside
the current target hole, so agents do not get re-attracted to the hole they
just left. Everything the run produces - metric rows, trajectories, segment
records, snapshots - is collected in a RunResult.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .control import ControlConfig, ControlMode, blend_r, blended_step
from .ergodic import (
    DepartureConfig,
    ErgodicState,
    SegmentTimers,
    departure_threshold,
    deposit_step,
    required_dwell,
)
from .errors import OutOfDomainError, StallError
from .grid import GridSpec, Point, ScalarField
from .reference import (
    DEFAULT_KAPPA,
    MixtureComponent,
    ReferenceMixture,
    Tour,
    build_reference,
    build_tour,
    hole_masks,
    initial_target,
    omega2_mask,
)

PHASE_TRAVEL = "TRAVEL"
PHASE_DWELL = "DWELL"

METRIC_COLUMNS = (
    "k",
    "V_k",
    "phase",
    "target_hole",
    "cycle",
    "a",
    "h_mean",
    "h_prime_mean",
    "hole_error",
)


@dataclass
class SimConfig:
    """Everything that determines a run. No hidden state, no RNG."""

    grid: GridSpec
    components: list[MixtureComponent]
    positions: list[Point]
    sigma_r: np.ndarray
    control: ControlConfig = dataclass_field(default_factory=ControlConfig)
    departure: DepartureConfig = dataclass_field(default_factory=DepartureConfig)
    kappa: float = DEFAULT_KAPPA
    max_steps: int = 10000
    snapshot_every: Optional[int] = None
    output_dir: Optional[str] = None
    stall_budget: Optional[int] = None

    def __post_init__(self):
        self.sigma_r = np.asarray(self.sigma_r, dtype=np.float64)
        self.positions = [Point(float(p[0]), float(p[1])) for p in self.positions]
        if len(self.positions) == 0:
            raise ValueError("need at least one agent")
        for p in self.positions:
            if not self.grid.contains(p):
                raise OutOfDomainError(f"initial position {p} outside domain")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ValueError("snapshot_every must be a positive step count")

    @property
    def n_agents(self) -> int:
        return len(self.positions)

    def effective_stall_budget(self) -> int:
        if self.stall_budget is not None:
            return self.stall_budget
        diag = math.hypot(self.grid.Lx, self.grid.Ly)
        return int(math.ceil(10.0 * diag / self.control.v_max))


@dataclass
class SegmentRecord:
    """One completed TRAVEL + DWELL episode at a single target hole."""

    index: int
    target_hole: int
    cycle: int
    k_travel_start: int
    k_dwell_start: int
    k_departure: int
    h_mean: float
    h_prime_mean: float
    a: float
    h_prime_min: float
    h_error_first_met: float
    threshold: float
    V_travel_start: float
    V_dwell_start: float
    V_departure: float


@dataclass
class RunResult:
    """Full record of one run; series have max_steps + 1 entries."""

    config: SimConfig
    V: np.ndarray
    a: np.ndarray
    h_mean: np.ndarray
    h_prime_mean: np.ndarray
    hole_error: np.ndarray
    phase: np.ndarray  # uint8, 0 = TRAVEL, 1 = DWELL
    target_hole: np.ndarray
    cycle: np.ndarray
    trajectories: np.ndarray  # (steps + 1, n_agents, 2)
    segments: list[SegmentRecord]
    final_state: ErgodicState
    rho_star: ScalarField
    snapshots: dict[int, ScalarField]
    integral_V: float
    completed_steps: int

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.V.size)

    def phase_name(self, k: int) -> str:
        return PHASE_DWELL if self.phase[k] else PHASE_TRAVEL

    def final_V(self) -> float:
        return float(self.V[-1])


def integral_of_V(v_series) -> float:
    """Left Riemann sum of the V series with unit step width."""
    v = np.asarray(v_series, dtype=np.float64)
    if v.size < 1:
        raise ValueError("need at least one metric row")
    return float(v[:-1].sum())


class Engine:
    """Owns the mutable state of one run; not reusable after run()."""

    def __init__(self, config: SimConfig):
        self.config = config
        spec = config.grid
        self.spec = spec
        self.mixture: ReferenceMixture = build_reference(config.components, spec)
        self.rho_star = self.mixture.rho_star
        self._rho_star_flat = np.ascontiguousarray(self.rho_star.values.ravel())
        self.holes = hole_masks(self.mixture, spec, config.kappa)
        self._hole_idx = [
            np.flatnonzero(h.mask.ravel()).astype(np.intp) for h in self.holes
        ]
        self._hole_cx = []
        self._hole_cy = []
        for idx in self._hole_idx:
            cy, cx = np.divmod(idx, spec.nx)
            self._hole_cx.append(np.ascontiguousarray(spec.centers_x[cx]))
            self._hole_cy.append(np.ascontiguousarray(spec.centers_y[cy]))
        self._omega2_idx = np.flatnonzero(omega2_mask(self.holes).ravel()).astype(
            np.intp
        )

        self.positions = np.asarray(config.positions, dtype=np.float64)
        self.state = ErgodicState.empty(spec, config.n_agents)
        self.k = -1

        self.target = initial_target(self.mixture, config.positions)
        self.tour: Tour = build_tour(self.mixture, self.target)
        self.phase = PHASE_TRAVEL
        self.cycle = 0
        self._start_dwells_seen = 0
        self.timers = SegmentTimers.fresh(config.n_agents)
        self.segments: list[SegmentRecord] = []
        self._seg_index = 0
        self._seg_travel_start = 0
        self._seg_travel_steps = 0
        self._seg_dwell_start = -1
        self._seg_a = math.nan
        self._seg_h_mean = math.nan
        self._seg_h_prime_min = math.nan
        self._seg_threshold = math.nan
        self._seg_h_err_met: Optional[float] = None

        rows = config.max_steps + 1
        self._V = np.empty(rows)
        self._a = np.empty(rows)
        self._h_mean = np.empty(rows)
        self._h_prime_mean = np.empty(rows)
        self._hole_error = np.empty(rows)
        self._phase_log = np.empty(rows, dtype=np.uint8)
        self._target_log = np.empty(rows, dtype=np.int32)
        self._cycle_log = np.empty(rows, dtype=np.int32)
        self._traj = np.empty((rows, config.n_agents, 2))
        self.snapshots: dict[int, ScalarField] = {}
        self._phi_flat = np.empty(spec.nx * spec.ny)
        self._stall_budget = config.effective_stall_budget()

    # -- per-step pieces -------------------------------------------------

    def _nearest_in_target(self, p: Point) -> Optional[Point]:
        """Nearest negative-phi cell center inside the target hole's mask."""
        idx = self._hole_idx[self.target]
        vals = np.ascontiguousarray(self._phi_flat[idx])
        pos = kernels.nearest_negative_among(
            vals,
            self._hole_cx[self.target],
            self._hole_cy[self.target],
            float(p[0]),
            float(p[1]),
        )
        if pos < 0:
            return None
        iy, ix = divmod(int(idx[pos]), self.spec.nx)
        return self.spec.cell_center(ix, iy)

    def _nearest_global(self, p: Point) -> Optional[Point]:
        """Nearest negative-phi cell center anywhere in the domain."""
        flat = kernels.nearest_negative_scan(
            self._phi_flat.reshape(self.spec.ny, self.spec.nx),
            self.spec.centers_x,
            self.spec.centers_y,
            float(p[0]),
            float(p[1]),
        )
        if flat < 0:
            return None
        iy, ix = divmod(int(flat), self.spec.nx)
        return self.spec.cell_center(ix, iy)

    def _move_agents(self) -> None:
        """Advance every agent one step using the previous step's fields."""
        cfg = self.config.control
        phi_field = ScalarField(self.spec, self._phi_flat.reshape(self.spec.ny, self.spec.nx))
        rho_vals = self.state.rho.values
        star_vals = self.rho_star.values
        traveling = self.phase == PHASE_TRAVEL
        for j in range(self.positions.shape[0]):
            p = Point(self.positions[j, 0], self.positions[j, 1])
            if cfg.mode is ControlMode.NEAREST_ONLY:
                r = 1.0
            elif cfg.mode is ControlMode.GRADIENT_ONLY:
                r = 0.0
            elif traveling:
                # Shortest-path travel between holes: pure target pursuit,
                # otherwise the deficit ring around the hole just left drags
                # the gradient term backward and strands agents.
                r = 1.0
            else:
                ix, iy = self.spec.cell_of(p)
                r = blend_r(float(rho_vals[iy, ix]), float(star_vals[iy, ix]))
            if traveling:
                # Travel steers at deficit inside the target hole so agents
                # are not re-attracted to the hole they just left; with a
                # saturated target the shortest path aims at its mean.
                g = self._nearest_in_target(p)
                if g is None:
                    mean = self.mixture.components[self.target].mean
                    g = self.spec.cell_center(*self.spec.cell_of(mean))
            else:
                g = self._nearest_global(p)
            new = blended_step(p, g, phi_field, r, cfg.v_max, cfg.gradient_sign)
            self.positions[j, 0] = new.x
            self.positions[j, 1] = new.y

    def _hole_error_flat(self, hole: int) -> float:
        return (
            kernels.masked_abs_sum(self._phi_flat, self._hole_idx[hole])
            * self.spec.delta
        )

    def _begin_dwell(self, k: int, a_now: float) -> None:
        if self.target == self.tour.start:
            self._start_dwells_seen += 1
            if self._start_dwells_seen > 1:
                self.cycle += 1
        self.phase = PHASE_DWELL
        self._seg_dwell_start = k
        self._seg_a = a_now
        self._seg_h_mean = self.timers.h_mean
        self._seg_h_prime_min = required_dwell(a_now, self._seg_h_mean)
        self._seg_threshold = departure_threshold(self.cycle, self.config.departure)
        self._seg_h_err_met = None

    def _try_depart(self, k: int, hole_err: float) -> bool:
        rule = self.config.departure.rule
        hp_mean = self.timers.h_prime_mean
        if self._seg_h_err_met is None and rule.met(hole_err, self._seg_threshold):
            self._seg_h_err_met = hp_mean
        if self._seg_h_err_met is None:
            return False
        if hp_mean <= max(self._seg_h_prime_min, self._seg_h_err_met):
            return False
        self.segments.append(
            SegmentRecord(
                index=self._seg_index,
                target_hole=self.target,
                cycle=self.cycle,
                k_travel_start=self._seg_travel_start,
                k_dwell_start=self._seg_dwell_start,
                k_departure=k,
                h_mean=self._seg_h_mean,
                h_prime_mean=hp_mean,
                a=self._seg_a,
                h_prime_min=self._seg_h_prime_min,
                h_error_first_met=self._seg_h_err_met,
                threshold=self._seg_threshold,
                V_travel_start=float(self._V[self._seg_travel_start]),
                V_dwell_start=float(self._V[self._seg_dwell_start]),
                V_departure=float(self._V[k]),
            )
        )
        self.target = self.tour.next_after(self.target)
        self.phase = PHASE_TRAVEL
        self.timers = SegmentTimers.fresh(self.config.n_agents)
        self._seg_index += 1
        self._seg_travel_start = k + 1
        self._seg_travel_steps = 0
        self._seg_dwell_start = -1
        return True

    def step(self) -> None:
        """Advance the run by one step (movement, deposit, log, phasing)."""
        if self.k >= self.config.max_steps:
            raise RuntimeError("run already completed")
        k = self.k + 1
        if k > 0:
            self._move_agents()
        self.state = deposit_step(self.state, self.positions, self.config.sigma_r)
        self.k = k

        np.subtract(
            self.state.rho.values.ravel(), self._rho_star_flat, out=self._phi_flat
        )
        v_now = kernels.abs_sum(self._phi_flat) * self.spec.delta
        a_now = (
            kernels.masked_sum(self.state.rho.values.ravel(), self._omega2_idx)
            * self.spec.delta
        )
        self._V[k] = v_now
        self._a[k] = a_now

        mask = self.holes[self.target].mask
        inside = np.zeros(self.positions.shape[0], dtype=bool)
        for j in range(self.positions.shape[0]):
            ix, iy = self.spec.cell_of(Point(self.positions[j, 0], self.positions[j, 1]))
            inside[j] = mask[iy, ix]
        self.timers.update(inside)

        if self.phase == PHASE_TRAVEL and self.timers.all_entered():
            self._begin_dwell(k, a_now)

        hole_err = self._hole_error_flat(self.target)
        if self.phase == PHASE_DWELL:
            if self._try_depart(k, hole_err):
                hole_err = self._hole_error_flat(self.target)
        else:
            self._seg_travel_steps += 1
            if self._seg_travel_steps > self._stall_budget:
                self._log_row(k, hole_err)
                raise StallError(
                    f"travel toward hole {self.target} exceeded "
                    f"{self._stall_budget} steps at k={k}",
                    result=self._build_result(k),
                )

        self._log_row(k, hole_err)
        every = self.config.snapshot_every
        if every is not None and k % every == 0:
            self.snapshots[k] = self.state.rho.copy()

    def _log_row(self, k: int, hole_err: float) -> None:
        self._h_mean[k] = self.timers.h_mean
        self._h_prime_mean[k] = self.timers.h_prime_mean
        self._hole_error[k] = hole_err
        self._phase_log[k] = 1 if self.phase == PHASE_DWELL else 0
        self._target_log[k] = self.target
        self._cycle_log[k] = self.cycle
        self._traj[k] = self.positions

    def _build_result(self, last_k: int) -> RunResult:
        n = last_k + 1
        return RunResult(
            config=self.config,
            V=self._V[:n].copy(),
            a=self._a[:n].copy(),
            h_mean=self._h_mean[:n].copy(),
            h_prime_mean=self._h_prime_mean[:n].copy(),
            hole_error=self._hole_error[:n].copy(),
            phase=self._phase_log[:n].copy(),
            target_hole=self._target_log[:n].copy(),
            cycle=self._cycle_log[:n].copy(),
            trajectories=self._traj[:n].copy(),
            segments=list(self.segments),
            final_state=self.state,
            rho_star=self.rho_star,
            snapshots=dict(self.snapshots),
            integral_V=integral_of_V(self._V[:n]),
            completed_steps=last_k,
        )

    def run(self) -> RunResult:
        while self.k < self.config.max_steps:
            self.step()
        return self._build_result(self.config.max_steps)


def run(config: SimConfig) -> RunResult:
    """Execute a full run for the given configuration."""
    return Engine(config).run()
