"""Time-averaged deposit distribution and dwell-time accounting.

Each step every agent lays down a unit-mass narrow Gaussian at its position.
The running distribution rho_k is the average of all deposits over agents
and steps 0..k, maintained by the recursion

    rho_k = (k * rho_{k-1} + mean_j f_k^j) / (k + 1)

so its discrete integral stays exactly 1. The error field is
phi_k = rho_k - rho*, and the coverage metric V_k = integral |phi_k| lies in
[0, 2], reaching 0 when the deposit average matches the reference.

The dwell-time results quantify how V_k moves while the team travels through
the free region for h steps (carrying deficit-region mass fraction
a = integral_{Omega_2} rho_k):

    travel rise of V:        2 h a / (k + h + 1)
    deficit mass after h:    (k + 1) a / (k + h + 1)
    dwell needed to win:     h' > a / (1 - a) * h

Team-level averages are taken over sorted per-agent values so that agent
relabeling cannot change any float result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import (
    DegenerateDepositError,
    DegenerateMassError,
    DimensionError,
    OutOfDomainError,
)
from .grid import GridSpec, Point, ScalarField, gaussian_window
from .reference import HoleRegion


def team_mean(values) -> float:
    """Mean over agents, summed in sorted order (label-permutation safe)."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    return float(arr.sum()) / arr.size


@dataclass
class ErgodicState:
    """Deposit average after steps 0..k (k = -1 before any deposit)."""

    k: int
    rho: ScalarField
    n_agents: int

    @classmethod
    def empty(cls, spec: GridSpec, n_agents: int) -> "ErgodicState":
        return cls(-1, ScalarField.zeros(spec), n_agents)

    def advance(self, mean_deposit: ScalarField) -> "ErgodicState":
        """Fold one step's team-averaged unit deposit into the average."""
        if mean_deposit.spec != self.rho.spec:
            raise DimensionError("deposit grid does not match state grid")
        n = self.k + 1
        vals = (n * self.rho.values + mean_deposit.values) / (n + 1.0)
        return ErgodicState(self.k + 1, ScalarField(self.rho.spec, vals), self.n_agents)


def deposit_step(
    state: ErgodicState, positions: Sequence[Point], sigma_r
) -> ErgodicState:
    """Deposit one unit-normalized narrow Gaussian per agent and average.

    Equivalent to ``state.advance(mean of normalized deposits)`` but fused:
    only the non-underflowing window of each Gaussian is touched.
    Contributions accumulate in lexicographic (x, y) position order, so the
    result is independent of agent labeling bit for bit.
    """
    spec = state.rho.spec
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be a sequence of (x, y) pairs")
    for x, y in pos:
        if not spec.contains(Point(x, y)):
            raise OutOfDomainError(f"deposit position ({x}, {y}) outside domain")
    n = state.k + 1
    n_agents = pos.shape[0]
    new_vals = state.rho.values * (n / (n + 1.0))
    coef = 1.0 / (n_agents * (n + 1.0))
    for j in np.lexsort((pos[:, 1], pos[:, 0])):
        box, ix0, ix1, iy0, iy1 = gaussian_window(
            spec, Point(pos[j, 0], pos[j, 1]), sigma_r
        )
        total = float(box.sum()) * spec.delta
        if not total > 0.0:
            raise DegenerateDepositError(
                f"deposit at ({pos[j, 0]}, {pos[j, 1]}) has zero grid mass"
            )
        new_vals[iy0:iy1, ix0:ix1] += box * (coef / total)
    return ErgodicState(state.k + 1, ScalarField(spec, new_vals), n_agents)


def phi(state: ErgodicState, rho_star: ScalarField) -> ScalarField:
    """Pointwise error field rho_k - rho*."""
    if rho_star.spec != state.rho.spec:
        raise DimensionError("reference grid does not match state grid")
    return ScalarField(state.rho.spec, state.rho.values - rho_star.values)


def ergodic_V(state: ErgodicState, rho_star: ScalarField) -> float:
    """Integral of |rho_k - rho*| over the domain; bounded by [0, 2]."""
    if rho_star.spec != state.rho.spec:
        raise DimensionError("reference grid does not match state grid")
    diff = state.rho.values - rho_star.values
    return kernels.abs_sum(diff.ravel()) * state.rho.spec.delta


def delta_rho(state: ErgodicState, mean_deposits: Sequence[ScalarField]) -> ScalarField:
    """Change of the average after folding in h more team-mean unit deposits.

    Closed form: (sum of deposits - h * rho_k) / (k + h + 1). Equals
    rho_{k+h} - rho_k for the recursion above.
    """
    h = len(mean_deposits)
    if h < 1:
        raise ValueError("need at least one future deposit")
    acc = np.zeros_like(state.rho.values)
    for dep in mean_deposits:
        if dep.spec != state.rho.spec:
            raise DimensionError("deposit grid does not match state grid")
        acc += dep.values
    vals = (acc - h * state.rho.values) / (state.k + h + 1.0)
    return ScalarField(state.rho.spec, vals)


def required_dwell(a: float, h: float) -> float:
    """Dwell steps that must be strictly exceeded: (a / (1 - a)) * h.

    ``a`` is the deficit-region mass fraction at dwell start; ``h`` the
    average travel steps just spent.
    """
    if a < 0.0:
        raise ValueError(f"mass fraction a must be non-negative, got {a}")
    if a >= 1.0:
        raise DegenerateMassError(f"all mass inside the hole region (a={a})")
    if h < 0.0:
        raise ValueError(f"travel time h must be non-negative, got {h}")
    return (a / (1.0 - a)) * h


def predict_travel_increment(k: int, h: float, a: float) -> float:
    """Rise of V over h mass-free travel steps: 2 h a / (k + h + 1)."""
    return 2.0 * h * a / (k + h + 1.0)


def predict_omega2_mass(k: int, h: float, a: float) -> float:
    """Deficit-region mass after h mass-free steps: (k + 1) a / (k + h + 1)."""
    return (k + 1.0) * a / (k + h + 1.0)


class DepartureRule(enum.Enum):
    """How the hole error compares against the departure threshold.

    DEFICIT_BELOW reads the departure condition as "the remaining error in
    the target hole fell below the threshold" (holes get filled more
    completely as the threshold decays). LITERAL_ABOVE keeps the opposite
    inequality for comparison experiments.
    """

    DEFICIT_BELOW = "deficit_below"
    LITERAL_ABOVE = "literal_above"

    def met(self, hole_err: float, threshold: float) -> bool:
        if self is DepartureRule.DEFICIT_BELOW:
            return hole_err < threshold
        return hole_err > threshold


@dataclass
class DepartureConfig:
    beta: float = 0.1
    gamma: float = 0.3
    rule: DepartureRule = DepartureRule.DEFICIT_BELOW

    def __post_init__(self):
        if not (self.beta > 0.0 and self.gamma > 0.0):
            raise ValueError(
                f"beta and gamma must be positive, got {self.beta}, {self.gamma}"
            )


def departure_threshold(cycle: int, cfg: DepartureConfig) -> float:
    """Exponentially decaying hole-error threshold beta * exp(-gamma * cycle)."""
    if cycle < 0:
        raise ValueError(f"cycle must be non-negative, got {cycle}")
    return cfg.beta * math.exp(-cfg.gamma * cycle)


def hole_error(state: ErgodicState, rho_star: ScalarField, hole: HoleRegion) -> float:
    """Integral of |rho_k - rho*| restricted to one hole's mask."""
    if rho_star.spec != state.rho.spec:
        raise DimensionError("reference grid does not match state grid")
    if hole.mask.shape != state.rho.values.shape:
        raise DimensionError("hole mask does not match state grid")
    idx = np.flatnonzero(hole.mask.ravel()).astype(np.intp)
    diff = state.rho.values.ravel()[idx] - rho_star.values.ravel()[idx]
    return kernels.abs_sum(np.ascontiguousarray(diff)) * state.rho.spec.delta


@dataclass
class SegmentTimers:
    """Per-agent travel/dwell step counters for one segment.

    ``travel[j]`` counts steps agent j spent outside the target hole before
    first entering it; the entering step itself counts toward neither, and
    ``dwell[j]`` accumulates from the following step on (entry latches even
    if the agent later wanders out).
    """

    travel: np.ndarray
    dwell: np.ndarray
    entered: np.ndarray

    @classmethod
    def fresh(cls, n_agents: int) -> "SegmentTimers":
        return cls(
            np.zeros(n_agents, dtype=np.int64),
            np.zeros(n_agents, dtype=np.int64),
            np.zeros(n_agents, dtype=bool),
        )

    def update(self, inside: np.ndarray) -> None:
        for j in range(self.travel.size):
            if self.entered[j]:
                self.dwell[j] += 1
            elif inside[j]:
                self.entered[j] = True
            else:
                self.travel[j] += 1

    def all_entered(self) -> bool:
        return bool(self.entered.all())

    @property
    def h_mean(self) -> float:
        return team_mean(self.travel)

    @property
    def h_prime_mean(self) -> float:
        return team_mean(self.dwell)
