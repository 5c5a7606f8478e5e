"""Reference mixture, hole geometry, first-target rule, and tour order.

The reference density rho* is a weighted sum of bivariate Gaussians. Each
component's "hole" is the Mahalanobis kappa-ellipse of its covariance; the
union of holes is the deficit region Omega_2 and the rest of the domain is
Omega_1. Holes are indexed 0..m-1 in component order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidMixtureError
from .grid import GridSpec, Point, ScalarField, covariance_terms, eval_gaussian

WEIGHT_SUM_TOL = 1e-9
DEFAULT_KAPPA = 3.0


@dataclass
class MixtureComponent:
    alpha: float
    mean: Point
    cov: np.ndarray

    def __post_init__(self):
        self.mean = Point(float(self.mean[0]), float(self.mean[1]))
        self.cov = np.asarray(self.cov, dtype=np.float64)
        covariance_terms(self.cov)
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidMixtureError(f"component weight {self.alpha} outside (0, 1]")


@dataclass
class ReferenceMixture:
    components: list[MixtureComponent]
    rho_star: ScalarField = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.components)

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    def alphas(self) -> np.ndarray:
        return np.array([c.alpha for c in self.components])


@dataclass
class HoleRegion:
    """Cells within Mahalanobis distance kappa of one component's mean."""

    index: int
    kappa: float
    mask: np.ndarray = field(repr=False)


@dataclass
class Tour:
    """Fixed cyclic visiting order of the holes."""

    order: list[int]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"tour {self.order} is not a permutation")

    @property
    def start(self) -> int:
        return self.order[0]

    def next_after(self, hole: int) -> int:
        pos = self.order.index(hole)
        return self.order[(pos + 1) % len(self.order)]


def build_reference(
    components: Sequence[MixtureComponent], spec: GridSpec
) -> ReferenceMixture:
    """Sample rho* = sum_i alpha_i N(mu_i, Sigma_i) on the grid.

    The result is not renormalized: rho* is the analytic reference and keeps
    whatever mass the grid truncates at the boundary.
    """
    comps = list(components)
    if not comps:
        raise InvalidMixtureError("mixture needs at least one component")
    total = sum(c.alpha for c in comps)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidMixtureError(f"mixture weights must sum to 1, got {total}")
    vals = np.zeros((spec.ny, spec.nx))
    for c in comps:
        vals += c.alpha * eval_gaussian(spec, c.mean, c.cov).values
    return ReferenceMixture(comps, ScalarField(spec, vals))


def hole_masks(
    mixture: ReferenceMixture, spec: GridSpec, kappa: float = DEFAULT_KAPPA
) -> list[HoleRegion]:
    """Per-component Mahalanobis kappa-ellipse masks over the grid cells."""
    if not kappa > 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    xs = spec.centers_x
    ys = spec.centers_y
    holes = []
    for i, c in enumerate(mixture.components):
        i11, i12, i22, _ = covariance_terms(c.cov)
        dx = xs - c.mean.x
        dy = ys - c.mean.y
        q = (i11 * dx * dx)[None, :] + (2.0 * i12 * dx)[None, :] * dy[:, None]
        q += (i22 * dy * dy)[:, None]
        holes.append(HoleRegion(i, float(kappa), q <= kappa * kappa))
    return holes


def omega2_mask(holes: Sequence[HoleRegion]) -> np.ndarray:
    """Union of the hole masks (the complement is Omega_1)."""
    out = np.zeros_like(holes[0].mask)
    for h in holes:
        out |= h.mask
    return out


def initial_target(mixture: ReferenceMixture, positions: Sequence[Point]) -> int:
    """First hole to visit: argmin_i (sum_j dist(agent_j, mu_i)) / alpha_i.

    Ties break to the lowest hole index. The per-hole distance sums are taken
    over sorted distances so agent labeling cannot perturb the result.
    """
    if len(positions) == 0:
        raise ValueError("need at least one agent position")
    pos = np.asarray(positions, dtype=np.float64)
    best = -1
    best_score = np.inf
    for i, c in enumerate(mixture.components):
        d = np.hypot(pos[:, 0] - c.mean.x, pos[:, 1] - c.mean.y)
        score = float(np.sort(d).sum()) / c.alpha
        if score < best_score:
            best_score = score
            best = i
    return best


def build_tour(mixture: ReferenceMixture, first: int) -> Tour:
    """Greedy nearest-neighbor order over hole means, starting at ``first``.

    The order is frozen for the whole run and wraps cyclically. Ties break
    to the lowest hole index.
    """
    m = mixture.m
    if not 0 <= first < m:
        raise ValueError(f"first hole {first} outside 0..{m - 1}")
    means = mixture.means()
    remaining = list(range(m))
    remaining.remove(first)
    order = [first]
    while remaining:
        cur = means[order[-1]]
        d = np.hypot(means[remaining, 0] - cur[0], means[remaining, 1] - cur[1])
        order.append(remaining.pop(int(np.argmin(d))))
    return Tour(order)
