"""Per-agent position update laws.

Three laws share one step size v_max: head for the nearest deficit point,
descend the error field's gradient, or blend the two unit directions with a
weight r that measures how much mass the agent is standing on relative to
the reference.

The gradient law uses the descent direction -grad(phi) by default: filling a
deficit means moving where phi decreases. ``gradient_sign=+1.0`` switches to
the raw +grad(phi) for comparison runs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import InvalidDensityError, ZeroDirectionError
from .grid import Point, ScalarField, gradient_at

GRADIENT_EPS = 1e-12
DENSITY_EPS = 1e-15


class ControlMode(enum.Enum):
    NEAREST_ONLY = "nearest_only"
    GRADIENT_ONLY = "gradient_only"
    BLENDED = "blended"


@dataclass
class ControlConfig:
    v_max: float = 10.0
    mode: ControlMode = ControlMode.BLENDED
    gradient_sign: float = -1.0

    def __post_init__(self):
        if not self.v_max > 0.0:
            raise ValueError(f"v_max must be positive, got {self.v_max}")
        if self.gradient_sign not in (-1.0, 1.0):
            raise ValueError(f"gradient_sign must be -1.0 or +1.0, got {self.gradient_sign}")


@dataclass
class AgentState:
    id: int
    position: Point


def nearest_point_step(mu: Point, g: Point, v_max: float) -> Point:
    """Move exactly v_max from mu toward g."""
    dx = g[0] - mu[0]
    dy = g[1] - mu[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise ZeroDirectionError(f"target coincides with position {mu}")
    return Point(mu[0] + v_max * dx / d, mu[1] + v_max * dy / d)


def _grad_unit(phi: ScalarField, mu: Point, gradient_sign: float) -> tuple[float, float]:
    g = gradient_at(phi, mu)
    gx = gradient_sign * float(g[0])
    gy = gradient_sign * float(g[1])
    n = math.hypot(gx, gy)
    if n < GRADIENT_EPS:
        return 0.0, 0.0
    return gx / n, gy / n


def gradient_step(
    mu: Point, phi: ScalarField, v_max: float, gradient_sign: float = -1.0
) -> Point:
    """Move v_max along the (signed) gradient of phi; stand still when flat."""
    ux, uy = _grad_unit(phi, mu, gradient_sign)
    return Point(mu[0] + v_max * ux, mu[1] + v_max * uy)


def blend_r(rho_k_at_mu: float, rho_star_at_mu: float) -> float:
    """Nearest-point weight r = rho_k / (rho_k + rho*), both sampled at mu.

    When both densities are negligible the agent is in empty space and
    should chase demand, so r = 0 (pure gradient).
    """
    if rho_k_at_mu < 0.0 or rho_star_at_mu < 0.0:
        raise InvalidDensityError(
            f"negative density: rho_k={rho_k_at_mu}, rho*={rho_star_at_mu}"
        )
    if rho_k_at_mu < DENSITY_EPS and rho_star_at_mu < DENSITY_EPS:
        return 0.0
    return rho_k_at_mu / (rho_k_at_mu + rho_star_at_mu)


def blended_step(
    mu: Point,
    g: Optional[Point],
    phi: ScalarField,
    r: float,
    v_max: float,
    gradient_sign: float = -1.0,
) -> Point:
    """Convex blend of the nearest-point and gradient unit directions.

    With no nearest target available the step falls back to pure gradient;
    a degenerate target (g == mu) contributes a zero direction instead of
    raising. The result is clamped into the domain.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"blend weight r={r} outside [0, 1]")
    if g is None:
        r = 0.0
        nx_u, ny_u = 0.0, 0.0
    else:
        dx = g[0] - mu[0]
        dy = g[1] - mu[1]
        d = math.hypot(dx, dy)
        if d == 0.0:
            nx_u, ny_u = 0.0, 0.0
        else:
            nx_u, ny_u = dx / d, dy / d
    gx_u, gy_u = _grad_unit(phi, mu, gradient_sign)
    spec = phi.spec
    x = mu[0] + v_max * (r * nx_u + (1.0 - r) * gx_u)
    y = mu[1] + v_max * (r * ny_u + (1.0 - r) * gy_u)
    return Point(min(max(x, 0.0), spec.Lx), min(max(y, 0.0), spec.Ly))
