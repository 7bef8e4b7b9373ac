"""Convergence measures and per-run trajectory logs.

``distance`` and ``running_average`` track the iterates themselves; the
restricted primal-dual gap has a closed form for every game family here:
for positive curvature the inner maximization is an unconstrained quadratic,
and for the bilinear family the objective is linear so the maximum over a
coordinate box is a scaled l1 norm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .games import JointPoint, LinearGame
from .spectral import spectral_norm


@dataclass
class GapSpec:
    """How to evaluate the restricted primal-dual gap.

    ``box_radius`` is the per-coordinate restriction radius used for games
    without curvature; ``closed_form`` requests the unconstrained analytic
    gap (only available when both curvatures are positive).
    """

    box_radius: float
    closed_form: bool = False

    def __post_init__(self):
        if not np.isfinite(self.box_radius) or self.box_radius <= 0:
            raise ValueError(f"box_radius must be positive, got {self.box_radius}")


@dataclass
class LogRow:
    iter: int
    field_evals: int
    cpu_s: float
    wall_s: float
    distance: float
    gap: float | None = None


@dataclass
class TrajectoryLog:
    """Value-complete record of one solver run."""

    header: dict
    rows: list[LogRow] = field(default_factory=list)
    running_average: JointPoint | None = None

    @property
    def final_distance(self) -> float:
        return self.rows[-1].distance

    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.rows])

    def iters(self) -> np.ndarray:
        return np.array([r.iter for r in self.rows])


def distance(z: JointPoint) -> float:
    """Euclidean distance of the joint state to the origin equilibrium."""
    return z.norm()


def running_average(prev_avg: JointPoint, z_t: JointPoint, t: int) -> JointPoint:
    """Incremental mean: prev + (z_t - prev) / t for the t-th point."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return JointPoint(
        prev_avg.x + (z_t.x - prev_avg.x) / t,
        prev_avg.y + (z_t.y - prev_avg.y) / t,
    )


def default_box_radius(z0: JointPoint) -> float:
    """Restriction radius keeping the saddle point and trajectory interior.

    10x the start norm, with a unit floor so a start at the equilibrium
    itself still yields a valid restriction set.
    """
    return max(10.0 * z0.norm(), 1.0)


def restricted_gap(game: LinearGame, z_bar: JointPoint, spec: GapSpec) -> float:
    """Restricted primal-dual gap of a candidate point.

    Positive curvature (SC-SC / quadratic-rotation with beta < 1): the inner
    problems are unconstrained quadratics, giving

        eta_x/2 ||x||^2 + ||A^T x||^2/(2 eta_y)
        + ||A y||^2/(2 eta_x) + eta_y/2 ||y||^2.

    Zero curvature (bilinear): the objective is linear in the adversary, so
    the max over the box [-B, B]^d is B ||A^T x||_1 + B ||A y||_1.
    """
    x, y = z_bar.x, z_bar.y
    a = game.coupling
    if game.eta_x > 0 and game.eta_y > 0:
        return float(
            0.5 * game.eta_x * (x @ x)
            + (a.T @ x) @ (a.T @ x) / (2.0 * game.eta_y)
            + (a @ y) @ (a @ y) / (2.0 * game.eta_x)
            + 0.5 * game.eta_y * (y @ y)
        )
    if spec.closed_form:
        warnings.warn(
            "closed-form gap requires positive curvature; using the box form",
            stacklevel=2,
        )
    b = spec.box_radius
    return float(b * np.abs(a.T @ x).sum() + b * np.abs(a @ y).sum())


def operator_constants(game: LinearGame) -> tuple[float, float]:
    """(mu, L): strong-monotonicity and Lipschitz constants of the field.

    For isotropic quadratics the per-player curvature and smoothness
    coincide, so mu = min(eta_x, eta_y) and L = sqrt(max(eta)^2 + ||A||^2)
    with ||A||_2 from power iteration.
    """
    sig = spectral_norm(game.coupling, seed=game.seed)
    mu = min(game.eta_x, game.eta_y)
    l = float(np.sqrt(max(game.eta_x, game.eta_y) ** 2 + sig**2))
    return mu, l
