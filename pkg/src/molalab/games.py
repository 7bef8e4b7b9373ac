"""Benchmark game families with closed-form vector fields.

All three families share the linear saddle operator

    F(x, y) = (eta_x * x + A y,  eta_y * y - A^T x)

with equilibrium at the origin, so the Jacobian is the constant block matrix
[[eta_x I, A], [-A^T, eta_y I]].  Construction is seeded and reproducible
(see _rng for the pinned generator).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from ._rng import Xoshiro256PP, derive_seed
from .errors import InvalidDimensionError, InvalidRangeError, ShapeError


class GameKind(str, enum.Enum):
    BILINEAR = "bilinear"
    SCSC = "scsc"
    QUADRATIC_ROT = "quadratic_rot"


@dataclass
class JointPoint:
    """Joint state z = (x, y) of the two players."""

    x: np.ndarray
    y: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @staticmethod
    def from_array(z: np.ndarray, d: int) -> "JointPoint":
        z = np.asarray(z, dtype=float)
        if z.shape != (2 * d,):
            raise ShapeError(f"expected joint vector of length {2 * d}, got {z.shape}")
        return JointPoint(z[:d].copy(), z[d:].copy())

    def norm(self) -> float:
        return float(np.sqrt(self.x @ self.x + self.y @ self.y))


@dataclass
class LinearGame:
    """A saddle-point instance with constant Jacobian.

    ``coupling`` is the matrix A; ``eta_x``/``eta_y`` the isotropic curvature
    of each player's own quadratic term; ``beta`` the rotation factor used by
    the bilinear and quadratic-rotation constructors (kept for provenance).
    Instances are treated as immutable after construction.
    """

    kind: GameKind
    d: int
    coupling: np.ndarray
    eta_x: float
    eta_y: float
    beta: float
    seed: int
    sigma_min: float | None = field(default=None)
    sigma_max: float | None = field(default=None)

    def __post_init__(self):
        self.coupling = np.asarray(self.coupling, dtype=float)
        if self.coupling.shape != (self.d, self.d):
            raise ShapeError(
                f"coupling must be {self.d}x{self.d}, got {self.coupling.shape}"
            )
        if not np.isfinite(self.coupling).all():
            raise InvalidRangeError("coupling matrix has non-finite entries")
        self.coupling.setflags(write=False)


def _gaussian_matrix(d: int, scale: float, seed: int) -> np.ndarray:
    rng = Xoshiro256PP(seed)
    return scale * np.array(rng.normals(d * d), dtype=float).reshape(d, d)


def _orthogonal(d: int, seed: int) -> np.ndarray:
    """Random orthogonal factor: QR of a seeded Gaussian matrix.

    The QR sign ambiguity is removed by forcing the diagonal of R to be
    nonnegative, so identical seeds give identical factors.
    """
    g = _gaussian_matrix(d, 1.0, seed)
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def make_bilinear(d: int, beta: float, seed: int) -> LinearGame:
    """Bilinear game: A has i.i.d. N(0, beta^2/d) entries, no curvature."""
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    if beta < 0:
        raise InvalidRangeError(f"beta must be nonnegative, got {beta}")
    a = _gaussian_matrix(d, beta / np.sqrt(d), derive_seed(seed, "coupling"))
    return LinearGame(GameKind.BILINEAR, d, a, 0.0, 0.0, beta, seed)


def make_scsc(
    d: int,
    eta_x: float,
    eta_y: float,
    sigma_min: float,
    sigma_max: float,
    seed: int,
) -> LinearGame:
    """Strongly convex-concave game with a prescribed singular spectrum.

    A = U diag(sigma) V^T with U, V random orthogonal and sigma linearly
    spaced (inclusive) in [sigma_min, sigma_max].
    """
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    if eta_x <= 0 or eta_y <= 0:
        raise InvalidRangeError("eta_x and eta_y must be positive for SC-SC")
    if not (np.isfinite(sigma_min) and np.isfinite(sigma_max)):
        raise InvalidRangeError("sigma bounds must be finite")
    if sigma_min > sigma_max:
        raise InvalidRangeError(f"sigma_min {sigma_min} exceeds sigma_max {sigma_max}")
    if sigma_min < 0:
        raise InvalidRangeError("singular values must be nonnegative")
    u = _orthogonal(d, derive_seed(seed, "left"))
    v = _orthogonal(d, derive_seed(seed, "right"))
    sigma = np.linspace(sigma_min, sigma_max, d)
    a = (u * sigma) @ v.T
    return LinearGame(
        GameKind.SCSC, d, a, eta_x, eta_y, 0.0, seed,
        sigma_min=sigma_min, sigma_max=sigma_max,
    )


def make_quadratic_rot(d: int, beta: float, seed: int) -> LinearGame:
    """Quadratic game interpolating potential (beta=0) and bilinear (beta=1).

    Payoff (1-beta) x^T x + beta x^T A y - (1-beta) y^T y, so the curvature
    is the exact Hessian 2(1-beta) and the coupling is beta*A with A drawn
    at unit scale (N(0, 1/d) entries).
    """
    if d < 1:
        raise InvalidDimensionError(f"d must be >= 1, got {d}")
    if not 0.0 <= beta <= 1.0:
        raise InvalidRangeError(f"beta must lie in [0, 1], got {beta}")
    a = _gaussian_matrix(d, 1.0 / np.sqrt(d), derive_seed(seed, "coupling"))
    eta = 2.0 * (1.0 - beta)
    return LinearGame(GameKind.QUADRATIC_ROT, d, beta * a, eta, eta, beta, seed)


# ---------------------------------------------------------------------------
# Field, Jacobian, payoff
# ---------------------------------------------------------------------------

def field_array(game: LinearGame, z: np.ndarray) -> np.ndarray:
    """F(z) on a packed joint vector of length 2d (fast path for solvers)."""
    d = game.d
    if z.shape != (2 * d,):
        raise ShapeError(f"expected joint vector of length {2 * d}, got {z.shape}")
    x, y = z[:d], z[d:]
    a = game.coupling
    return np.concatenate([game.eta_x * x + a @ y, game.eta_y * y - a.T @ x])


def field_eval(game: LinearGame, z: JointPoint) -> JointPoint:
    """Vector field F(z) = (eta_x x + A y, eta_y y - A^T x)."""
    out = field_array(game, z.as_array())
    return JointPoint.from_array(out, game.d)


def jacobian(game: LinearGame) -> np.ndarray:
    """Constant Jacobian [[eta_x I, A], [-A^T, eta_y I]]."""
    d = game.d
    jf = np.zeros((2 * d, 2 * d))
    jf[:d, :d] = game.eta_x * np.eye(d)
    jf[:d, d:] = game.coupling
    jf[d:, :d] = -game.coupling.T
    jf[d:, d:] = game.eta_y * np.eye(d)
    return jf


def payoff(game: LinearGame, z: JointPoint) -> float:
    """Scalar saddle payoff f(x, y) whose partial gradients build F."""
    x, y = z.x, z.y
    return float(
        0.5 * game.eta_x * (x @ x)
        - 0.5 * game.eta_y * (y @ y)
        + x @ game.coupling @ y
    )


def draw_start(game: LinearGame, scale: float, stream: str = "z0") -> JointPoint:
    """Seeded standard-Gaussian start point scaled by ``scale``."""
    rng = Xoshiro256PP(derive_seed(game.seed, stream))
    z = scale * np.array(rng.normals(2 * game.d), dtype=float)
    return JointPoint.from_array(z, game.d)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def to_dict(game: LinearGame, embed_matrix: bool = False) -> dict:
    out = {
        "kind": game.kind.value,
        "d": game.d,
        "eta_x": game.eta_x,
        "eta_y": game.eta_y,
        "beta": game.beta,
        "seed": game.seed,
    }
    if game.sigma_min is not None:
        out["sigma_min"] = game.sigma_min
        out["sigma_max"] = game.sigma_max
    if embed_matrix:
        out["coupling"] = game.coupling.tolist()
    return out


def to_json(game: LinearGame, embed_matrix: bool = False) -> str:
    return json.dumps(to_dict(game, embed_matrix=embed_matrix), sort_keys=True)


def from_dict(data: dict) -> LinearGame:
    kind = GameKind(data["kind"])
    if "coupling" in data:
        return LinearGame(
            kind,
            int(data["d"]),
            np.array(data["coupling"], dtype=float),
            float(data["eta_x"]),
            float(data["eta_y"]),
            float(data.get("beta", 0.0)),
            int(data["seed"]),
            sigma_min=data.get("sigma_min"),
            sigma_max=data.get("sigma_max"),
        )
    if kind is GameKind.BILINEAR:
        return make_bilinear(int(data["d"]), float(data["beta"]), int(data["seed"]))
    if kind is GameKind.SCSC:
        return make_scsc(
            int(data["d"]),
            float(data["eta_x"]),
            float(data["eta_y"]),
            float(data["sigma_min"]),
            float(data["sigma_max"]),
            int(data["seed"]),
        )
    return make_quadratic_rot(int(data["d"]), float(data["beta"]), int(data["seed"]))


def from_json(text: str) -> LinearGame:
    return from_dict(json.loads(text))
