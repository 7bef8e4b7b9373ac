"""Continuous-time verification layer for the LookAhead dynamics.

The second-order model integrated here is

    z''(t) = -(2/gamma) z'(t) - (2 k alpha / gamma) F(z(t))
             + k (k-1) alpha JF(z(t)) F(z(t)),

which reduces to the gradient-descent model at k = 1, alpha = 1.  Besides a
fixed-step RK4 integrator, the module provides pole-based stability checks
(quartic roots via companion-matrix eigenvalues), the averaging threshold
alpha < (k-1)/k for bilinear coupling, and a residual test certifying that
an integrated trajectory satisfies the closed-form integral identity that
the per-eigendirection solution obeys for symmetric PSD coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import (
    DivergenceError,
    InvalidRangeError,
    ShapeError,
    UnsupportedGameError,
)
from .games import GameKind, LinearGame, field_array, jacobian


@dataclass
class HRDEState:
    """Phase-space sample: position z, velocity v, at time t."""

    z: np.ndarray
    v: np.ndarray
    t: float
    dt: float


@dataclass
class HRDESolution:
    """Recorded trajectory of one integration (uniformly spaced samples)."""

    times: np.ndarray
    zs: np.ndarray
    vs: np.ndarray
    dt: float
    residual_max: float = 0.0

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> HRDEState:
        return HRDEState(self.zs[i], self.vs[i], float(self.times[i]), self.dt)

    def final_norm(self) -> float:
        return float(np.linalg.norm(self.zs[-1]))


# ---------------------------------------------------------------------------
# Right-hand sides and integration
# ---------------------------------------------------------------------------

def la_hrde_rhs(
    game: LinearGame,
    z: np.ndarray,
    v: np.ndarray,
    gamma: float,
    k: int,
    alpha: float,
) -> np.ndarray:
    """Acceleration of the LookAhead model; the Jacobian correction term
    vanishes at k = 1."""
    if gamma <= 0:
        raise InvalidRangeError(f"gamma must be positive, got {gamma}")
    if k < 1:
        raise InvalidRangeError(f"k must be >= 1, got {k}")
    f = field_array(game, z)
    jf = jacobian(game)
    return (
        -(2.0 / gamma) * v
        - (2.0 * k * alpha / gamma) * f
        + k * (k - 1) * alpha * (jf @ f)
    )


def make_la_rhs(game: LinearGame, gamma: float, k: int, alpha: float):
    """Closure form of ``la_hrde_rhs`` with the linear part precomputed."""
    jf = jacobian(game)
    m = -(2.0 * k * alpha / gamma) * jf + k * (k - 1) * alpha * (jf @ jf)
    damping = 2.0 / gamma

    def rhs(z: np.ndarray, v: np.ndarray) -> np.ndarray:
        return m @ z - damping * v

    return rhs


def make_gd_rhs(game: LinearGame, gamma: float):
    """Gradient-descent model: the k = 1, alpha = 1 coefficients."""
    return make_la_rhs(game, gamma, 1, 1.0)


def integrate(
    rhs,
    z0: np.ndarray,
    v0: np.ndarray,
    dt: float,
    t_end: float,
    record_every: int = 1,
    blowup_norm: float = 1e12,
) -> HRDESolution:
    """Classical fixed-step RK4 on the phase-space system.

    Records the initial state, every ``record_every``-th step, and the final
    step.  Raises DivergenceError (with the blow-up time) when the state
    leaves the ``blowup_norm`` ball or turns non-finite.
    """
    if dt <= 0 or t_end <= 0:
        raise InvalidRangeError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    z = np.asarray(z0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if z.shape != v.shape:
        raise ShapeError("z0 and v0 must have the same shape")

    times = [0.0]
    zs = [z.copy()]
    vs = [v.copy()]
    for i in range(1, n_steps + 1):
        k1z = v
        k1v = rhs(z, v)
        z2 = z + 0.5 * dt * k1z
        v2 = v + 0.5 * dt * k1v
        k2z = v2
        k2v = rhs(z2, v2)
        z3 = z + 0.5 * dt * k2z
        v3 = v + 0.5 * dt * k2v
        k3z = v3
        k3v = rhs(z3, v3)
        z4 = z + dt * k3z
        v4 = v + dt * k3v
        k4z = v4
        k4v = rhs(z4, v4)
        z = z + (dt / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        norm2 = float(z @ z)
        if not np.isfinite(norm2) or norm2 > blowup_norm**2:
            raise DivergenceError(i * dt, float(np.sqrt(abs(norm2))))
        if i % record_every == 0 or i == n_steps:
            times.append(i * dt)
            zs.append(z.copy())
            vs.append(v.copy())
    return HRDESolution(np.array(times), np.array(zs), np.array(vs), dt)


# ---------------------------------------------------------------------------
# Closed-form trajectory pieces (bilinear coupling)
# ---------------------------------------------------------------------------

def bilinear_modal_frequencies(
    game: LinearGame, gamma: float, k: int, alpha: float
) -> np.ndarray:
    """Per-eigendirection frequencies sqrt(1/gamma^2 - alpha k (k-1) lambda_i)
    for the eigenvalues lambda_i of the coupling matrix (principal branch)."""
    if game.kind is not GameKind.BILINEAR:
        raise UnsupportedGameError("modal frequencies are defined for bilinear games")
    lam = spectral.eigenvalues(game.coupling)
    return np.sqrt((1.0 / gamma**2 - alpha * k * (k - 1) * lam).astype(complex))


def _damped_cosh_sinh(omega: complex, times: np.ndarray, gamma: float):
    """e^{-t/gamma} cosh(omega t) and e^{-t/gamma} sinh(omega t)/omega.

    Evaluated as half-sums of e^{(omega - 1/gamma) t} and
    e^{-(omega + 1/gamma) t}: folding the decay in first keeps every
    exponent's real part nonpositive for |Re omega| <= 1/gamma, so nothing
    overflows even for large omega*t.
    """
    delta_p = (omega - 1.0 / gamma) * times
    delta_m = -(omega + 1.0 / gamma) * times
    ep, em = np.exp(delta_p), np.exp(delta_m)
    cosh = 0.5 * (ep + em)
    if abs(omega) < 1e-12 / gamma:
        sinh_over = times * np.exp(-times / gamma)
    else:
        sinh_over = 0.5 * (ep - em) / omega
    return cosh, sinh_over


def homogeneous_coordinate(
    omega: complex,
    q0: float,
    qdot0: float,
    gamma: float,
    times: np.ndarray,
) -> np.ndarray:
    """Decay-damped homogeneous solution of one eigendirection:
    e^{-t/g} [cosh(w t) q0 + sinh(w t)/w (qdot0 + q0/g)]."""
    cosh, sinh_over = _damped_cosh_sinh(omega, times, gamma)
    return cosh * q0 + sinh_over * (qdot0 + q0 / gamma)


def solution_residual(
    game: LinearGame,
    sol: HRDESolution,
    gamma: float,
    k: int,
    alpha: float,
) -> float:
    """Max deviation of an integrated trajectory from the per-eigendirection
    integral identity (symmetric PSD coupling, uniform time grid).

    In coupling eigencoordinates each pair (x_i, y_i) must satisfy

        x_i(t) = D_{x,i}(t) - (2 k alpha / gamma) lambda_i (g_i * y_i)(t)
        y_i(t) = D_{y,i}(t) + (2 k alpha / gamma) lambda_i (g_i * x_i)(t)

    with g_i(t) = e^{-t/gamma} sinh(w_i t)/w_i, w_i^2 = 1/gamma^2 -
    alpha k (k-1) lambda_i^2, and D the homogeneous part above.  The
    convolution is approximated by trapezoidal quadrature on the stored
    grid, so the residual shrinks at second order under grid refinement.
    """
    a = game.coupling
    if not np.allclose(a, a.T, atol=1e-10):
        raise UnsupportedGameError("residual check needs a symmetric coupling matrix")
    dts = np.diff(sol.times)
    if dts.size == 0 or not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise InvalidRangeError("residual check needs a uniform time grid")
    lam, u = np.linalg.eigh(a)
    if lam.min() < -1e-10:
        raise UnsupportedGameError("residual check needs PSD coupling")

    d = game.d
    dt = float(dts[0])
    times = sol.times - sol.times[0]
    n = len(times)
    coef = 2.0 * k * alpha / gamma

    # trajectories and initial data in eigencoordinates, time-major
    x_t = sol.zs[:, :d] @ u
    y_t = sol.zs[:, d:] @ u
    xdot0 = u.T @ sol.vs[0, :d]
    ydot0 = u.T @ sol.vs[0, d:]

    worst = 0.0
    for i in range(d):
        om = complex(np.sqrt(complex(1.0 / gamma**2 - alpha * k * (k - 1) * lam[i] ** 2)))
        _, g_i = _damped_cosh_sinh(om, times, gamma)
        g_i = np.real_if_close(g_i, tol=1e6).real
        dx = homogeneous_coordinate(om, x_t[0, i], xdot0[i], gamma, times).real
        dy = homogeneous_coordinate(om, y_t[0, i], ydot0[i], gamma, times).real
        conv_y = np.convolve(g_i, y_t[:, i])[:n]
        conv_x = np.convolve(g_i, x_t[:, i])[:n]
        conv_y = dt * (conv_y - 0.5 * (g_i[0] * y_t[:, i] + g_i * y_t[0, i]))
        conv_x = dt * (conv_x - 0.5 * (g_i[0] * x_t[:, i] + g_i * x_t[0, i]))
        res_x = np.abs(x_t[:, i] - (dx - coef * lam[i] * conv_y)).max()
        res_y = np.abs(y_t[:, i] - (dy + coef * lam[i] * conv_x)).max()
        worst = max(worst, float(res_x), float(res_y))
    return worst


# ---------------------------------------------------------------------------
# Pole-based convergence checks
# ---------------------------------------------------------------------------

def bg_convergence_condition(k: int, alpha: float) -> bool:
    """Averaging threshold for bilinear coupling: alpha < (k-1)/k, strict."""
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    return alpha < (k - 1) / k


def _poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of a monic-normalizable polynomial via companion eigenvalues."""
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    n = coeffs.size - 1
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -coeffs[:0:-1]
    return np.linalg.eigvals(comp)


_ROOT_RE_TOL = 1e-9


def characteristic_stability(
    game: LinearGame, gamma: float, k: int, alpha: float
) -> bool:
    """Pole test of the LookAhead model on bilinear coupling.

    For each eigenvalue lambda of the coupling matrix, the quartic

        (s^2 + (2/gamma) s + alpha k (k-1) lambda^2)^2
            + ((2 k alpha / gamma) lambda)^2 = 0

    is solved numerically; stable iff every root satisfies Re s < tol.
    """
    if game.kind is not GameKind.BILINEAR:
        raise UnsupportedGameError("characteristic test is defined for bilinear games")
    p = 2.0 / gamma
    for lam in spectral.eigenvalues(game.coupling):
        q = alpha * k * (k - 1) * lam**2
        r = (2.0 * k * alpha / gamma) * lam
        coeffs = np.array(
            [1.0, 2.0 * p, p * p + 2.0 * q, 2.0 * p * q, q * q + r * r],
            dtype=complex,
        )
        roots = _poly_roots(coeffs)
        if np.any(roots.real >= _ROOT_RE_TOL):
            return False
    return True


def gd_hrde_stability(game: LinearGame, gamma: float) -> bool:
    """Pole test of the gradient-descent model on bilinear coupling.

    Quartic per coupling eigenvalue:
    s^4 + (2/gamma)(1 + lambda) s^3 + (4/gamma^2) lambda s^2 - 4/gamma^2.
    The constant term is negative for every gamma > 0, so a right-half-plane
    root always exists and the verdict is unstable.
    """
    if game.kind is not GameKind.BILINEAR:
        raise UnsupportedGameError("characteristic test is defined for bilinear games")
    for lam in spectral.eigenvalues(game.coupling):
        coeffs = np.array(
            [
                1.0,
                (2.0 / gamma) * (1.0 + lam),
                (4.0 / gamma**2) * lam,
                0.0,
                -4.0 / gamma**2,
            ],
            dtype=complex,
        )
        roots = _poly_roots(coeffs)
        if np.any(roots.real >= _ROOT_RE_TOL):
            return False
    return True
