"""Eigenvalue extraction and dominant-mode bookkeeping for constant Jacobians.

The dense eigensolver is LAPACK's (via numpy); on top of it we pin a
deterministic ordering, pair the one-step multipliers 1 - gamma*lambda with
their eigenvalues, and expose a seeded power iteration for spectral norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import Xoshiro256PP, derive_seed
from .errors import EmptyInputError, NumericalError, ShapeError


@dataclass
class ComplexSpectrum:
    """Eigenvalues of a Jacobian plus the derived one-step GD multipliers."""

    eigenvalues: np.ndarray
    gd_multipliers: np.ndarray
    gamma: float
    dominant_index: int

    @property
    def dominant(self) -> complex:
        return complex(self.gd_multipliers[self.dominant_index])


def eigenvalues(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a square matrix, deterministically ordered.

    Order: modulus descending, then principal angle ascending.  LAPACK
    returns eigenvalues in arbitrary order, which would make logs and
    fixtures unstable.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ShapeError("matrix has non-finite entries")
    try:
        lam = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    order = np.lexsort((np.angle(lam), -np.abs(lam)))
    return lam[order]


def gd_multipliers(lam: np.ndarray, gamma: float) -> np.ndarray:
    """One-step multipliers T_i = 1 - gamma * lambda_i."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return 1.0 - gamma * np.asarray(lam, dtype=complex)


def dominant_mode(multipliers: np.ndarray) -> tuple[int, complex]:
    """Index and value of the largest-modulus multiplier (first on ties)."""
    t = np.asarray(multipliers, dtype=complex)
    if t.size == 0:
        raise EmptyInputError("multiplier list is empty")
    idx = int(np.argmax(np.abs(t)))
    return idx, complex(t[idx])


def spectrum_of(m: np.ndarray, gamma: float) -> ComplexSpectrum:
    """Eigenvalues of ``m`` with their GD multipliers and dominant index."""
    lam = eigenvalues(m)
    t = gd_multipliers(lam, gamma)
    idx, _ = dominant_mode(t)
    return ComplexSpectrum(lam, t, gamma, idx)


def spectral_norm(
    a: np.ndarray,
    max_iters: int = 500,
    tol: float = 1e-12,
    seed: int = 0,
) -> float:
    """||A||_2 by power iteration on A^T A with a seeded start vector."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a.shape}")
    n = a.shape[1]
    rng = Xoshiro256PP(derive_seed(seed, "power"))
    v = np.array(rng.normals(n), dtype=float)
    v /= np.linalg.norm(v)
    prev = 0.0
    sigma = 0.0
    for _ in range(max_iters):
        w = a.T @ (a @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        sigma = np.sqrt(norm)
        if abs(sigma - prev) <= tol * max(sigma, 1e-300):
            break
        prev = sigma
    return float(sigma)
