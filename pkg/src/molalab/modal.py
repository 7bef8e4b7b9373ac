"""Discrete frequency-domain stability theory for the LookAhead wrapper.

A purely rotational mode i*c of the base operator turns, after k gradient
steps and one averaging step with weight alpha, into the complex multiplier

    mu_k(c; alpha) = (1 - alpha) + alpha * (1 - i c)^k.

Everything here is built on that map: the squared-modulus margin g_k, the
largest step*Lipschitz product keeping every rotational mode nonexpansive
(``gamma_budget``), the exact averaging cap for a powered multiplier
(``alpha_cap``), the phase/amplitude horizon proposals (``k_candidates``),
the full parameter search (``choose_modal_params``), class-uniform envelopes,
and the half-plane exclusion geometry (``phi_k`` / ``rotation_budget``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, InvalidRangeError

# Default search space for the parameter search; override per call or via CLI.
DEFAULT_K_MIN = 5
DEFAULT_K_MAX = 2000
DEFAULT_ALPHA_GRID = tuple(round(0.02 * i, 2) for i in range(1, 50))

_BUDGET_GRID_N = 4096
_BISECT_ITERS = 60
_THETA_TOL = 1e-9
_TINY = 1e-300


@dataclass
class ModalSelection:
    """A certified (k, alpha) pair for a given step size.

    ``rho`` is the dominant-mode modulus after one full cycle; ``feasible``
    is False only when the search found no pair under the averaging cap and
    the conservative fallback was returned instead.
    """

    k: int
    alpha: float
    gamma: float
    rho: float
    feasible: bool
    fallback_used: bool
    dominant: complex = 0.0 + 0.0j


@dataclass
class BudgetResult:
    """Largest admissible gamma*L for rotational modes, from a grid scan."""

    gamma_L_budget: float
    crossing_found: bool
    scan_resolution: float


def polar_pow(w, k):
    """w**k through polar form: r^k e^{i k theta}.

    Stable for the k ~ 2000 horizons used here, where repeated
    multiplication would accumulate rounding and |w|^k can be huge.
    """
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    theta = np.angle(w)
    with np.errstate(over="ignore", divide="ignore"):
        logr = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), -np.inf)
        mag = np.exp(k * logr)
    out = mag * np.exp(1j * np.asarray(k) * theta)
    if out.ndim == 0:
        return complex(out)
    return out


def mode_multiplier(c, alpha, k):
    """mu_k(c; alpha) = (1 - alpha) + alpha (1 - i c)^k."""
    c = np.asarray(c, dtype=float)
    return (1.0 - np.asarray(alpha)) + np.asarray(alpha) * polar_pow(1.0 - 1j * c, k)


def la_multiplier(T, alpha, k):
    """(1 - alpha) + alpha T^k for a general one-step multiplier T."""
    return (1.0 - np.asarray(alpha)) + np.asarray(alpha) * polar_pow(T, k)


def _margin_parts(c, k):
    """(Re w, |w|^2) for w = (1 - i c)^k, in real arithmetic.

    |w| = exp(k/2 * log1p(c^2)) overflows to +inf gracefully for very large
    k*c, where the complex product would produce NaNs.
    """
    c = np.asarray(c, dtype=float)
    with np.errstate(over="ignore"):
        mag = np.exp(np.asarray(k) * 0.5 * np.log1p(c * c))
        re_w = mag * np.cos(np.asarray(k) * np.arctan(c))
        return re_w, mag * mag


def _margin_from_parts(alpha, re_w, abs2_w):
    alpha = np.asarray(alpha)
    with np.errstate(over="ignore", invalid="ignore"):
        return ((1.0 - alpha) ** 2 + (2.0 * alpha * (1.0 - alpha)) * re_w
                + (alpha * alpha) * abs2_w - 1.0)


def stability_margin(c, alpha, k):
    """g_k(c; alpha) = |mu_k(c; alpha)|^2 - 1; negative means contraction.

    Expanded as (1-a)^2 + 2a(1-a) Re w + a^2 |w|^2 - 1 so that the scan and
    bisection machinery can evaluate it on large grids without forming the
    complex multiplier.
    """
    re_w, abs2_w = _margin_parts(c, k)
    g = _margin_from_parts(alpha, re_w, abs2_w)
    if np.ndim(g) == 0:
        return float(g)
    return g


def gamma_budget(alpha: float, k: int, c_max: float = 10.0) -> BudgetResult:
    """First positive crossing of g_k on [0, c_max], refined by bisection.

    g_k(0) = 0 always; the budget is the first c where some mode turns
    expansive.  If no grid point is positive, the scan is reported as
    exhausted (budget >= c_max).  If expansion starts immediately and alpha
    is at or above 1 - 1/k, the budget is exactly 0.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidRangeError(f"alpha must lie in (0, 1), got {alpha}")
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    if c_max <= 0:
        raise InvalidRangeError(f"c_max must be positive, got {c_max}")
    step = c_max / (_BUDGET_GRID_N - 1)
    grid = np.linspace(0.0, c_max, _BUDGET_GRID_N)
    g = stability_margin(grid, alpha, k)
    positive = g > 0.0
    if not positive[1:].any():
        return BudgetResult(float(c_max), False, step)
    first = 1 + int(np.argmax(positive[1:]))
    if first == 1 and alpha >= 1.0 - 1.0 / k:
        return BudgetResult(0.0, True, step)
    lo, hi = grid[first - 1], grid[first]
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if stability_margin(mid, alpha, k) > 0.0:
            hi = mid
        else:
            lo = mid
    return BudgetResult(float(0.5 * (lo + hi)), True, step)


def budget_gain_grid(
    k_values,
    alphas,
    c_max: float = 10.0,
) -> np.ndarray:
    """alpha * Gamma_k(alpha) over a (k, alpha) grid, vectorized.

    Mirrors ``gamma_budget`` exactly (same grid, same bisection count, same
    margin arithmetic) so grid maxima agree with scalar re-evaluation.
    Entries with alpha >= 1 - 1/k or an exhausted scan are set to 0 / the
    scan bound respectively, matching the scalar semantics.
    """
    k_values = np.asarray(list(k_values), dtype=int)
    alphas = np.asarray(list(alphas), dtype=float)
    grid = np.linspace(0.0, c_max, _BUDGET_GRID_N)
    # almost every crossing sits at small c, so scan a prefix of the grid
    # first and rescan the full grid only for rows that did not resolve
    prefix = min(_BUDGET_GRID_N, 1024)
    re_w, abs2_w = _margin_parts(grid[None, :prefix], k_values[:, None])

    budgets = np.full((k_values.size, alphas.size), float(c_max))
    ref_lo, ref_hi, ref_a, ref_k, ref_idx = [], [], [], [], []
    for j, alpha in enumerate(alphas):
        positive = _margin_from_parts(alpha, re_w, abs2_w) > 0.0
        has_cross = positive[:, 1:].any(axis=1)
        first = 1 + np.argmax(positive[:, 1:], axis=1)
        unresolved = np.flatnonzero(~has_cross)
        for i in unresolved:
            g_full = stability_margin(grid, alpha, int(k_values[i]))
            pos_full = g_full > 0.0
            if pos_full[1:].any():
                has_cross[i] = True
                first[i] = 1 + int(np.argmax(pos_full[1:]))
        zero_now = has_cross & (first == 1) & (alpha >= 1.0 - 1.0 / k_values)
        budgets[zero_now, j] = 0.0
        refine = np.flatnonzero(has_cross & ~zero_now)
        ref_lo.append(grid[first[refine] - 1])
        ref_hi.append(grid[first[refine]])
        ref_a.append(np.full(refine.size, alpha))
        ref_k.append(k_values[refine])
        ref_idx.append(np.stack([refine, np.full(refine.size, j)], axis=1))
    if ref_lo:
        lo = np.concatenate(ref_lo)
        hi = np.concatenate(ref_hi)
        a_flat = np.concatenate(ref_a)
        k_flat = np.concatenate(ref_k)
        idx = np.concatenate(ref_idx)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            up = stability_margin(mid, a_flat, k_flat) > 0.0
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
        budgets[idx[:, 0], idx[:, 1]] = 0.5 * (lo + hi)
    return alphas[None, :] * budgets


def alpha_cap(T: complex, k: int) -> float:
    """Largest averaging weight keeping the powered mode w = T^k nonexpansive.

    alpha_max = 2 (1 - Re w) / |1 - w|^2, clipped to [0, 1].  No positive
    weight exists once Re w >= 1 (the impermeable half-plane); w == 1 means
    the mode is already fixed and any weight is admissible.
    """
    if k < 1:
        raise InvalidRangeError(f"k must be >= 1, got {k}")
    w = polar_pow(complex(T), k)
    if w == 1.0 + 0.0j:
        return 1.0
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        return 0.0
    if w.real >= 1.0:
        return 0.0
    delta = 1.0 - w
    return min(1.0, 2.0 * (1.0 - w.real) / (delta.real**2 + delta.imag**2))


def k_candidates(T: complex, alpha: float, k_min: int, k_max: int) -> list[int]:
    """Integer horizons aligning the dominant mode's phase and amplitude.

    Writing T = R e^{-i theta}, the phase targets put k theta near odd
    multiples of pi and the amplitude target matches R^k to (1-alpha)/alpha.
    Non-rotational modes (theta ~ 0) get the amplitude match alone.  When
    the nearest phase target falls outside [k_min, k_max] the range endpoint
    is returned rather than nothing, so heavily potential spectra still
    propose the longest admissible horizon.
    """
    if k_min < 1 or k_max < k_min:
        raise InvalidRangeError(f"bad horizon range [{k_min}, {k_max}]")
    T = complex(T)
    r = abs(T)
    theta = abs(np.angle(T))

    log_ratio = None
    if 0.0 < alpha < 1.0 and r > 0 and r != 1.0:
        val = math.log((1.0 - alpha) / alpha) / math.log(r)
        if math.isfinite(val) and val > 0.0:
            log_ratio = val

    if theta < _THETA_TOL:
        if r < 1.0 and log_ratio is not None:
            return [min(max(int(round(log_ratio)), k_min), k_max)]
        return []

    k_amp = log_ratio if log_ratio is not None else float(k_min)
    m_real = (theta * k_amp / math.pi - 1.0) / 2.0
    m_lo = max(0, math.floor(m_real))
    m_hi = max(0, math.ceil(m_real))
    candidates_m = sorted({m_lo, m_hi, m_lo + 1} if m_lo == m_hi else {m_lo, m_hi})
    # argmin of |k_phase(m) - k_amp|; ties resolve to the larger m so the
    # phase target is reachable when the first odd multiple sits below k_min
    best_m = None
    best_err = math.inf
    for m in candidates_m:
        err = abs(math.pi * (2 * m + 1) / theta - k_amp)
        if err < best_err or (err == best_err and best_m is not None and m > best_m):
            best_m, best_err = m, err
    k0 = math.pi * (2 * best_m + 1) / theta
    cands = {math.floor(k0), math.ceil(k0)}
    cands = sorted(c for c in cands if k_min <= c <= k_max)
    if not cands:
        cands = [min(max(int(round(k0)), k_min), k_max)]
    return cands


def choose_modal_params(
    lam,
    k_min: int = DEFAULT_K_MIN,
    k_max: int = DEFAULT_K_MAX,
    alpha_grid=DEFAULT_ALPHA_GRID,
    gamma: float = 0.01,
    all_modes: bool = False,
) -> ModalSelection:
    """Search (alpha, k) pairs proposed for the dominant mode.

    Pairs are filtered by the averaging cap and scored by the per-base-step
    contraction rate log(rho)/k of the dominant mode (worst mode over the
    whole spectrum when ``all_modes`` is set).  The per-step normalization
    makes horizons of different lengths comparable; ties keep the earlier
    pair in iteration order (grid order, then ascending k).  With no
    feasible pair the fallback (k_min, min(0.5, alpha_cap)) is returned and
    flagged.
    """
    alpha_grid = list(alpha_grid)
    if not alpha_grid:
        raise EmptyInputError("alpha_grid is empty")
    if any(not 0.0 < a < 1.0 for a in alpha_grid):
        raise InvalidRangeError("alpha grid values must lie in (0, 1)")
    if k_min < 1 or k_max < k_min:
        raise InvalidRangeError(f"bad horizon range [{k_min}, {k_max}]")

    t_all = 1.0 - gamma * np.asarray(lam, dtype=complex)
    if t_all.size == 0:
        raise EmptyInputError("eigenvalue list is empty")
    t_dom = complex(t_all[int(np.argmax(np.abs(t_all)))])

    best = None  # (score, k, alpha, rho)
    for alpha in alpha_grid:
        for k in k_candidates(t_dom, alpha, k_min, k_max):
            if alpha > alpha_cap(t_dom, k):
                continue
            if all_modes:
                rho = float(np.max(np.abs(la_multiplier(t_all, alpha, k))))
            else:
                rho = float(abs(la_multiplier(t_dom, alpha, k)))
            score = math.log(max(rho, _TINY)) / k
            if best is None or score < best[0]:
                best = (score, k, alpha, rho)

    if best is not None:
        _, k_star, alpha_star, rho_star = best
        return ModalSelection(
            k=k_star, alpha=alpha_star, gamma=gamma, rho=rho_star,
            feasible=True, fallback_used=False, dominant=t_dom,
        )
    alpha_fb = min(0.5, alpha_cap(t_dom, k_min))
    rho_fb = float(abs(la_multiplier(t_dom, alpha_fb, k_min)))
    return ModalSelection(
        k=k_min, alpha=alpha_fb, gamma=gamma, rho=rho_fb,
        feasible=False, fallback_used=True, dominant=t_dom,
    )


# ---------------------------------------------------------------------------
# Class-uniform envelopes and exclusion geometry
# ---------------------------------------------------------------------------

def class_alpha_envelope(gamma_l: float, k: int) -> float:
    """Largest class-uniform averaging weight at budget Gamma = gamma*L."""
    if gamma_l <= 0:
        raise InvalidRangeError(f"budget must be positive, got {gamma_l}")
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    return 2.0 / (1.0 + (1.0 + gamma_l**2) ** (k / 2.0))


def class_gamma_envelope(alpha: float, k: int) -> float:
    """Largest class-uniform budget at averaging weight alpha (inverse map)."""
    if not 0.0 < alpha < 1.0:
        raise InvalidRangeError(f"alpha must lie in (0, 1), got {alpha}")
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    return math.sqrt(((2.0 - alpha) / alpha) ** (2.0 / k) - 1.0)


def phi_k(c, k: int):
    """Real part of (1 - i c)^k: (1 + c^2)^{k/2} cos(k arctan c)."""
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    c = np.asarray(c, dtype=float)
    out = (1.0 + c * c) ** (k / 2.0) * np.cos(k * np.arctan(c))
    if out.ndim == 0:
        return float(out)
    return out


def rotation_budget(k: int, r_max: float = 10.0) -> float:
    """Largest r with phi_k < 1 on (0, r]: modes below it never cross into
    the half-plane Re >= 1 where no averaging weight can restore contraction.

    Grid scan plus bisection; returns r_max when no crossing is found within
    the scan (unbounded within the scanned range).
    """
    if k < 2:
        raise InvalidRangeError(f"k must be >= 2, got {k}")
    if r_max <= 0:
        raise InvalidRangeError(f"r_max must be positive, got {r_max}")
    grid = np.linspace(0.0, r_max, _BUDGET_GRID_N)
    vals = phi_k(grid, k)
    crossed = vals[1:] >= 1.0
    if not crossed.any():
        return r_max
    first = 1 + int(np.argmax(crossed))
    lo, hi = grid[first - 1], grid[first]
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if phi_k(mid, k) >= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
