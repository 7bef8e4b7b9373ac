"""Discrete-time solvers over linear games.

Plain gradient descent, extragradient, optimistic gradient descent, Adam,
the LookAhead wrapper around GD or Adam, and the modal-tuned LookAhead
driver that selects (k, alpha) from the Jacobian spectrum once at start.

Iteration accounting: ``T`` counts base-optimizer steps for every method.
A LookAhead cycle of length k therefore costs k gradient evaluations, while
extragradient pays two per update; the per-row ``field_evals`` counter keeps
both views plottable.  CPU time is sampled per iteration as thread CPU time
so runs executing in a worker pool do not contaminate each other.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from . import games as games_mod
from . import modal, spectral
from .errors import ConfigError, InvalidRangeError
from .games import JointPoint, LinearGame, field_array
from .metrics import GapSpec, LogRow, TrajectoryLog, default_box_radius, restricted_gap


class Method(str, enum.Enum):
    GD = "gd"
    EG = "eg"
    OGD = "ogd"
    ADAM = "adam"
    LA = "la"
    LA_ADAM = "laadam"
    MOLA = "mola"


_METHOD_ALIASES = {
    "gd": Method.GD,
    "eg": Method.EG,
    "ogd": Method.OGD,
    "ogda": Method.OGD,
    "adam": Method.ADAM,
    "la": Method.LA,
    "laadam": Method.LA_ADAM,
    "la-adam": Method.LA_ADAM,
    "la_adam": Method.LA_ADAM,
    "mola": Method.MOLA,
}


def parse_method(name: str) -> Method:
    try:
        return _METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}") from None


@dataclass
class RunConfig:
    """Everything a single solver run needs besides the game."""

    method: Method
    gamma: float
    T: int
    k: int | None = None
    alpha: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    z0_scale: float = 1.0

    def validate(self) -> None:
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.method in (Method.LA, Method.LA_ADAM):
            if self.k is None or self.k < 1:
                raise ConfigError("LookAhead methods require k >= 1")
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise ConfigError("LookAhead methods require alpha in (0, 1]")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ConfigError("Adam eps must be positive")


@dataclass
class SolverState:
    """Mutable per-run state shared by the steppers."""

    z: np.ndarray
    z_prev_field: np.ndarray | None = None
    anchor: np.ndarray | None = None
    step_in_cycle: int = 0
    adam_m: np.ndarray | None = None
    adam_v: np.ndarray | None = None
    t: int = 0


# ---------------------------------------------------------------------------
# Single steps (array kernels plus JointPoint wrappers)
# ---------------------------------------------------------------------------

def _gd(game: LinearGame, z: np.ndarray, gamma: float) -> np.ndarray:
    return z - gamma * field_array(game, z)


def _eg(game: LinearGame, z: np.ndarray, gamma: float) -> np.ndarray:
    half = z - gamma * field_array(game, z)
    return z - gamma * field_array(game, half)


def gd_step(game: LinearGame, z: JointPoint, gamma: float) -> JointPoint:
    """One explicit step z - gamma F(z)."""
    if gamma <= 0:
        raise InvalidRangeError(f"gamma must be positive, got {gamma}")
    return JointPoint.from_array(_gd(game, z.as_array(), gamma), game.d)


def eg_step(game: LinearGame, z: JointPoint, gamma: float) -> JointPoint:
    """Extragradient: evaluate the field at the extrapolated half step."""
    if gamma <= 0:
        raise InvalidRangeError(f"gamma must be positive, got {gamma}")
    return JointPoint.from_array(_eg(game, z.as_array(), gamma), game.d)


def ogd_step(game: LinearGame, state: SolverState, gamma: float) -> SolverState:
    """Optimistic step z - 2 gamma F(z_t) + gamma F(z_{t-1}).

    The first call uses F(z_{-1}) := F(z_0), reducing to a plain GD step.
    """
    g = field_array(game, state.z)
    prev = state.z_prev_field if state.z_prev_field is not None else g
    state.z = state.z - 2.0 * gamma * g + gamma * prev
    state.z_prev_field = g
    state.t += 1
    return state


def adam_step(
    game: LinearGame,
    state: SolverState,
    gamma: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> SolverState:
    """Bias-corrected Adam on the joint field (descent in x, ascent in y
    already folded into F's sign convention)."""
    g = field_array(game, state.z)
    if state.adam_m is None:
        state.adam_m = np.zeros_like(g)
        state.adam_v = np.zeros_like(g)
    state.t += 1
    state.adam_m = beta1 * state.adam_m + (1.0 - beta1) * g
    state.adam_v = beta2 * state.adam_v + (1.0 - beta2) * g * g
    m_hat = state.adam_m / (1.0 - beta1**state.t)
    v_hat = state.adam_v / (1.0 - beta2**state.t)
    state.z = state.z - gamma * m_hat / (np.sqrt(v_hat) + eps)
    return state


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def _resolve_z0(game: LinearGame, config: RunConfig, z0: JointPoint | None) -> np.ndarray:
    if z0 is not None:
        return z0.as_array().astype(float)
    rng_point = games_mod.draw_start(game, config.z0_scale, stream=f"z0:{config.seed}")
    return rng_point.as_array()


def _run_loop(
    game: LinearGame,
    config: RunConfig,
    z0: JointPoint | None,
    gap_spec: GapSpec | None,
    gap_every: int,
    selection: modal.ModalSelection | None = None,
) -> TrajectoryLog:
    """Shared driver: steps, cycle averaging, per-iteration logging."""
    config.validate()
    method = config.method
    gamma = config.gamma
    d = game.d
    z = _resolve_z0(game, config, z0)

    use_la = method in (Method.LA, Method.LA_ADAM, Method.MOLA)
    if method is Method.MOLA:
        if selection is None:
            raise ConfigError("MoLA runs need a ModalSelection")
        k, alpha = selection.k, selection.alpha
    elif use_la:
        k, alpha = config.k, config.alpha
    else:
        k, alpha = None, None
    adam_base = method in (Method.ADAM, Method.LA_ADAM)

    spec = gap_spec
    if spec is None:
        spec = GapSpec(box_radius=default_box_radius(JointPoint.from_array(z, d)))

    header = {
        "game": games_mod.to_dict(game),
        "config": {
            "method": method.value,
            "gamma": gamma,
            "T": config.T,
            "k": k,
            "alpha": alpha,
            "seed": config.seed,
            "z0_scale": config.z0_scale,
        },
    }
    if selection is not None:
        header["selection"] = {
            "k": selection.k,
            "alpha": selection.alpha,
            "rho": selection.rho,
            "feasible": selection.feasible,
            "fallback_used": selection.fallback_used,
        }

    log = TrajectoryLog(header=header)
    state = SolverState(z=z, anchor=z.copy())
    avg = np.zeros_like(z)
    evals = 0

    clock = getattr(time, "thread_time", time.process_time)
    cpu0, wall0 = clock(), time.perf_counter()

    for t in range(1, config.T + 1):
        if method is Method.EG:
            state.z = _eg(game, state.z, gamma)
            evals += 2
        elif method is Method.OGD:
            ogd_step(game, state, gamma)
            evals += 1
        elif adam_base:
            adam_step(game, state, gamma, config.adam_beta1, config.adam_beta2,
                      config.adam_eps)
            evals += 1
        else:  # GD base (plain, LA, or MoLA)
            state.z = _gd(game, state.z, gamma)
            evals += 1

        if use_la:
            state.step_in_cycle += 1
            if state.step_in_cycle == k:
                state.z = (1.0 - alpha) * state.anchor + alpha * state.z
                state.anchor = state.z.copy()
                state.step_in_cycle = 0
        avg += (state.z - avg) / t

        dist = float(np.linalg.norm(state.z))
        gap = None
        if gap_every > 0 and t % gap_every == 0:
            gap = restricted_gap(game, JointPoint.from_array(avg, d), spec)
        log.rows.append(LogRow(
            iter=t,
            field_evals=evals,
            cpu_s=clock() - cpu0,
            wall_s=time.perf_counter() - wall0,
            distance=dist,
            gap=gap,
        ))

    log.running_average = JointPoint.from_array(avg, d)
    return log


def la_run(
    game: LinearGame,
    base: str,
    k: int,
    alpha: float,
    gamma: float,
    T: int,
    z0: JointPoint | None = None,
    gap_spec: GapSpec | None = None,
    gap_every: int = 10,
    seed: int = 0,
    z0_scale: float = 1.0,
) -> TrajectoryLog:
    """LookAhead wrapper: k base steps, then pull toward the anchor.

    A trailing partial cycle is left un-averaged (the anchor is discarded).
    ``base`` is "gd" or "adam"; T counts base steps.
    """
    method = Method.LA if base.lower() == "gd" else Method.LA_ADAM
    cfg = RunConfig(method=method, gamma=gamma, T=T, k=k, alpha=alpha,
                    seed=seed, z0_scale=z0_scale)
    return _run_loop(game, cfg, z0, gap_spec, gap_every)


def mola_run(
    game: LinearGame,
    gamma: float,
    T: int,
    k_min: int = modal.DEFAULT_K_MIN,
    k_max: int = modal.DEFAULT_K_MAX,
    alpha_grid=modal.DEFAULT_ALPHA_GRID,
    z0: JointPoint | None = None,
    gap_spec: GapSpec | None = None,
    gap_every: int = 10,
    seed: int = 0,
    z0_scale: float = 1.0,
    all_modes: bool = False,
) -> tuple[modal.ModalSelection, TrajectoryLog]:
    """Tune (k, alpha) once from the exact Jacobian spectrum, then run LA."""
    lam = spectral.eigenvalues(games_mod.jacobian(game))
    selection = modal.choose_modal_params(
        lam, k_min=k_min, k_max=k_max, alpha_grid=alpha_grid, gamma=gamma,
        all_modes=all_modes,
    )
    cfg = RunConfig(method=Method.MOLA, gamma=gamma, T=T, seed=seed,
                    z0_scale=z0_scale)
    log = _run_loop(game, cfg, z0, gap_spec, gap_every, selection=selection)
    return selection, log


def run_method(
    game: LinearGame,
    config: RunConfig,
    z0: JointPoint | None = None,
    gap_spec: GapSpec | None = None,
    gap_every: int = 10,
    k_min: int = modal.DEFAULT_K_MIN,
    k_max: int = modal.DEFAULT_K_MAX,
    alpha_grid=modal.DEFAULT_ALPHA_GRID,
) -> TrajectoryLog:
    """Uniform dispatch; the MoLA branch ignores any user (k, alpha)."""
    config.validate()
    if config.method is Method.MOLA:
        _, log = mola_run(
            game, config.gamma, config.T, k_min=k_min, k_max=k_max,
            alpha_grid=alpha_grid, z0=z0, gap_spec=gap_spec,
            gap_every=gap_every, seed=config.seed, z0_scale=config.z0_scale,
        )
        return log
    return _run_loop(game, config, z0, gap_spec, gap_every)


def la_cycle_operator(game: LinearGame, k: int, alpha: float, gamma: float) -> np.ndarray:
    """Dense matrix of one LA-GD cycle: (1-alpha) I + alpha (I - gamma JF)^k."""
    jf = games_mod.jacobian(game)
    eye = np.eye(jf.shape[0])
    return (1.0 - alpha) * eye + alpha * np.linalg.matrix_power(eye - gamma * jf, k)
