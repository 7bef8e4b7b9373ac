"""Saddle-point optimization lab.

Game constructors, spectral utilities, the modal LookAhead tuning theory,
discrete solvers, continuous-time stability checks, and convergence metrics.
The ``molalab`` command drives benchmark experiments on top of the library.
"""

from . import games, hrde, metrics, modal, optimizers, spectral
from .errors import (
    ConfigError,
    DivergenceError,
    EmptyInputError,
    InvalidDimensionError,
    InvalidRangeError,
    MolalabError,
    NumericalError,
    ShapeError,
    UnsupportedGameError,
)
from .games import JointPoint, LinearGame, make_bilinear, make_quadratic_rot, make_scsc
from .metrics import GapSpec, TrajectoryLog
from .modal import BudgetResult, ModalSelection, choose_modal_params
from .optimizers import Method, RunConfig, mola_run, run_method

__all__ = [
    "games", "hrde", "metrics", "modal", "optimizers", "spectral",
    "JointPoint", "LinearGame", "make_bilinear", "make_scsc",
    "make_quadratic_rot", "GapSpec", "TrajectoryLog", "BudgetResult",
    "ModalSelection", "choose_modal_params", "Method", "RunConfig",
    "mola_run", "run_method",
    "MolalabError", "ConfigError", "DivergenceError", "EmptyInputError",
    "InvalidDimensionError", "InvalidRangeError", "NumericalError",
    "ShapeError", "UnsupportedGameError",
]

__version__ = "0.1.0"
