"""Benchmark harness: configure experiments, run method comparisons and
ablations, and emit CSV plus SVG charts.

Subcommands: ``run`` (method comparison on one game), ``tune`` (parameter
selection only), ``sweep-rotation`` (selection trends over the rotation
factor), ``hrde`` (continuous-time integration and stability verdicts), and
``plot`` (re-render charts from an existing combined CSV).

Configuration is a flat ``key = value`` text file; every key has a CLI flag
override and precedence is flags > file > defaults.  Exit codes: 0 success,
1 numerical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import games as games_mod
from . import hrde as hrde_mod
from . import metrics as metrics_mod
from . import modal, optimizers, plotting, spectral
from .errors import ConfigError, DivergenceError, MolalabError
from .games import LinearGame
from .optimizers import Method, RunConfig

CSV_COLUMNS = ["method", "repeat", "iter", "field_evals", "cpu_s", "wall_s",
               "distance", "gap"]

_CONFIG_KEYS = [
    "game", "d", "beta", "eta_x", "eta_y", "sigma_min", "sigma_max", "seed",
    "gamma", "iters", "repeats", "methods", "k", "alpha", "out", "plot",
    "log_every", "z0_scale", "embed_matrix", "workers", "box_radius",
    "k_min", "k_max", "alpha_grid",
]

_DEFAULTS = {
    "game": "bilinear",
    "d": 100,
    "beta": 1.0,
    "eta_x": 0.1,
    "eta_y": 0.1,
    "sigma_min": 0.7,
    "sigma_max": 0.9,
    "seed": 0,
    "gamma": 0.01,
    "iters": 1000,
    "repeats": 1,
    "methods": "EG,OGD,LA(40,0.5),MoLA",
    "k": 40,
    "alpha": 0.5,
    "out": "results",
    "plot": False,
    "log_every": 10,
    "z0_scale": 1.0,
    "embed_matrix": False,
    "workers": 1,
    "box_radius": None,
    "k_min": modal.DEFAULT_K_MIN,
    "k_max": modal.DEFAULT_K_MAX,
    "alpha_grid": None,
}


# ---------------------------------------------------------------------------
# Config file handling
# ---------------------------------------------------------------------------

def parse_config(text: str) -> dict:
    """Parse the flat key = value format (hash comments, blank lines ok)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def serialize_config(cfg: dict) -> str:
    """Canonical text form; parse(serialize(parse(f))) is idempotent."""
    lines = []
    for key in _CONFIG_KEYS:
        if key in cfg and cfg[key] is not None:
            lines.append(f"{key} = {cfg[key]}")
    return "\n".join(lines) + "\n"


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


@dataclass
class ExperimentConfig:
    game: LinearGame
    methods: list[tuple[str, RunConfig]]
    iterations: int
    repeats: int
    output_dir: Path
    plot: bool
    log_every: int
    z0_scale: float
    seed: int
    embed_matrix: bool = False
    workers: int = 1
    box_radius: float | None = None
    k_min: int = modal.DEFAULT_K_MIN
    k_max: int = modal.DEFAULT_K_MAX
    alpha_grid: tuple | None = None
    raw: dict = field(default_factory=dict)


def parse_method_spec(spec: str, gamma: float, iters: int, seed: int,
                      z0_scale: float, default_k: int, default_alpha: float,
                      ) -> tuple[str, RunConfig]:
    """One method token, e.g. ``EG`` or ``LA(40,0.5)``."""
    spec = spec.strip()
    name, k, alpha = spec, None, None
    if "(" in spec:
        if not spec.endswith(")"):
            raise ConfigError(f"malformed method spec {spec!r}")
        name, inner = spec[:-1].split("(", 1)
        parts = [p.strip() for p in inner.split(",") if p.strip()]
        if len(parts) != 2:
            raise ConfigError(f"method spec {spec!r} needs (k, alpha)")
        try:
            k, alpha = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"method spec {spec!r}: {exc}") from None
    method = optimizers.parse_method(name)
    if method in (Method.LA, Method.LA_ADAM):
        k = k if k is not None else default_k
        alpha = alpha if alpha is not None else default_alpha
        label = f"{name.strip().upper()}({k},{alpha:g})"
    else:
        if k is not None:
            raise ConfigError(f"method {name!r} does not take (k, alpha)")
        label = name.strip().upper()
        if method is Method.MOLA:
            label = "MoLA"
    cfg = RunConfig(method=method, gamma=gamma, T=iters, k=k, alpha=alpha,
                    seed=seed, z0_scale=z0_scale)
    cfg.validate()
    return label, cfg


def _merged_settings(args: argparse.Namespace) -> dict:
    file_cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        file_cfg = parse_config(path.read_text())
    merged = {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_cfg:
            merged[key] = file_cfg[key]
        else:
            merged[key] = _DEFAULTS[key]
    return merged


def build_game(settings: dict) -> LinearGame:
    kind = str(settings["game"]).strip().lower()
    d = int(settings["d"])
    seed = int(settings["seed"])
    if kind == "bilinear":
        return games_mod.make_bilinear(d, float(settings["beta"]), seed)
    if kind == "scsc":
        return games_mod.make_scsc(
            d, float(settings["eta_x"]), float(settings["eta_y"]),
            float(settings["sigma_min"]), float(settings["sigma_max"]), seed,
        )
    if kind in ("qg", "quadratic_rot", "quadratic-rot"):
        return games_mod.make_quadratic_rot(d, float(settings["beta"]), seed)
    raise ConfigError(f"unknown game family {settings['game']!r}")


def build_experiment(args: argparse.Namespace) -> ExperimentConfig:
    settings = _merged_settings(args)
    if getattr(args, "game_file", None):
        game = games_mod.from_json(Path(args.game_file).read_text())
    else:
        game = build_game(settings)
    gamma = float(settings["gamma"])
    iters = int(settings["iters"])
    repeats = int(settings["repeats"])
    if iters < 1 or repeats < 1:
        raise ConfigError("iters and repeats must be >= 1")
    seed = int(settings["seed"])
    z0_scale = float(settings["z0_scale"])
    method_specs = [s for s in str(settings["methods"]).split(",") if s.strip()]
    # method specs may contain commas inside parentheses; re-join those
    joined, buffer = [], ""
    for token in method_specs:
        buffer = f"{buffer},{token}" if buffer else token
        if buffer.count("(") == buffer.count(")"):
            joined.append(buffer)
            buffer = ""
    if buffer:
        raise ConfigError(f"unbalanced parentheses in methods: {settings['methods']!r}")
    methods = [
        parse_method_spec(spec, gamma, iters, seed, z0_scale,
                          int(settings["k"]), float(settings["alpha"]))
        for spec in joined
    ]
    if not methods:
        raise ConfigError("no methods requested")
    alpha_grid = None
    if settings["alpha_grid"]:
        alpha_grid = tuple(float(v) for v in str(settings["alpha_grid"]).split(","))
    box_radius = settings["box_radius"]
    return ExperimentConfig(
        game=game,
        methods=methods,
        iterations=iters,
        repeats=repeats,
        output_dir=Path(str(settings["out"])),
        plot=_as_bool(settings["plot"]),
        log_every=int(settings["log_every"]),
        z0_scale=z0_scale,
        seed=seed,
        embed_matrix=_as_bool(settings["embed_matrix"]),
        workers=max(1, int(settings["workers"])),
        box_radius=float(box_radius) if box_radius not in (None, "") else None,
        k_min=int(settings["k_min"]),
        k_max=int(settings["k_max"]),
        alpha_grid=alpha_grid,
        raw=settings,
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _format_row(label: str, repeat: int, row) -> list[str]:
    return [
        label,
        str(repeat),
        str(row.iter),
        str(row.field_evals),
        repr(row.cpu_s),
        repr(row.wall_s),
        repr(row.distance),
        "" if row.gap is None else repr(row.gap),
    ]


def write_run_csv(path: Path, label: str, repeat: int, log) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in log.rows:
            writer.writerow(_format_row(label, repeat, row))


def write_combined_csv(path: Path, results: dict) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for (label, repeat) in sorted(results):
            for row in results[(label, repeat)].rows:
                writer.writerow(_format_row(label, repeat, row))


def read_trajectory_csv(path: Path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header in {path}: {reader.fieldnames}")
        for rec in reader:
            rows.append({
                "method": rec["method"],
                "repeat": int(rec["repeat"]),
                "iter": int(rec["iter"]),
                "field_evals": int(rec["field_evals"]),
                "cpu_s": float(rec["cpu_s"]),
                "wall_s": float(rec["wall_s"]),
                "distance": float(rec["distance"]),
                "gap": float(rec["gap"]) if rec["gap"] != "" else None,
            })
    return rows


def _plot_from_rows(rows: list[dict], out_dir: Path) -> list[Path]:
    by_key: dict[tuple, list[dict]] = {}
    for rec in rows:
        by_key.setdefault((rec["method"], rec["repeat"]), []).append(rec)
    iter_series, cpu_series = [], []
    for (label, repeat) in sorted(by_key):
        recs = by_key[(label, repeat)]
        suffix = f" r{repeat}" if repeat else ""
        dists = np.array([r["distance"] for r in recs])
        iter_series.append((label + suffix, np.array([r["iter"] for r in recs]), dists))
        cpu_series.append((label + suffix, np.array([r["cpu_s"] for r in recs]), dists))
    p1 = out_dir / "distance_vs_iter.svg"
    p2 = out_dir / "distance_vs_cpu.svg"
    plotting.plot_distance_curves(str(p1), iter_series, "base iterations",
                                  "distance to equilibrium vs iterations")
    plotting.plot_distance_curves(str(p2), cpu_series, "CPU seconds",
                                  "distance to equilibrium vs CPU time")
    return [p1, p2]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    cfg = build_experiment(args)
    out = cfg.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir: {exc}", file=sys.stderr)
        return 1

    gap_spec = None
    if cfg.box_radius is not None:
        gap_spec = metrics_mod.GapSpec(box_radius=cfg.box_radius)

    def one_run(label: str, run_cfg: RunConfig, repeat: int):
        z0 = games_mod.draw_start(cfg.game, cfg.z0_scale,
                                  stream=f"z0:{cfg.seed}:{repeat}")
        kwargs = {}
        if cfg.alpha_grid is not None:
            kwargs["alpha_grid"] = cfg.alpha_grid
        return optimizers.run_method(
            cfg.game, run_cfg, z0=z0, gap_spec=gap_spec,
            gap_every=cfg.log_every, k_min=cfg.k_min, k_max=cfg.k_max,
            **kwargs,
        )

    jobs = [(label, run_cfg, rep)
            for label, run_cfg in cfg.methods
            for rep in range(cfg.repeats)]
    results = {}
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {
            pool.submit(one_run, label, run_cfg, rep): (label, rep)
            for label, run_cfg, rep in jobs
        }
        for future, key in futures.items():
            results[key] = future.result()

    (out / "game.json").write_text(
        games_mod.to_json(cfg.game, embed_matrix=cfg.embed_matrix) + "\n")
    for (label, repeat), log in sorted(results.items()):
        safe = label.replace("(", "_").replace(")", "").replace(",", "_")
        write_run_csv(out / f"{safe}_r{repeat}.csv", label, repeat, log)
    combined = out / "combined.csv"
    write_combined_csv(combined, results)
    if cfg.plot:
        _plot_from_rows(read_trajectory_csv(combined), out)
    for (label, repeat) in sorted(results):
        log = results[(label, repeat)]
        print(f"{label:>14s} r{repeat}: final distance {log.final_distance:.6e} "
              f"({log.rows[-1].field_evals} field evals)")
    return 0


def _parse_complex_token(token: str) -> complex:
    cleaned = token.strip().replace("i", "j").replace(" ", "")
    if not cleaned:
        raise ConfigError("empty eigenvalue token")
    try:
        return complex(cleaned)
    except ValueError:
        raise ConfigError(f"cannot parse eigenvalue {token!r}") from None


def read_eigenvalue_file(path: Path) -> np.ndarray:
    text = Path(path).read_text()
    tokens = [t for chunk in text.splitlines() for t in chunk.split(",")]
    values = [_parse_complex_token(t) for t in tokens if t.strip()]
    if not values:
        raise ConfigError(f"no eigenvalues found in {path}")
    return np.array(values, dtype=complex)


def cmd_tune(args: argparse.Namespace) -> int:
    settings = _merged_settings(args)
    if args.eigs_file:
        lam = read_eigenvalue_file(Path(args.eigs_file))
    else:
        if getattr(args, "game_file", None):
            game = games_mod.from_json(Path(args.game_file).read_text())
        else:
            game = build_game(settings)
        lam = spectral.eigenvalues(games_mod.jacobian(game))
    gamma = float(settings["gamma"])
    grid = modal.DEFAULT_ALPHA_GRID
    if settings["alpha_grid"]:
        grid = tuple(float(v) for v in str(settings["alpha_grid"]).split(","))
    sel = modal.choose_modal_params(
        lam, k_min=int(settings["k_min"]), k_max=int(settings["k_max"]),
        alpha_grid=grid, gamma=gamma, all_modes=args.all_modes,
    )
    record = {
        "k": sel.k,
        "alpha": sel.alpha,
        "gamma": sel.gamma,
        "rho": sel.rho,
        "feasible": sel.feasible,
        "fallback_used": sel.fallback_used,
        "dominant_re": sel.dominant.real,
        "dominant_im": sel.dominant.imag,
    }
    if args.json:
        print(json.dumps(record, sort_keys=True))
    else:
        width = max(len(k) for k in record)
        for key, value in record.items():
            print(f"{key:<{width}}  {value}")
    return 0


def cmd_sweep_rotation(args: argparse.Namespace) -> int:
    settings = _merged_settings(args)
    d = int(settings["d"])
    seed = int(settings["seed"])
    gamma = float(settings["gamma"])
    betas = [float(b) for b in args.betas.split(",")] if args.betas else [
        round(0.1 * i, 1) for i in range(11)
    ]
    if any(not 0.0 <= b <= 1.0 for b in betas):
        raise ConfigError("beta values must lie in [0, 1]")
    out = Path(str(settings["out"]))
    out.mkdir(parents=True, exist_ok=True)

    records = []
    for beta in betas:
        game = games_mod.make_quadratic_rot(d, beta, seed)
        lam = spectral.eigenvalues(games_mod.jacobian(game))
        sel = modal.choose_modal_params(
            lam, k_min=int(settings["k_min"]), k_max=int(settings["k_max"]),
            gamma=gamma,
        )
        records.append((beta, sel))
        print(f"beta={beta:4.2f}  k*={sel.k:5d}  alpha*={sel.alpha:5.2f}  "
              f"rho*={sel.rho:.3e}  fallback={sel.fallback_used}")

    csv_path = out / "rotation_sweep.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "k", "alpha", "rho", "feasible"])
        for beta, sel in records:
            writer.writerow([repr(beta), sel.k, repr(sel.alpha), repr(sel.rho),
                             sel.feasible])
    if _as_bool(settings["plot"]):
        arr_b = np.array([b for b, _ in records])
        plotting.plot_sweep(str(out / "k_vs_beta.svg"), arr_b,
                            np.array([s.k for _, s in records]),
                            "selected horizon k", logy=True)
        plotting.plot_sweep(str(out / "alpha_vs_beta.svg"), arr_b,
                            np.array([s.alpha for _, s in records]),
                            "selected averaging weight")
    return 0


def cmd_hrde(args: argparse.Namespace) -> int:
    settings = _merged_settings(args)
    if getattr(args, "game_file", None):
        game = games_mod.from_json(Path(args.game_file).read_text())
    else:
        game = build_game(settings)
    gamma = float(settings["gamma"])
    k = int(args.k)
    alpha = float(args.alpha)
    out = Path(str(settings["out"]))
    out.mkdir(parents=True, exist_ok=True)

    z0 = games_mod.draw_start(game, float(settings["z0_scale"]),
                              stream="hrde-z0").as_array()
    v0 = np.zeros_like(z0)
    rhs = hrde_mod.make_la_rhs(game, gamma, k, alpha)

    diverged_early = None
    try:
        sol = hrde_mod.integrate(rhs, z0, v0, args.dt, args.t_end,
                                 record_every=max(1, args.record_every))
    except DivergenceError as exc:
        diverged_early = exc
        sol = None

    if sol is not None:
        csv_path = out / "hrde_trajectory.csv"
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "norm"])
            for i in range(len(sol)):
                writer.writerow([repr(float(sol.times[i])),
                                 repr(float(np.linalg.norm(sol.zs[i])))])

    is_bilinear = game.kind is games_mod.GameKind.BILINEAR
    if k >= 2:
        print(f"averaging_threshold_ok  {hrde_mod.bg_convergence_condition(k, alpha)}")
    if is_bilinear:
        if k == 1 and alpha == 1.0:
            stable = hrde_mod.gd_hrde_stability(game, gamma)
        else:
            stable = hrde_mod.characteristic_stability(game, gamma, k, alpha)
        print(f"characteristic_stable   {stable}")
    if diverged_early is not None:
        print(f"integration_verdict     diverged (blow-up at t={diverged_early.time:.4g})")
    else:
        grew = sol.final_norm() > float(np.linalg.norm(z0))
        print(f"integration_verdict     {'diverged' if grew else 'converged'}")
    if sol is not None and is_bilinear and np.allclose(
            game.coupling, game.coupling.T, atol=1e-10):
        try:
            res = hrde_mod.solution_residual(game, sol, gamma, k, alpha)
            print(f"trajectory_residual     {res:.6e}")
        except MolalabError as exc:
            print(f"trajectory_residual     skipped ({exc})")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    rows = read_trajectory_csv(Path(args.csv))
    out = Path(args.out) if args.out else Path(args.csv).parent
    out.mkdir(parents=True, exist_ok=True)
    for path in _plot_from_rows(rows, out):
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_game_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--game", help="bilinear | scsc | qg")
    parser.add_argument("--game-file", help="serialized game JSON")
    parser.add_argument("--d", type=int)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--eta-x", dest="eta_x", type=float)
    parser.add_argument("--eta-y", dest="eta_y", type=float)
    parser.add_argument("--sigma-min", dest="sigma_min", type=float)
    parser.add_argument("--sigma-max", dest="sigma_max", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--out")
    parser.add_argument("--k-min", dest="k_min", type=int)
    parser.add_argument("--k-max", dest="k_max", type=int)
    parser.add_argument("--alpha-grid", dest="alpha_grid",
                        help="comma-separated averaging weights")
    parser.add_argument("--z0-scale", dest="z0_scale", type=float)
    parser.add_argument("--plot", dest="plot", action="store_const", const=True)
    parser.add_argument("--log-every", dest="log_every", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molalab",
        description="Saddle-point benchmark harness with modal LookAhead tuning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="compare methods on one game")
    _add_game_flags(p_run)
    p_run.add_argument("--methods", help="comma list, e.g. EG,OGD,LA(40,0.5),MoLA")
    p_run.add_argument("--iters", type=int)
    p_run.add_argument("--repeats", type=int)
    p_run.add_argument("--k", type=int, help="default horizon for bare LA")
    p_run.add_argument("--alpha", type=float, help="default weight for bare LA")
    p_run.add_argument("--workers", type=int)
    p_run.add_argument("--box-radius", dest="box_radius", type=float)
    p_run.add_argument("--embed-matrix", dest="embed_matrix",
                       action="store_const", const=True)
    p_run.set_defaults(func=cmd_run)

    p_tune = sub.add_parser("tune", help="select (k, alpha) for a game or spectrum")
    _add_game_flags(p_tune)
    p_tune.add_argument("--eigs-file", help="file of eigenvalues like '0+1i, 0-1i'")
    p_tune.add_argument("--json", action="store_true")
    p_tune.add_argument("--all-modes", action="store_true",
                        help="score the worst mode over the full spectrum")
    p_tune.set_defaults(func=cmd_tune)

    p_sweep = sub.add_parser("sweep-rotation",
                             help="selection trends over the rotation factor")
    _add_game_flags(p_sweep)
    p_sweep.add_argument("--betas", help="comma list in [0, 1]")
    p_sweep.set_defaults(func=cmd_sweep_rotation)

    p_hrde = sub.add_parser("hrde", help="integrate the continuous-time model")
    _add_game_flags(p_hrde)
    p_hrde.add_argument("--k", type=int, default=2)
    p_hrde.add_argument("--alpha", type=float, default=0.4)
    p_hrde.add_argument("--dt", type=float, default=1e-4)
    p_hrde.add_argument("--t-end", dest="t_end", type=float, default=2.0)
    p_hrde.add_argument("--record-every", dest="record_every", type=int, default=1)
    p_hrde.set_defaults(func=cmd_hrde)

    p_plot = sub.add_parser("plot", help="re-render charts from a combined CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--out")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MolalabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
