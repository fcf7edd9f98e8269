"""Command line: ``pubgame {simulate,sweep,verify,figures}``.

Settings resolve as flags > YAML config file > built-in defaults. The seed
falls back to the PUBGAME_SEED environment variable when neither flag nor
file sets it. Exit codes: 0 ok, 1 verification failure, 2 bad input or
unwritable output, 3 unsupported combination (e.g. smooth dynamics with PRP).
"""

from __future__ import annotations

import argparse
import copy
import logging
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import DynamicsConfig, run_dynamic
from .errors import UnsupportedConfigurationError
from .experiments import DEFAULT_KS, DEFAULT_LAMBDAS, ExperimentConfig, reproduce_figures, sample_game, sweep
from .model import DistanceSpec, PublishersGame
from .ranking import RankingSpec
from .verification import CHECK_GROUPS, run_checks

log = logging.getLogger("pubgame")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNSUPPORTED = 0, 1, 2, 3
SEED_ENV = "PUBGAME_SEED"

DEFAULTS: dict[str, Any] = {
    "seed": None,
    "out": ".",
    "jobs": 1,
    "game": {
        "n": 2,
        "k": 2,
        "lambda": None,
        "ranking": "linear",
        "slope": None,
        "distance": "sqeuclidean",
        "initial_docs": None,
        "info_need": None,
    },
    "dynamics": {
        "mode": "discrete",
        "epsilon": 1e-6,
        "max_iters": None,
        "boundary": "clamp",
        "gradient": "exact",
        "step_sizes": None,
    },
    "experiment": {
        "x": "lambda",
        "rankings": None,
        "lambdas": list(DEFAULT_LAMBDAS),
        "ks": list(DEFAULT_KS),
        "games_per_cell": 200,
        "bootstrap": 500,
        "confidence": 0.95,
        "figures": ["fig1", "fig2", "fig3"],
    },
    "verify": {"only": None},
}

# argparse dest -> (section or None for top level, key)
FLAG_KEYS = {
    "seed": (None, "seed"),
    "out": (None, "out"),
    "jobs": (None, "jobs"),
    "n": ("game", "n"),
    "k": ("game", "k"),
    "lam": ("game", "lambda"),
    "ranking": ("game", "ranking"),
    "slope": ("game", "slope"),
    "distance": ("game", "distance"),
    "mode": ("dynamics", "mode"),
    "epsilon": ("dynamics", "epsilon"),
    "max_iters": ("dynamics", "max_iters"),
    "boundary": ("dynamics", "boundary"),
    "gradient": ("dynamics", "gradient"),
    "x": ("experiment", "x"),
    "rankings": ("experiment", "rankings"),
    "lambda_grid": ("experiment", "lambdas"),
    "k_grid": ("experiment", "ks"),
    "games_per_cell": ("experiment", "games_per_cell"),
    "bootstrap": ("experiment", "bootstrap"),
    "confidence": ("experiment", "confidence"),
    "figures": ("experiment", "figures"),
    "only": ("verify", "only"),
}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> dict:
    """Read a YAML config and reject unknown keys."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping")
    for key, value in data.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(DEFAULTS[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be a mapping")
            unknown = set(value) - set(DEFAULTS[key])
            if unknown:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
    return data


def dump_config(settings: dict) -> str:
    return yaml.safe_dump(settings, sort_keys=False)


def resolve_settings(args: argparse.Namespace, env: dict | None = None) -> dict:
    settings = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        for key, value in load_config(args.config).items():
            if isinstance(settings[key], dict):
                settings[key].update(value)
            else:
                settings[key] = value
    for dest, (section, key) in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if section is None:
            settings[key] = value
        else:
            settings[section][key] = value
    if settings["seed"] is None:
        env = os.environ if env is None else env
        if env.get(SEED_ENV):
            try:
                settings["seed"] = int(env[SEED_ENV])
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    return settings


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file")
    common.add_argument("--seed", type=_u64, help=f"master seed (fallback: ${SEED_ENV})")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes for batches")
    common.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--n", type=int)
    game.add_argument("--k", type=int)
    game.add_argument("--lambda", dest="lam", type=float)
    game.add_argument("--ranking", choices=["prp", "linear", "softmax", "random"])
    game.add_argument("--slope", type=float, help="linear ranking slope, default 1/n")
    game.add_argument("--distance", choices=["sqeuclidean", "abs1d"])

    dyn = argparse.ArgumentParser(add_help=False)
    dyn.add_argument("--mode", choices=["discrete", "smooth"])
    dyn.add_argument("--epsilon", type=float)
    dyn.add_argument("--max-iters", "--T", dest="max_iters", type=int)
    dyn.add_argument("--boundary", choices=["clamp", "discard"])
    dyn.add_argument("--gradient", choices=["exact", "own-relevance"])

    exp = argparse.ArgumentParser(add_help=False)
    exp.add_argument("--lambda-grid", type=_float_list)
    exp.add_argument("--k-grid", type=_int_list)
    exp.add_argument("--games-per-cell", type=int)
    exp.add_argument("--bootstrap", type=int)
    exp.add_argument("--confidence", type=float)

    parser = argparse.ArgumentParser(prog="pubgame", description="Strategic publishers game simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common, game, dyn], help="run one better-response dynamic")
    p.add_argument("--trace", metavar="PATH", help="trace file (default OUT/trace.jsonl)")
    p = sub.add_parser("sweep", parents=[common, game, dyn, exp], help="sweep lambda or k")
    p.add_argument("--x", choices=["lambda", "k"])
    p.add_argument("--rankings", type=_str_list)
    p = sub.add_parser("verify", parents=[common], help="run the verification table")
    p.add_argument("--only", type=_str_list, help=f"comma list of {','.join(CHECK_GROUPS)}")
    # figure protocols fix n, k/lambda and mode; --epsilon, --T, --gradient still apply
    p = sub.add_parser("figures", parents=[common, dyn, exp], help="write fig1.csv, fig2.csv, fig3.csv")
    p.add_argument("--figures", type=_str_list)
    return parser


def _out_dir(settings: dict) -> Path:
    out = Path(settings["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _ranking_spec(g: dict) -> RankingSpec:
    return RankingSpec(g["ranking"], g["slope"])


def _dynamics_config(settings: dict, seed: int) -> DynamicsConfig:
    d = settings["dynamics"]
    kw = dict(
        mode=d["mode"], epsilon=float(d["epsilon"]), max_iters=d["max_iters"],
        boundary=d["boundary"], gradient=d["gradient"], seed=seed,
    )
    if d["step_sizes"] is not None:
        kw["step_sizes"] = tuple(d["step_sizes"])
    return DynamicsConfig(**kw)


def build_game(settings: dict, rng: np.random.Generator) -> PublishersGame:
    g = settings["game"]
    if g["lambda"] is None:
        raise ConfigError("lambda is required (--lambda or game.lambda)")
    spec = _ranking_spec(g)
    if g["initial_docs"] is not None or g["info_need"] is not None:
        if g["initial_docs"] is None or g["info_need"] is None:
            raise ConfigError("an explicit game needs both initial_docs and info_need")
        return PublishersGame(g["initial_docs"], g["info_need"], float(g["lambda"]), spec, DistanceSpec(g["distance"]))
    if g["distance"] != "sqeuclidean":
        raise ConfigError("sampled games use the squared Euclidean distance")
    return sample_game(int(g["n"]), int(g["k"]), float(g["lambda"]), spec, rng)


def _experiment_config(settings: dict, seed: int, rankings_default) -> ExperimentConfig:
    g, d, e = settings["game"], settings["dynamics"], settings["experiment"]
    if d["step_sizes"] is not None:
        raise ConfigError("custom step sizes are only supported by simulate")
    return ExperimentConfig(
        n=int(g["n"]),
        k=int(g["k"]),
        lam=float(g["lambda"]) if g["lambda"] is not None else 1.0,
        lambdas=tuple(e["lambdas"]),
        ks=tuple(e["ks"]),
        rankings=tuple(e["rankings"] or rankings_default),
        mode=d["mode"],
        games_per_cell=int(e["games_per_cell"]),
        bootstrap=int(e["bootstrap"]),
        confidence=float(e["confidence"]),
        master_seed=seed,
        epsilon=float(d["epsilon"]),
        max_iters=d["max_iters"],
        boundary=d["boundary"],
        gradient=d["gradient"],
        jobs=int(settings["jobs"]),
    )


def cmd_simulate(settings: dict) -> int:
    seed = 0 if settings["seed"] is None else int(settings["seed"])
    game_seq, dyn_seq = np.random.SeedSequence(seed).spawn(2)
    game = build_game(settings, np.random.default_rng(game_seq))
    config = _dynamics_config(settings, seed)
    trace = run_dynamic(game, config, np.random.default_rng(dyn_seq))
    limit = config.iters_for(game.k)
    trace.meta = {"seed": seed, "max_iters_resolved": limit}
    path = Path(settings.get("trace") or _out_dir(settings) / "trace.jsonl")
    try:
        trace.write(path)
    except OSError as exc:
        raise ConfigError(f"cannot write trace {path}: {exc}") from exc
    w = trace.final_welfare
    print(
        f"converged={str(trace.converged).lower()} iters={trace.iterations_used} T={limit} "
        f"publishers_welfare={w.publishers_welfare:.6f} users_welfare={w.users_welfare:.6f} trace={path}"
    )
    return EXIT_OK


def cmd_sweep(settings: dict) -> int:
    seed = 42 if settings["seed"] is None else int(settings["seed"])
    default_rankings = ("prp", "linear", "softmax") if settings["dynamics"]["mode"] == "discrete" else ("linear", "softmax")
    cfg = _experiment_config(settings, seed, default_rankings)
    out = _out_dir(settings)
    summary = sweep(cfg, settings["experiment"]["x"])
    summary.write_csv(out / "sweep.csv")
    summary.write_runs(out / "sweep_runs.jsonl")
    print(summary.to_csv(), end="")
    return EXIT_OK


def cmd_verify(settings: dict) -> int:
    seed = 0 if settings["seed"] is None else int(settings["seed"])
    table = run_checks(only=settings["verify"]["only"], seed=seed)
    print(table.format())
    if table.ok:
        print(f"all {len(table.rows)} checks passed")
        return EXIT_OK
    print(f"{len(table.failures())} of {len(table.rows)} checks FAILED:")
    for r in table.failures():
        print(f"  {r.group}: {r.name} {r.detail}")
    return EXIT_FAIL


def cmd_figures(settings: dict) -> int:
    seed = 42 if settings["seed"] is None else int(settings["seed"])
    cfg = _experiment_config(settings, seed, ("prp", "linear", "softmax"))
    out = _out_dir(settings)
    figures = settings["experiment"]["figures"]
    bad = set(figures) - {"fig1", "fig2", "fig3"}
    if bad:
        raise ConfigError(f"unknown figures {sorted(bad)}")
    reproduce_figures(cfg, out, figures)
    for name in figures:
        print(out / f"{name}.csv")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify, "figures": cmd_figures}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        settings = resolve_settings(args)
        if getattr(args, "trace", None):
            settings["trace"] = args.trace
        if args.print_config:
            settings.pop("trace", None)
            print(dump_config(settings), end="")
            return EXIT_OK
        return COMMANDS[args.command](settings)
    except UnsupportedConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
