"""Run configuration and manifests.

Configs are flat INI files with typed sections (model, grid, solver,
dynamics, experiment).  Unknown sections or keys are hard errors: a typo in
a physics parameter must never fall back to a silent default.  All floats
in emitted artifacts carry 17 significant digits, which round-trips IEEE
doubles exactly, so a re-run from the same config and seed reproduces every
CSV byte for byte.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import time
from dataclasses import dataclass, field

from . import __version__ as _version
from .grids import Grid, build_grid
from .params import ModelParams


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """17-significant-digit float formatting (exact double round-trip)."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int,)):
        return str(x)
    return f"{x:.17g}"


_SCHEMA = {
    "model": {
        "dimension": int, "gamma": float, "alpha": float, "p": float,
        "omega": float, "potential": str,
    },
    "grid": {
        "kind": str, "radius": float, "nodes": int,
    },
    "solver": {
        "method": str, "tol": float, "max_iter": int, "richardson": bool,
    },
    "dynamics": {
        "dt": float, "t_max": float, "sample_every": int,
        "conservation_tol": float,
    },
    "experiment": {
        "lambda0": float, "cutoff_radius": float, "omega_list": str,
        "n_samples": int, "seed": int, "workers": int,
        "bracket_tol": float,
    },
}

_DEFAULTS = {
    "model": {"dimension": 1, "potential": "inverse_power"},
    "grid": {"kind": "line1d", "nodes": 4096, "radius": None},
    "solver": {"method": "gradient_flow", "tol": 1e-11, "max_iter": 20000,
               "richardson": True},
    "dynamics": {"dt": 1e-4, "t_max": 1.0, "sample_every": 20,
                 "conservation_tol": 1e-6},
    "experiment": {"lambda0": 1.2, "cutoff_radius": None, "omega_list": "",
                   "n_samples": 10000, "seed": 7, "workers": 1,
                   "bracket_tol": 1e-3},
}

_REQUIRED = {"model": ("gamma", "alpha", "p", "omega")}


@dataclass
class RunConfig:
    model: ModelParams
    grid_kind: str
    grid_radius: float | None
    grid_nodes: int
    solver_method: str
    solver_tol: float
    solver_max_iter: int
    solver_richardson: bool
    dt: float
    t_max: float
    sample_every: int
    conservation_tol: float
    lambda0: float
    cutoff_radius: float | None
    omega_list: list
    n_samples: int
    seed: int
    workers: int
    bracket_tol: float
    raw: dict = field(default_factory=dict)

    def domain_radius(self, omega: float | None = None) -> float:
        """Configured radius, or 20x the ground-state width 1/sqrt(omega)."""
        if self.grid_radius is not None:
            return self.grid_radius
        om = self.model.omega if omega is None else omega
        return 20.0 / math.sqrt(max(om, 1e-6))

    def make_grid(self, omega: float | None = None) -> Grid:
        return build_grid(self.grid_kind, self.model.dimension,
                          self.domain_radius(omega), self.grid_nodes)

    def cutoff(self, width: float) -> float:
        return self.cutoff_radius if self.cutoff_radius is not None \
            else 10.0 * width


def _coerce(section: str, key: str, raw: str):
    typ = _SCHEMA[section][key]
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: expected {typ.__name__}") from exc


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a config file; overrides are dotted keys like
    'dynamics.dt' (used for the CLI flags)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    values: dict = {s: dict(d) for s, d in _DEFAULTS.items()}
    seen_any = False
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[section][key] = _coerce(section, key, raw)
            seen_any = True
    if not seen_any:
        raise ConfigError(f"config {path} defines no recognized keys")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in values[section]:
                raise ConfigError(f"missing required key {key!r} in [{section}]")
    for dotted, val in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override {dotted!r}")
        values[section][key] = _coerce(section, key, str(val))

    m = values["model"]
    model = ModelParams(dimension=m["dimension"], gamma=m["gamma"],
                        alpha=m["alpha"], p=m["p"], omega=m["omega"],
                        potential_kind=m["potential"])
    omegas = [float(t) for t in values["experiment"]["omega_list"].replace(",", " ").split()]
    g, s, d, e = values["grid"], values["solver"], values["dynamics"], values["experiment"]
    return RunConfig(
        model=model, grid_kind=g["kind"], grid_radius=g["radius"],
        grid_nodes=g["nodes"], solver_method=s["method"], solver_tol=s["tol"],
        solver_max_iter=s["max_iter"], solver_richardson=s["richardson"],
        dt=d["dt"], t_max=d["t_max"], sample_every=d["sample_every"],
        conservation_tol=d["conservation_tol"], lambda0=e["lambda0"],
        cutoff_radius=e["cutoff_radius"], omega_list=omegas,
        n_samples=e["n_samples"], seed=e["seed"], workers=e["workers"],
        bracket_tol=e["bracket_tol"], raw=values)


def dump_config(cfg: RunConfig) -> str:
    """Config snapshot as INI text (17-digit floats; round-trip exact)."""
    lines = []
    for section, keys in cfg.raw.items():
        lines.append(f"[{section}]")
        for key, val in keys.items():
            if val is None:
                continue
            lines.append(f"{key} = {fmt(val) if isinstance(val, float) else val}")
        lines.append("")
    return "\n".join(lines)


@dataclass
class RunManifest:
    tool_version: str
    subcommand: str
    config_snapshot: dict
    overrides: dict
    seed: int
    out_dir: str
    artifacts: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    wallclock_s: float = 0.0
    status: str = "incomplete"

    def add_artifact(self, path: str):
        self.artifacts.append(os.path.relpath(path, self.out_dir))

    def save(self) -> str:
        path = os.path.join(self.out_dir, "manifest.json")
        payload = {
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "config": self.config_snapshot,
            "overrides": self.overrides,
            "seed": self.seed,
            "artifacts": self.artifacts,
            "verdicts": self.verdicts,
            "wallclock_s": self.wallclock_s,
            "status": self.status,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, default=fmt)
        return path


def load_manifest(out_dir: str) -> dict:
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


def new_manifest(subcommand: str, cfg: RunConfig, out_dir: str,
                 overrides: dict | None = None) -> RunManifest:
    os.makedirs(out_dir, exist_ok=True)
    return RunManifest(tool_version=_version, subcommand=subcommand,
                       config_snapshot=cfg.raw, overrides=overrides or {},
                       seed=cfg.seed, out_dir=out_dir)


def write_csv(path: str, header: list, rows) -> str:
    """Two-dimensional CSV with 17-digit floats; deterministic bytes."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) if isinstance(x, float) else str(x)
                              for x in row) + "\n")
    return path


def write_plot_data(path: str, x, y, comment: str = "") -> str:
    """Two-column whitespace text for gnuplot-style consumption."""
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for xi, yi in zip(x, y):
            fh.write(f"{fmt(float(xi))} {fmt(float(yi))}\n")
    return path


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False
