"""TOML experiment configuration.

Sections and keys (all optional; defaults in brackets)::

    [domain]          Lx [1.0], Ly [1.0], rho0 [1.0], M1
    [material]        mu [0.2], lambda [0.3], t [0.1], l0 [0.1], l1, l2,
                      alpha0 [1e-12], gamma0 [1e-12], q8_fraction [0.6]
    [load]            P0 [[0.5, 0.5]], f_bar [1.0], d [0.2]
    [discretization]  degree [5], n_spans [32], quad_order, workers [1],
                      solver ["cholesky"]
    [kappa]           truth [expression], kbar [2.0], s [0.5],
                      family ["expr" | "constant" | "bump" | "random"],
                      base [0.4], amplitude [0.1], width [0.15], modes [3]
    [inverse]         sigma [0.125], coarsen [4], alpha [1e-14], alphas,
                      mode ["exclude"], n_samples [48], noise_spans [8],
                      eps [0.0], seed [0], measurement
    [sweep]           eps [[1e-6, 1e-5, 1e-4, 1e-3]], seeds [[0, 1, 2]],
                      shifts, workers [1]
    [ucp]             tau [0.05], margin_factor [4.0], n_centers [13], p [2.0],
                      etas [[1e-8, 1e-6, 1e-4]], frequency_ratio [false]
    [norms]           n_cells [16], order [4], n_theta [48], n_radial [16],
                      delta_cut, margin [0.0]
    [output]          dir ["out"]

``mu``, ``lambda`` and ``kappa.truth`` accept a number, an expression in
``x`` and ``y`` or an inline table ``{grid = "file.txt"}``.  Relative grid
paths resolve against the config file's directory.
"""
import copy
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

DEFAULTS = {
    "domain": {"Lx": 1.0, "Ly": 1.0, "rho0": 1.0, "M1": None},
    "material": {"mu": 0.2, "lambda": 0.3, "t": 0.1, "l0": 0.1, "l1": None, "l2": None,
                 "alpha0": 1e-12, "gamma0": 1e-12, "q8_fraction": 0.6},
    "load": {"P0": [0.5, 0.5], "f_bar": 1.0, "d": 0.2},
    "discretization": {"degree": 5, "n_spans": 32, "quad_order": None, "workers": 1,
                       "solver": "cholesky"},
    "kappa": {"truth": "0.4 + 0.15*sin(pi*x)*cos(pi*y) + 0.1*x*y", "kbar": 2.0, "s": 0.5,
              "family": "expr", "base": 0.4, "amplitude": 0.1, "width": 0.15, "modes": 3},
    "inverse": {"sigma": 0.125, "coarsen": 4, "alpha": 1e-14,
                "alphas": [1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2],
                "mode": "exclude", "n_samples": 48, "noise_spans": 8, "eps": 0.0, "seed": 0,
                "measurement": None},
    "sweep": {"eps": [1e-6, 1e-5, 1e-4, 1e-3], "seeds": [0, 1, 2],
              "shifts": [1e-4, 1e-3, 1e-2, 1e-1], "workers": 1},
    "ucp": {"tau": 0.05, "margin_factor": 4.0, "n_centers": 13, "p": 2.0,
            "etas": [1e-8, 1e-6, 1e-4], "frequency_ratio": False},
    "norms": {"n_cells": 16, "order": 4, "n_theta": 48, "n_radial": 16, "delta_cut": None,
              "margin": 0.0},
    "output": {"dir": "out"},
}


def merge(base, override):
    out = copy.deepcopy(base)
    for section, values in override.items():
        if section not in out:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"section [{section}] must be a table")
        unknown = set(values) - set(out[section])
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        out[section].update(values)
    return out


def load_config(path=None, overrides=None):
    """Read a TOML file (or nothing) on top of the defaults.

    Returns ``(config_dict, base_dir)``.
    """
    data = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base_dir = path.resolve().parent
    cfg = merge(DEFAULTS, data)
    if overrides:
        cfg = merge(cfg, overrides)
    _validate(cfg)
    return cfg, base_dir


def _validate(cfg):
    eps = cfg["sweep"]["eps"]
    if any(e <= 0 for e in eps):
        raise ConfigError("sweep noise levels must be positive")
    if list(eps) != sorted(eps):
        raise ConfigError("sweep noise levels must be sorted ascending")
    if len(cfg["load"]["P0"]) != 2:
        raise ConfigError("load.P0 must have two coordinates")
    if cfg["inverse"]["mode"] not in ("exclude", "include"):
        raise ConfigError("inverse.mode must be 'exclude' or 'include'")
    if cfg["discretization"]["solver"] not in ("cholesky", "cg"):
        raise ConfigError("discretization.solver must be 'cholesky' or 'cg'")
    if cfg["kappa"]["family"] not in ("expr", "constant", "bump", "random"):
        raise ConfigError("kappa.family must be expr, constant, bump or random")
    if len(cfg["sweep"]["seeds"]) == 0:
        raise ConfigError("sweep needs at least one seed")
    if not 0 < cfg["kappa"]["s"] < 1:
        raise ConfigError("kappa.s must lie in (0, 1)")
