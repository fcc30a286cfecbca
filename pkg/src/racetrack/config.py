"""Run configuration: one JSON document, individual keys overridable from the CLI."""

from __future__ import annotations

import copy
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import Dynamics, DynamicsConfig
from .equilibrium import ModelParams
from .kernel import CONVOLVE_METHODS, Grid
from .spectral import ModelVariant

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "apply_override", "run_seed"]

U64 = 2**64


class ConfigError(ValueError):
    """Invalid user configuration (maps to exit code 2)."""


DEFAULTS = {
    "variant": "QLLU_AD",
    "params": ModelParams().to_dict(),
    "dynamics": {
        "dt": 0.01,
        "max_steps": 50_000_000,
        "tol": 1e-11,
        "perturbation_amplitude": 1e-3,
        "rng_seed": 0,
    },
    "grid": {"n_nodes": 256},
    "seeds": 1,
    "axes": {"sigma": None, "tau": None},
    "spectral": {
        "k": [1],
        "tau": None,
        "sigma": None,
        "tau_range": [0.01, 5.0],
        "k_max": 32,
    },
    "peak_factor": 1.5,
    "method": "recursive",
    "workers": 1,
    "out": "out",
}

# bare keys accepted by --set, resolved to their section
_SECTIONS = ("params", "dynamics", "grid", "spectral", "axes")
_ALIASES = {"seed": ("dynamics", "rng_seed"), "eps": ("dynamics", "perturbation_amplitude")}


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, assignment: str) -> dict:
    """Apply one ``key=value`` override; ``value`` is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    value = _parse_value(raw.strip())
    if "." in key:
        path = key.split(".")
    elif key in _ALIASES:
        path = list(_ALIASES[key])
    elif key in doc and not isinstance(doc[key], dict):
        path = [key]
    else:
        hits = [s for s in _SECTIONS if key in doc[s]]
        if not hits:
            raise ConfigError(f"unknown configuration key {key!r}")
        path = [hits[0], key]
    doc = copy.deepcopy(doc)
    node = doc
    for part in path[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown configuration key {key!r}")
        node = node[part]
    if path[-1] not in node:
        raise ConfigError(f"unknown configuration key {key!r}")
    node[path[-1]] = value
    return doc


def load_config(path: str | Path | None = None, overrides=()) -> dict:
    """Read a JSON config (or a ``meta.json`` echo) and apply ``key=value`` overrides."""
    doc = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        if "config" in user and "steps_taken" in user:
            user = user["config"]
        doc = _merge(doc, user)
    for item in overrides:
        doc = apply_override(doc, item)
    return doc


def run_seed(base: int, index: int) -> int:
    return (int(base) + int(index)) % U64


def _float_list(value, name):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        value = [value]
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number or a list of numbers") from None
    if not out or not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must be a non-empty list of finite numbers")
    return out


@dataclass
class RunConfig:
    """Validated configuration."""

    params: ModelParams
    dynamics: DynamicsConfig
    grid: Grid
    variant: ModelVariant
    seeds: list
    sigma_axis: list | None = None
    tau_axis: list | None = None
    k_list: list = field(default_factory=lambda: [1])
    spectral_tau: list | None = None
    spectral_sigma: list | None = None
    tau_range: tuple = (0.01, 5.0)
    k_max: int = 32
    peak_factor: float = 1.5
    method: str = "recursive"
    workers: int = 1
    out: str = "out"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            variant = ModelVariant.parse(doc["variant"])
            params = ModelParams(**doc["params"])
            grid = Grid(doc["grid"]["n_nodes"], params.rho)
            dyn = dict(doc["dynamics"])
            dyn["dynamics"] = (Dynamics.ADVECTION_DIFFUSION if variant.is_advection_diffusion
                               else Dynamics.REPLICATOR)
            dynamics = DynamicsConfig(**dyn)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

        seeds = doc["seeds"]
        if isinstance(seeds, bool):
            raise ConfigError("seeds must be a count or a list of integers")
        if isinstance(seeds, int):
            if seeds < 1:
                raise ConfigError("seed count must be at least 1")
            seeds = [run_seed(dynamics.rng_seed, i) for i in range(seeds)]
        elif isinstance(seeds, list) and seeds and all(
                isinstance(s, int) and not isinstance(s, bool) and 0 <= s < U64 for s in seeds):
            seeds = list(seeds)
        else:
            raise ConfigError("seeds must be a positive count or a list of unsigned 64-bit integers")

        spectral = doc["spectral"]
        k_list = spectral["k"]
        if isinstance(k_list, int):
            k_list = [k_list]
        if (not isinstance(k_list, list) or not k_list
                or not all(isinstance(k, int) and not isinstance(k, bool) and k != 0 for k in k_list)):
            raise ConfigError("spectral.k must be a list of non-zero integers")
        tau_range = spectral["tau_range"]
        if (not isinstance(tau_range, (list, tuple)) or len(tau_range) != 2
                or not all(isinstance(t, (int, float)) for t in tau_range)
                or not 0 < tau_range[0] < tau_range[1] or not math.isfinite(tau_range[1])):
            raise ConfigError("spectral.tau_range must be [lo, hi] with 0 < lo < hi")
        k_max = spectral["k_max"]
        if not isinstance(k_max, int) or k_max < 1:
            raise ConfigError("spectral.k_max must be a positive integer")

        peak = doc["peak_factor"]
        if not isinstance(peak, (int, float)) or not peak > 1:
            raise ConfigError("peak_factor must exceed 1")
        if doc["method"] not in CONVOLVE_METHODS:
            raise ConfigError(f"method must be one of {CONVOLVE_METHODS}")
        workers = doc["workers"]
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError("workers must be a positive integer")

        cfg = cls(
            params=params,
            dynamics=dynamics,
            grid=grid,
            variant=variant,
            seeds=seeds,
            sigma_axis=_float_list(doc["axes"]["sigma"], "axes.sigma"),
            tau_axis=_float_list(doc["axes"]["tau"], "axes.tau"),
            k_list=k_list,
            spectral_tau=_float_list(spectral["tau"], "spectral.tau"),
            spectral_sigma=_float_list(spectral["sigma"], "spectral.sigma"),
            tau_range=(float(tau_range[0]), float(tau_range[1])),
            k_max=k_max,
            peak_factor=float(peak),
            method=doc["method"],
            workers=workers,
            out=str(doc["out"]),
        )
        for s in (cfg.sigma_axis or []) + (cfg.spectral_sigma or []):
            if s <= 1:
                raise ConfigError(f"sigma values must exceed 1, got {s}")
        for t in (cfg.tau_axis or []) + (cfg.spectral_tau or []):
            if t < 0:
                raise ConfigError(f"tau values must be non-negative, got {t}")
        return cfg

    def check_simulation(self) -> None:
        """Extra checks needed before time integration."""
        if self.variant.is_cp:
            raise ConfigError("time simulation is only available for QLLU_AD and QLLU_R")
        try:
            self.dynamics.check_stability(self.params, self.grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def for_run(self, sigma: float, tau: float, seed: int) -> "RunConfig":
        """Single-run copy used for the ``meta.json`` echo."""
        try:
            params = self.params.replace(sigma=sigma, tau=tau)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return dataclasses.replace(
            self,
            params=params,
            dynamics=self.dynamics.replace(rng_seed=seed),
            seeds=[seed],
            sigma_axis=None,
            tau_axis=None,
        )

    def to_dict(self) -> dict:
        dyn = self.dynamics.to_dict()
        dyn.pop("dynamics")
        return {
            "variant": self.variant.value,
            "params": self.params.to_dict(),
            "dynamics": dyn,
            "grid": {"n_nodes": self.grid.n_nodes},
            "seeds": list(self.seeds),
            "axes": {"sigma": self.sigma_axis, "tau": self.tau_axis},
            "spectral": {
                "k": list(self.k_list),
                "tau": self.spectral_tau,
                "sigma": self.spectral_sigma,
                "tau_range": list(self.tau_range),
                "k_max": self.k_max,
            },
            "peak_factor": self.peak_factor,
            "method": self.method,
            "workers": self.workers,
            "out": self.out,
        }
