"""Run configuration: line-oriented key-value files with section headers.

Every key is optional; defaults reproduce the calibration protocol used
throughout (9 load levels from 20 to 100 MPa, 20 stabilization cycles,
10 synthetic realizations, run-out cap at 2e6 cycles).  A commented
reference file ships at the repository root as ``porelife.conf.example``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .field import DEFAULT_SHELLS, PoreFieldStats
from .material_point import ALSI7MG, ChabocheParams
from .strain_life import StrainLifeParams
from .weakest_link import DEFAULT_RUNOUT_CYCLES, WOHLER_QUANTILES
from .optimize import PARAM_ORDER


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


DEFAULT_LOAD_LEVELS = tuple(float(x) for x in np.linspace(20.0, 100.0, 9))

#: Fallback fatigue parameters; a plausible cast-aluminium curve that keeps
#: predicted lifetimes in a testable window over the default level grid.
DEFAULT_FATIGUE = StrainLifeParams(m=2.0, A=0.025, alpha=0.2, B=0.0, beta=0.0, C=3e-4, V0=593.0)


@dataclass(eq=False)
class RunConfig:
    """Everything a pipeline command needs beyond its file arguments."""

    material: ChabocheParams = ALSI7MG
    fatigue: StrainLifeParams = DEFAULT_FATIGUE
    free_mask: tuple = (True, True, False, True, False, True)
    load_levels: tuple = DEFAULT_LOAD_LEVELS
    n_k: int = 10
    n_cycles: int = 20
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES
    seed: int = 0
    n_starts: int = 5
    budget: int = 400
    samples_per_struct: int = 1000
    quantiles: tuple = WOHLER_QUANTILES
    cycle_samples: int = 40
    pores: PoreFieldStats = PoreFieldStats()
    shells: int = DEFAULT_SHELLS
    paths: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        levels = tuple(float(x) for x in self.load_levels)
        if not levels:
            raise ConfigError("load_levels must not be empty")
        if any(x <= 0 for x in levels):
            raise ConfigError("load levels must be positive")
        if any(nxt <= cur for cur, nxt in zip(levels, levels[1:])):
            raise ConfigError(f"load levels must be strictly ascending, got {levels}")
        self.load_levels = levels
        if self.n_k < 1:
            raise ConfigError("n_k must be at least 1")
        if self.n_cycles < 1:
            raise ConfigError("n_cycles must be at least 1")
        if self.runout_cycles <= 0:
            raise ConfigError("N_max must be positive")


def _get(parser, section, key, cast, default):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc
    return default


def _float_list(raw: str):
    return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())


def load_config(path=None) -> RunConfig:
    """Read a config file; a missing path yields pure defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    try:
        material = ChabocheParams(
            E=_get(parser, "material", "E", float, ALSI7MG.E),
            nu=_get(parser, "material", "nu", float, ALSI7MG.nu),
            sigma_y=_get(parser, "material", "sigma_y", float, ALSI7MG.sigma_y),
            b=_get(parser, "material", "b", float, ALSI7MG.b),
            Q=_get(parser, "material", "Q", float, ALSI7MG.Q),
            C_kin=_get(parser, "material", "C_kin", float, ALSI7MG.C_kin),
            D=_get(parser, "material", "D", float, ALSI7MG.D),
        )
        fatigue = StrainLifeParams(
            m=_get(parser, "fatigue", "m", float, DEFAULT_FATIGUE.m),
            A=_get(parser, "fatigue", "A", float, DEFAULT_FATIGUE.A),
            B=_get(parser, "fatigue", "B", float, DEFAULT_FATIGUE.B),
            alpha=_get(parser, "fatigue", "alpha", float, DEFAULT_FATIGUE.alpha),
            beta=_get(parser, "fatigue", "beta", float, DEFAULT_FATIGUE.beta),
            C=_get(parser, "fatigue", "C", float, DEFAULT_FATIGUE.C),
            V0=_get(parser, "fatigue", "V0", float, DEFAULT_FATIGUE.V0),
        )
        free_raw = _get(parser, "fatigue", "free", str, "m, A, alpha, C")
        names = [s.strip() for s in free_raw.split(",") if s.strip()]
        unknown = [n for n in names if n not in PARAM_ORDER]
        if unknown:
            raise ConfigError(f"unknown free parameter names: {unknown}")
        free_mask = tuple(name in names for name in PARAM_ORDER)

        pores = PoreFieldStats(
            pore_density=_get(parser, "pores", "density", float, PoreFieldStats().pore_density),
            radius_median_um=_get(parser, "pores", "radius_median_um", float, 70.0),
            radius_log_sd=_get(parser, "pores", "radius_log_sd", float, 0.35),
            accept_radius_um=_get(parser, "pores", "accept_radius_um", float, 50.0),
            gauge_radius_mm=_get(parser, "pores", "gauge_radius_mm", float, 3.072),
            gauge_length_mm=_get(parser, "pores", "gauge_length_mm", float, 20.0),
            surface_kt_boost=_get(parser, "pores", "surface_kt_boost", float, 1.25),
        )
        config = RunConfig(
            material=material,
            fatigue=fatigue,
            free_mask=free_mask,
            load_levels=_get(parser, "protocol", "load_levels", _float_list, DEFAULT_LOAD_LEVELS),
            n_k=_get(parser, "protocol", "n_k", int, 10),
            n_cycles=_get(parser, "protocol", "n_cycles", int, 20),
            runout_cycles=_get(parser, "protocol", "N_max", float, DEFAULT_RUNOUT_CYCLES),
            seed=_get(parser, "protocol", "seed", int, 0),
            n_starts=_get(parser, "protocol", "n_starts", int, 5),
            budget=_get(parser, "protocol", "budget", int, 400),
            samples_per_struct=_get(parser, "protocol", "samples_per_struct", int, 1000),
            quantiles=_get(parser, "protocol", "quantiles", _float_list, WOHLER_QUANTILES),
            cycle_samples=_get(parser, "protocol", "cycle_samples", int, 40),
            pores=pores,
            shells=_get(parser, "pores", "shells", int, DEFAULT_SHELLS),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if parser.has_section("paths"):
        for key, value in parser.items("paths"):
            resolved = (path.parent / value).resolve() if not Path(value).is_absolute() else Path(value)
            if not resolved.exists():
                raise ConfigError(f"[paths] {key}: {resolved} does not exist")
            config.paths[key] = resolved
    return config


def fatigue_as_dict(params: StrainLifeParams) -> dict:
    """Flat key-value record of the fatigue model (config serialization order)."""
    return {
        "m": params.m,
        "A": params.A,
        "alpha": params.alpha,
        "B": params.B,
        "beta": params.beta,
        "C": params.C,
        "V0": params.V0,
    }


def fatigue_from_dict(record: dict) -> StrainLifeParams:
    return StrainLifeParams(
        m=float(record["m"]),
        A=float(record["A"]),
        alpha=float(record["alpha"]),
        B=float(record.get("B", 0.0)),
        beta=float(record.get("beta", 0.0)),
        C=float(record.get("C", 0.0)),
        V0=float(record.get("V0", 593.0)),
    )
