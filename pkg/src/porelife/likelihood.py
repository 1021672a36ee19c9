"""Censored log-likelihood of fatigue observations.

Three regimes share one set of Weibull building blocks: homogeneous
specimens (uniform elastic stress in the gauge), heterogeneous specimens
with a known per-element criterion table, and specimens whose pore
distribution is unknown, where the likelihood marginalizes over a set of
synthetic realizations by Monte Carlo averaging of the per-realization
densities.  Run-outs contribute their survival probability at the test cap.
A small floor inside every logarithm keeps the objective finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .field import CriterionTable
from .strain_life import StrainLifeParams, element_scale_array
from .weakest_link import DEFAULT_RUNOUT_CYCLES, StructureLifetime, structure_scale

OBSERVATIONS_HEADER = "sigma_a_MPa,n_cycles,censored"

#: Floor added inside every log term.
LOG_FLOOR = 1e-10

#: Default Young's modulus for mapping stress amplitudes to strain on
#: homogeneous specimens (the cast Al-Si7Mg value).
DEFAULT_YOUNGS_MODULUS = 75500.0


@dataclass(frozen=True)
class FatigueObservation:
    """One experimental point: amplitude, cycles, run-out flag."""

    sigma_a: float
    n_cycles: float
    censored: bool = False

    def __post_init__(self):
        if self.sigma_a <= 0.0:
            raise ValueError(f"sigma_a must be positive, got {self.sigma_a}")
        if self.n_cycles <= 0.0:
            raise ValueError(f"n_cycles must be positive, got {self.n_cycles}")


def load_observations(path) -> list[FatigueObservation]:
    """Parse an observations CSV (``sigma_a_MPa,n_cycles,censored``)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header_seen = False
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != OBSERVATIONS_HEADER:
                    raise ValueError(f"{path}:{line_no}: expected header '{OBSERVATIONS_HEADER}'")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{line_no}: expected 3 columns, got {len(parts)}")
            try:
                out.append(
                    FatigueObservation(
                        sigma_a=float(parts[0]),
                        n_cycles=float(parts[1]),
                        censored=bool(int(parts[2])),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
    if not out:
        raise ValueError(f"{path}: no observations found")
    return out


def save_observations(path, observations: Sequence[FatigueObservation]) -> None:
    lines = [OBSERVATIONS_HEADER]
    for obs in observations:
        lines.append(f"{float(obs.sigma_a)!r},{float(obs.n_cycles)!r},{int(obs.censored)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Specimen models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Homogeneous:
    """Uniformly stressed gauge volume; amplitude maps to strain by Hooke."""

    volume: float
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS

    def __post_init__(self):
        if self.volume <= 0.0 or self.youngs_modulus <= 0.0:
            raise ValueError("volume and modulus must be positive")


@dataclass(frozen=True, eq=False)
class Heterogeneous:
    """Known per-element criterion table of one specimen."""

    table: CriterionTable


@dataclass(frozen=True, eq=False)
class UnknownPores:
    """Synthetic realizations standing in for an unknown pore distribution."""

    tables: tuple[CriterionTable, ...]

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        if len(self.tables) < 1:
            raise ValueError("need at least one synthetic table")


SpecimenModel = Homogeneous | Heterogeneous | UnknownPores


def _table_structure(params: StrainLifeParams, table: CriterionTable, sigma_a: float) -> StructureLifetime:
    delta = table.interpolate(sigma_a)
    scales = element_scale_array(params, delta, table.volumes)
    return StructureLifetime(scale=structure_scale(scales, params.m), shape=params.m)


def _homogeneous_structure(params: StrainLifeParams, model: Homogeneous, sigma_a: float) -> StructureLifetime:
    delta = 2.0 * sigma_a / model.youngs_modulus
    scale = element_scale_array(params, np.array([delta]), np.array([model.volume]))[0]
    return StructureLifetime(scale=float(scale), shape=params.m)


def structure_for(params: StrainLifeParams, model: SpecimenModel, sigma_a: float):
    """Structure lifetime distribution(s) of a specimen model at an amplitude.

    Returns one :class:`StructureLifetime` for ``Homogeneous``/``Heterogeneous``
    and a list (one per synthetic realization) for ``UnknownPores``.
    """
    if sigma_a <= 0.0:
        raise ValueError("sigma_a must be positive")
    if isinstance(model, Homogeneous):
        return _homogeneous_structure(params, model, sigma_a)
    if isinstance(model, Heterogeneous):
        return _table_structure(params, model.table, sigma_a)
    if isinstance(model, UnknownPores):
        return [_table_structure(params, t, sigma_a) for t in model.tables]
    raise TypeError(f"unknown specimen model {type(model).__name__}")


# ---------------------------------------------------------------------------
# Log-likelihood terms
# ---------------------------------------------------------------------------

def weibull_density_value(scale: float, shape: float, n: float) -> float:
    """Weibull density, overflow-safe, exactly 0 for infinite scale."""
    if math.isinf(scale):
        return 0.0
    log_r = math.log(n) - math.log(scale)
    exponent = shape * log_r
    t = math.exp(exponent) if exponent < 700.0 else math.inf
    if math.isinf(t):
        return 0.0
    return shape / scale * math.exp((shape - 1.0) * log_r) * math.exp(-t)


def weibull_survival_value(scale: float, shape: float, n: float) -> float:
    """Weibull survival probability, exactly 1 for infinite scale."""
    if math.isinf(scale):
        return 1.0
    exponent = shape * (math.log(n) - math.log(scale))
    t = math.exp(exponent) if exponent < 700.0 else math.inf
    return math.exp(-t) if not math.isinf(t) else 0.0


def failure_term(scale: float, shape: float, n_cycles: float) -> float:
    """log(density + floor) of one failure observation."""
    return math.log(weibull_density_value(scale, shape, n_cycles) + LOG_FLOOR)


def runout_term(scale: float, shape: float, runout_cycles: float) -> float:
    """log(survival + floor) of one run-out observation."""
    return math.log(weibull_survival_value(scale, shape, runout_cycles) + LOG_FLOOR)


# ---------------------------------------------------------------------------
# Prepared objectives (criterion data extracted once, reused per candidate)
# ---------------------------------------------------------------------------

def _log_density_array(scales, shape, cycles):
    """log(pdf + floor), vectorized and overflow-safe; scales may be inf."""
    out = np.full(cycles.shape, math.log(LOG_FLOOR))
    finite = np.isfinite(scales)
    if np.any(finite):
        log_r = np.log(cycles[finite]) - np.log(scales[finite])
        t = np.exp(np.minimum(shape * log_r, 700.0))
        log_pdf = math.log(shape) - np.log(scales[finite]) + (shape - 1.0) * log_r - t
        pdf = np.where(t >= 700.0, 0.0, np.exp(np.maximum(log_pdf, -700.0)))
        out[finite] = np.log(pdf + LOG_FLOOR)
    return out


def _log_survival_array(scales, shape, runout_cycles):
    """log(survival + floor), vectorized; survival is exactly 1 at inf scale."""
    out = np.full(scales.shape, math.log(1.0 + LOG_FLOOR))
    finite = np.isfinite(scales)
    if np.any(finite):
        t = np.exp(np.minimum(shape * (math.log(runout_cycles) - np.log(scales[finite])), 700.0))
        out[finite] = np.log(np.exp(-t) + LOG_FLOOR)
    return out


def homogeneous_objective(
    observations: Sequence[FatigueObservation],
    volume: float,
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS,
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
) -> Callable[[StrainLifeParams], float]:
    """Fast evaluator of the homogeneous-specimen log-likelihood.

    Observations are grouped by amplitude once; each candidate evaluation is
    fully vectorized, so tens of thousands of points stay affordable.
    """
    if not observations:
        raise ValueError("no observations")
    obs = list(observations)
    amps = sorted({o.sigma_a for o in obs})
    deltas = np.array([2.0 * a / youngs_modulus for a in amps])
    volumes = np.full(len(amps), volume)
    index = {a: i for i, a in enumerate(amps)}
    fail_idx = np.array([index[o.sigma_a] for o in obs if not o.censored], dtype=np.intp)
    fail_cycles = np.array([o.n_cycles for o in obs if not o.censored])
    runout_counts = np.zeros(len(amps))
    for o in obs:
        if o.censored:
            runout_counts[index[o.sigma_a]] += 1.0

    def evaluate(params: StrainLifeParams) -> float:
        scales = element_scale_array(params, deltas, volumes)
        total = float(np.sum(_log_density_array(scales[fail_idx], params.m, fail_cycles)))
        total += float(np.sum(runout_counts * _log_survival_array(scales, params.m, runout_cycles)))
        return total

    return evaluate


def _prepare_tables(tables: Sequence[CriterionTable], amplitudes) -> list[dict]:
    """Interpolated (delta_eps, volumes) per table per amplitude, made once."""
    prepared = []
    for table in tables:
        per_amp = {}
        for a in amplitudes:
            per_amp[a] = (table.interpolate(a), table.volumes)
        prepared.append(per_amp)
    return prepared


def _structure_scale_at(params: StrainLifeParams, prepared_entry) -> float:
    delta, volumes = prepared_entry
    scales = element_scale_array(params, delta, volumes)
    return structure_scale(scales, params.m)


def heterogeneous_objective(
    observations: Sequence[FatigueObservation],
    tables: Sequence[CriterionTable],
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
) -> Callable[[StrainLifeParams], float]:
    """Fast evaluator for known-field specimens (one table per observation).

    A single table may be shared across all observations.
    """
    obs = list(observations)
    if not obs:
        raise ValueError("no observations")
    if isinstance(tables, CriterionTable):
        tables = [tables]
    tables = list(tables)
    if len(tables) == 1:
        tables = tables * len(obs)
    if len(tables) != len(obs):
        raise ValueError(f"{len(obs)} observations but {len(tables)} tables")
    prepared = [
        {"entry": table.interpolate(o.sigma_a), "volumes": table.volumes}
        for o, table in zip(obs, tables)
    ]

    def evaluate(params: StrainLifeParams) -> float:
        total = 0.0
        for o, prep in zip(obs, prepared):
            scale = _structure_scale_at(params, (prep["entry"], prep["volumes"]))
            if o.censored:
                total += runout_term(scale, params.m, runout_cycles)
            else:
                total += failure_term(scale, params.m, o.n_cycles)
        return total

    return evaluate


def unknown_pores_objective(
    observations: Sequence[FatigueObservation],
    tables: Sequence[CriterionTable],
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
    assignments: Sequence[Sequence[int]] | None = None,
) -> Callable[[StrainLifeParams], float]:
    """Fast evaluator of the Monte Carlo marginalized log-likelihood.

    Per observation the density (or survival, for run-outs) is averaged over
    the assigned synthetic realizations before the log; ``assignments`` maps
    each observation to table indices and defaults to all tables for all
    observations.  The assignment is fixed, so the objective stays
    deterministic across optimizer iterations.
    """
    obs = list(observations)
    if not obs:
        raise ValueError("no observations")
    tables = list(tables)
    if not tables:
        raise ValueError("no synthetic tables")
    if assignments is None:
        assignments = [range(len(tables))] * len(obs)
    elif len(assignments) != len(obs):
        raise ValueError("one table assignment per observation required")
    assignments = [tuple(a) for a in assignments]
    for a in assignments:
        if len(a) < 1:
            raise ValueError("every observation needs at least one table")

    amps = sorted({o.sigma_a for o in obs})
    prepared = _prepare_tables(tables, amps)

    def evaluate(params: StrainLifeParams) -> float:
        cache: dict[tuple[int, float], float] = {}

        def scale_for(k: int, a: float) -> float:
            key = (k, a)
            val = cache.get(key)
            if val is None:
                val = _structure_scale_at(params, prepared[k][a])
                cache[key] = val
            return val

        total = 0.0
        for o, assigned in zip(obs, assignments):
            acc = 0.0
            for k in assigned:
                scale = scale_for(k, o.sigma_a)
                if o.censored:
                    acc += weibull_survival_value(scale, params.m, runout_cycles)
                else:
                    acc += weibull_density_value(scale, params.m, o.n_cycles)
            total += math.log(acc / len(assigned) + LOG_FLOOR)
        return total

    return evaluate


# ---------------------------------------------------------------------------
# One-shot likelihood evaluations
# ---------------------------------------------------------------------------

def loglik_homogeneous(
    params: StrainLifeParams,
    observations: Sequence[FatigueObservation],
    volume: float,
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS,
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
) -> float:
    """Censored log-likelihood for homogeneous specimens of a given volume."""
    return homogeneous_objective(observations, volume, youngs_modulus, runout_cycles)(params)


def loglik_heterogeneous(
    params: StrainLifeParams,
    observations: Sequence[FatigueObservation],
    tables: Sequence[CriterionTable],
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
) -> float:
    """Censored log-likelihood for specimens with known criterion tables."""
    return heterogeneous_objective(observations, tables, runout_cycles)(params)


def loglik_unknown_pores(
    params: StrainLifeParams,
    observations: Sequence[FatigueObservation],
    tables: Sequence[CriterionTable],
    runout_cycles: float = DEFAULT_RUNOUT_CYCLES,
    assignments: Sequence[Sequence[int]] | None = None,
) -> float:
    """Censored log-likelihood marginalized over synthetic pore fields."""
    return unknown_pores_objective(observations, tables, runout_cycles, assignments)(params)
