"""Derivative-free calibration of the fatigue model.

A self-contained Nelder-Mead maximizer with a full per-iteration trace, and
calibration drivers that optimize in a log-transformed space so every
candidate parameter set is feasible by construction.  Parameters may be
pinned (e.g. B = beta = 0 for the one-line model); multi-start with
deterministic jitter mitigates initialization sensitivity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .strain_life import StrainLifeParams

#: Canonical parameter order of the optimization vector.
PARAM_ORDER = ("m", "A", "B", "alpha", "beta", "C")

#: Indices transformed as log(x + shift) because zero is a legal value.
_SHIFTED = (2, 4, 5)  # B, beta, C
_LOG_SHIFT = 1e-12

DEFAULT_BUDGET = 400
DEFAULT_STARTS = 5


class CalibrationDegeneracyError(RuntimeError):
    """Dataset contains no failures; the likelihood is unbounded toward infinite life."""


def ensure_failures(observations) -> None:
    if not any(not o.censored for o in observations):
        raise CalibrationDegeneracyError(
            "all observations are run-outs; the likelihood is maximized by infinite life"
        )


@dataclass(eq=False)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    trace: list
    iterations: int


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    budget: int = DEFAULT_BUDGET,
    f_spread_tol: float = 1e-9,
    initial_step: float = 0.05,
) -> NelderMeadResult:
    """Maximize f by the simplex method; returns the best vertex and trace.

    Standard coefficients (reflection 1, expansion 2, contraction 0.5,
    shrink 0.5); the initial simplex perturbs each coordinate by 5 %
    (absolute 0.05 at zero coordinates).  Stops on the iteration budget or
    when the simplex function spread falls below ``f_spread_tol`` while the
    vertex spread is also small (equal values at symmetric vertices must not
    stop a fresh simplex).  The trace holds one ``(iteration, best_x,
    best_f)`` entry per iteration.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if dim < 1:
        raise ValueError("need at least one free parameter")
    verts = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += initial_step * x[i] if x[i] != 0.0 else initial_step
        verts.append(x)
    vals = [f(v) for v in verts]

    trace = []
    iterations = 0
    for iteration in range(budget):
        order = np.argsort(vals)[::-1]  # best first
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]
        trace.append((iteration, verts[0].copy(), vals[0]))
        iterations = iteration + 1
        x_spread = max(float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
        if vals[0] - vals[-1] < f_spread_tol and x_spread < 1e-8:
            break

        centroid = np.mean(verts[:-1], axis=0)
        reflected = centroid + (centroid - verts[-1])
        fr = f(reflected)
        if fr > vals[0]:
            expanded = centroid + 2.0 * (centroid - verts[-1])
            fe = f(expanded)
            if fe > fr:
                verts[-1], vals[-1] = expanded, fe
            else:
                verts[-1], vals[-1] = reflected, fr
            continue
        if fr > vals[-2]:
            verts[-1], vals[-1] = reflected, fr
            continue
        if fr > vals[-1]:
            contracted = centroid + 0.5 * (reflected - centroid)
        else:
            contracted = centroid + 0.5 * (verts[-1] - centroid)
        fc = f(contracted)
        if fc > max(fr, vals[-1]):
            verts[-1], vals[-1] = contracted, fc
            continue
        for i in range(1, dim + 1):
            verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
            vals[i] = f(verts[i])

    order = np.argsort(vals)[::-1]
    best = order[0]
    return NelderMeadResult(x=verts[best].copy(), fun=vals[best], trace=trace, iterations=iterations)


# ---------------------------------------------------------------------------
# Calibration over StrainLifeParams
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CalibrationProblem:
    """Objective plus parameterization of one calibration run.

    ``x0`` supplies both the starting point and the pinned values; the mask
    follows :data:`PARAM_ORDER`.  Pinning B and beta gives the one-line
    model; pinning C = 0 removes the fatigue limit.
    """

    objective: Callable[[StrainLifeParams], float]
    x0: StrainLifeParams
    free_mask: Sequence[bool] = (True,) * 6
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.free_mask = tuple(bool(b) for b in self.free_mask)
        if len(self.free_mask) != 6:
            raise ValueError("free_mask must cover the 6 model parameters")
        if not any(self.free_mask):
            raise ValueError("at least one parameter must be free")


def one_line_mask(with_limit: bool = True) -> tuple[bool, ...]:
    """Free mask of the one-line model (optionally dropping the fatigue limit)."""
    return (True, True, False, True, False, with_limit)


def _to_internal(vec: np.ndarray, free_idx) -> np.ndarray:
    out = np.empty(len(free_idx))
    for j, i in enumerate(free_idx):
        if i in _SHIFTED:
            out[j] = math.log(vec[i] + _LOG_SHIFT)
        else:
            if vec[i] <= 0.0:
                raise ValueError(f"{PARAM_ORDER[i]} must be positive to be optimized, got {vec[i]}")
            out[j] = math.log(vec[i])
    return out


def _from_internal(y: np.ndarray, free_idx, pinned: np.ndarray) -> np.ndarray:
    vec = pinned.copy()
    for j, i in enumerate(free_idx):
        if i in _SHIFTED:
            vec[i] = max(math.exp(y[j]) - _LOG_SHIFT, 0.0)
        else:
            vec[i] = math.exp(y[j])
    return vec


@dataclass(eq=False)
class CalibrationResult:
    params: StrainLifeParams
    log_likelihood: float
    trace: list
    start_results: list = field(repr=False, default_factory=list)


def calibrate(
    problem: CalibrationProblem,
    n_starts: int = DEFAULT_STARTS,
    seed=0,
    jitter: float = 0.25,
) -> CalibrationResult:
    """Maximize the objective over the free parameters; best of all starts.

    Start 0 is the supplied initialization; the remaining starts jitter the
    free coordinates in the transformed space with deterministic Gaussian
    noise.  The winning start's per-iteration trace is returned as rows of
    ``(iteration, params_vector, log_likelihood)`` in untransformed units.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    free_idx = [i for i, b in enumerate(problem.free_mask) if b]
    pinned = problem.x0.as_vector()
    v0 = problem.x0.V0
    y0 = _to_internal(pinned, free_idx)

    def wrapped(y: np.ndarray) -> float:
        vec = _from_internal(y, free_idx, pinned)
        return problem.objective(StrainLifeParams.from_vector(vec, v0))

    rng = np.random.default_rng(seed)
    starts = [y0]
    for _ in range(n_starts - 1):
        starts.append(y0 + jitter * rng.standard_normal(y0.size))

    results = []
    for y_start in starts:
        results.append(nelder_mead(wrapped, y_start, budget=problem.budget))
    winner = max(results, key=lambda r: r.fun)

    trace = [
        (it, _from_internal(y, free_idx, pinned), val)
        for it, y, val in winner.trace
    ]
    best_vec = _from_internal(winner.x, free_idx, pinned)
    return CalibrationResult(
        params=StrainLifeParams.from_vector(best_vec, v0),
        log_likelihood=winner.fun,
        trace=trace,
        start_results=results,
    )


def write_trace_csv(path, trace) -> None:
    """Emit the winning trace as CSV: iteration, parameters, log-likelihood."""
    lines = ["iteration," + ",".join(PARAM_ORDER) + ",log_likelihood"]
    for it, vec, val in trace:
        lines.append(f"{it}," + ",".join(repr(float(x)) for x in vec) + f",{float(val)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
