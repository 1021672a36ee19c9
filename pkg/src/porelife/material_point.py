"""Cyclic elasto-plastic response at a material point.

Three pieces live here:

* a backward-Euler return-mapping integrator for a von Mises model with
  nonlinear kinematic hardening and saturating isotropic hardening (the
  reference path),
* a proportional cyclic Neuber-type corrector that recovers the stabilized
  elasto-plastic cycle from a purely elastic stress history (the fast path),
* extraction of the critical-plane strain range over the stabilized cycle.

Tensors are 6-vectors in the :mod:`porelife.voigt` convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import voigt

#: Return-mapping consistency tolerance, MPa.
YIELD_TOL = 1e-8

#: Samples per load cycle; bounds the range error of the criterion below
#: 0.3 % for fully reversed proportional loading.
DEFAULT_CYCLE_SAMPLES = 40

#: Cycles integrated before the stabilized cycle is extracted.
DEFAULT_STABILIZATION_CYCLES = 20


class IntegrationError(RuntimeError):
    """Return mapping failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e} MPa)")
        self.residual = residual


class ProportionalityError(ValueError):
    """Elastic history is not proportional to a single direction tensor."""


class CorrectionError(RuntimeError):
    """The scalar Neuber solve did not converge."""


@dataclass(frozen=True)
class ChabocheParams:
    """Constants of the cyclic plasticity model.

    E        Young's modulus, MPa
    nu       Poisson ratio
    sigma_y  initial yield stress, MPa
    b, Q     rate and saturation stress of isotropic hardening
    C_kin, D modulus and recall constant of kinematic hardening
    """

    E: float
    nu: float
    sigma_y: float
    b: float
    Q: float
    C_kin: float
    D: float

    def __post_init__(self):
        if self.E <= 0 or self.sigma_y <= 0:
            raise ValueError("E and sigma_y must be positive")
        if not 0.0 < self.nu < 0.5:
            raise ValueError(f"nu must be in (0, 0.5), got {self.nu}")
        if min(self.b, self.Q, self.C_kin, self.D) < 0:
            raise ValueError("hardening constants must be nonnegative")

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    def isotropic_stress(self, p: float) -> float:
        """Isotropic hardening stress at cumulative plastic strain p."""
        return self.Q * (1.0 - math.exp(-self.b * p))


#: Cast Al-Si7Mg constants used throughout the experiments (Poisson ratio is
#: an assumed 0.3, not part of the identified set).
ALSI7MG = ChabocheParams(E=75500.0, nu=0.3, sigma_y=170.0, b=19.0, Q=20.0, C_kin=127499.0, D=1334.0)


@dataclass(frozen=True, eq=False)
class MaterialPointState:
    """Internal variables: plastic strain, backstress, cumulative plastic strain."""

    eps_p: np.ndarray
    X: np.ndarray
    p: float

    @classmethod
    def virgin(cls) -> "MaterialPointState":
        return cls(eps_p=np.zeros(6), X=np.zeros(6), p=0.0)


@dataclass(frozen=True, eq=False)
class TensorHistory:
    """Time-stamped sequence of symmetric tensors (6 components each)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 2 or self.values.shape[1] != 6:
            raise ValueError("values must have shape (n, 6)")
        if self.times.shape != (self.values.shape[0],):
            raise ValueError("times and values lengths differ")
        if self.times.size and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.size)


def cosine_cycle(tensor, amplitude: float = 1.0, samples: int = DEFAULT_CYCLE_SAMPLES) -> TensorHistory:
    """One fully reversed cycle: amplitude * tensor * cos(2 pi t), t in [0, 1)."""
    t = np.arange(samples) / samples
    wave = amplitude * np.cos(2.0 * math.pi * t)
    return TensorHistory(times=t, values=np.outer(wave, np.asarray(tensor, dtype=float)))


# ---------------------------------------------------------------------------
# Return mapping
# ---------------------------------------------------------------------------

def _step_kernel(params: ChabocheParams, eps_p, X, p, eps_total):
    """Backward-Euler update on raw arrays; returns (eps_p, X, p, stress)."""
    g2 = 2.0 * params.shear_modulus
    sig_trial = voigt.elastic_stress(eps_total - eps_p, params.E, params.nu)
    s_trial = voigt.deviator(sig_trial)
    xi_trial = s_trial - X
    j_trial = math.sqrt(1.5 * voigt.contract(xi_trial, xi_trial))
    f_trial = j_trial - params.sigma_y - params.isotropic_stress(p)
    if f_trial <= 0.0:
        return eps_p, X, p, sig_trial

    ckin, drec, b, q = params.C_kin, params.D, params.b, params.Q
    three_g = 1.5 * g2

    def residual_and_slope(dp):
        theta = 1.0 / (1.0 + drec * dp)
        xi_eff = s_trial - theta * X
        j_eff = math.sqrt(1.5 * voigt.contract(xi_eff, xi_eff))
        r_new = params.isotropic_stress(p + dp)
        res = j_eff - (three_g + theta * ckin) * dp - params.sigma_y - r_new
        dtheta = -drec * theta * theta
        dj = -1.5 * dtheta * voigt.contract(xi_eff, X) / j_eff if j_eff > 0.0 else 0.0
        slope = dj - three_g - theta * ckin - dp * ckin * dtheta - q * b * math.exp(-b * (p + dp))
        return res, slope, theta, xi_eff, j_eff

    dp = 0.0
    lo, hi = 0.0, None  # bracket maintained alongside Newton
    res = f_trial
    for _ in range(100):
        res, slope, theta, xi_eff, j_eff = residual_and_slope(dp)
        if abs(res) < 1e-10:
            break
        if res > 0.0:
            lo = dp
        else:
            hi = dp if hi is None else min(hi, dp)
        step = res / slope if slope != 0.0 else -res
        candidate = dp - step
        if candidate <= lo or (hi is not None and candidate >= hi):
            candidate = 0.5 * (lo + hi) if hi is not None else 2.0 * max(dp, f_trial / three_g)
        dp = candidate
    else:
        raise IntegrationError("return mapping did not converge", res)

    flow = 1.5 * dp / j_eff * xi_eff
    eps_p_new = eps_p + flow
    x_new = theta * (X + (2.0 / 3.0) * ckin * flow)
    stress = sig_trial - g2 * flow
    return eps_p_new, x_new, p + dp, stress


def chaboche_step(params: ChabocheParams, state: MaterialPointState, eps_total):
    """One implicit return-mapping update for an imposed total strain tensor.

    Returns ``(new_state, stress)``.  The updated stress satisfies the yield
    condition to within :data:`YIELD_TOL`.
    """
    eps_total = np.asarray(eps_total, dtype=float)
    eps_p, x_back, p, stress = _step_kernel(params, state.eps_p, state.X, state.p, eps_total)
    return MaterialPointState(eps_p=eps_p, X=x_back, p=p), stress


@dataclass(frozen=True, eq=False)
class CycleResult:
    """Stabilized-cycle output of the cycle drivers.

    ``peak_history`` holds the per-cycle maximum von Mises stress, one entry
    per integrated cycle.
    """

    stress: TensorHistory
    strain: TensorHistory
    stabilization_metric: float
    peak_history: np.ndarray = field(repr=False, default=None)
    metric_history: np.ndarray = field(repr=False, default=None)
    state: MaterialPointState = field(repr=False, default=None)


def chaboche_cycle(params: ChabocheParams, eps_path: TensorHistory, n_cycles: int = DEFAULT_STABILIZATION_CYCLES) -> CycleResult:
    """Repeat one strain cycle from a virgin state and return the final cycle.

    The stabilization metric is the max pointwise (per sample, per component)
    stress difference between the last two cycles; NaN when n_cycles == 1.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    if len(eps_path) == 0:
        raise ValueError("empty strain path")
    eps_p, x_back, p = np.zeros(6), np.zeros(6), 0.0
    n = len(eps_path)
    prev = None
    current = np.empty((n, 6))
    peaks = np.empty(n_cycles)
    metrics = np.full(n_cycles, np.nan)
    for cycle in range(n_cycles):
        for i in range(n):
            eps_p, x_back, p, stress = _step_kernel(params, eps_p, x_back, p, eps_path.values[i])
            current[i] = stress
        peaks[cycle] = np.max(voigt.von_mises(current))
        if prev is not None:
            metrics[cycle] = np.max(np.abs(current - prev))
        prev = current.copy()
    return CycleResult(
        stress=TensorHistory(times=eps_path.times, values=current.copy()),
        strain=TensorHistory(times=eps_path.times, values=eps_path.values.copy()),
        stabilization_metric=float(metrics[-1]),
        peak_history=peaks,
        metric_history=metrics,
        state=MaterialPointState(eps_p=eps_p, X=x_back, p=p),
    )


def stress_driven_cycle(params: ChabocheParams, stress_path: TensorHistory, n_cycles: int = DEFAULT_STABILIZATION_CYCLES) -> CycleResult:
    """Repeat one imposed *stress* cycle from a virgin state.

    Each step solves for the total strain producing the target stress by
    fixed-point iteration with the elastic compliance; converges for any
    hardening material.  Returns the final cycle's histories.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    n = len(stress_path)
    if n == 0:
        raise ValueError("empty stress path")
    eps_p, x_back, p = np.zeros(6), np.zeros(6), 0.0
    eps = np.zeros(6)
    prev = None
    sig_hist = np.empty((n, 6))
    eps_hist = np.empty((n, 6))
    peaks = np.empty(n_cycles)
    metrics = np.full(n_cycles, np.nan)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(stress_path.values))))
    for cycle in range(n_cycles):
        for i in range(n):
            target = stress_path.values[i]
            for _ in range(400):
                ep_new, x_new, p_new, sig = _step_kernel(params, eps_p, x_back, p, eps)
                gap = target - sig
                if np.max(np.abs(gap)) < tol:
                    break
                eps = eps + voigt.elastic_strain(gap, params.E, params.nu)
            else:
                raise IntegrationError("stress-driven step did not converge", float(np.max(np.abs(gap))))
            eps_p, x_back, p = ep_new, x_new, p_new
            sig_hist[i] = sig
            eps_hist[i] = eps
        peaks[cycle] = np.max(voigt.von_mises(sig_hist))
        if prev is not None:
            metrics[cycle] = np.max(np.abs(sig_hist - prev))
        prev = sig_hist.copy()
    return CycleResult(
        stress=TensorHistory(times=stress_path.times, values=sig_hist.copy()),
        strain=TensorHistory(times=stress_path.times, values=eps_hist.copy()),
        stabilization_metric=float(metrics[-1]),
        peak_history=peaks,
        metric_history=metrics,
        state=MaterialPointState(eps_p=eps_p, X=x_back, p=p),
    )


def uniaxial_strain_cycle(
    params: ChabocheParams,
    amplitude: float,
    n_cycles: int = DEFAULT_STABILIZATION_CYCLES,
    samples: int = DEFAULT_CYCLE_SAMPLES,
) -> CycleResult:
    """Fully reversed uniaxial-stress cycling at a given axial strain amplitude.

    The axial strain follows a cosine wave while the lateral strains are left
    free: each step solves for the transverse strain that keeps the lateral
    stresses at zero, so the stress state stays uniaxial along x.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be at least 1")
    t = np.arange(samples) / samples
    axial = amplitude * np.cos(2.0 * math.pi * t)
    lam = params.E * params.nu / ((1.0 + params.nu) * (1.0 - 2.0 * params.nu))
    stiff = 2.0 * (lam + params.shear_modulus)  # d(sigma_yy)/d(lateral strain)
    eps_p, x_back, p = np.zeros(6), np.zeros(6), 0.0
    lateral = 0.0
    prev = None
    sig_hist = np.empty((samples, 6))
    eps_hist = np.empty((samples, 6))
    peaks = np.empty(n_cycles)
    metrics = np.full(n_cycles, np.nan)
    eps = np.zeros(6)
    for cycle in range(n_cycles):
        for i in range(samples):
            eps[0] = axial[i]
            for _ in range(200):
                eps[1] = eps[2] = lateral
                ep_new, x_new, p_new, sig = _step_kernel(params, eps_p, x_back, p, eps)
                if abs(sig[1]) < 1e-9 * params.sigma_y:
                    break
                lateral -= sig[1] / stiff
            else:
                raise IntegrationError("uniaxial lateral solve did not converge", abs(sig[1]))
            eps_p, x_back, p = ep_new, x_new, p_new
            sig_hist[i] = sig
            eps_hist[i] = eps
        peaks[cycle] = np.max(voigt.von_mises(sig_hist))
        if prev is not None:
            metrics[cycle] = np.max(np.abs(sig_hist - prev))
        prev = sig_hist.copy()
    return CycleResult(
        stress=TensorHistory(times=t, values=sig_hist.copy()),
        strain=TensorHistory(times=t, values=eps_hist.copy()),
        stabilization_metric=float(metrics[-1]),
        peak_history=peaks,
        metric_history=metrics,
        state=MaterialPointState(eps_p=eps_p, X=x_back, p=p),
    )


# ---------------------------------------------------------------------------
# Proportional cyclic Neuber correction
# ---------------------------------------------------------------------------

def _proportional_decomposition(values, tol: float = 1e-6):
    """Split a proportional history into (unit-equivalent direction, amplitudes).

    The direction is normalized to unit von Mises equivalent; amplitudes are
    the signed equivalents.  Raises ProportionalityError when any sample
    deviates from the common direction by more than ``tol`` in angle.
    """
    norms = np.sqrt(voigt.contract(values, values))
    ref_idx = int(np.argmax(norms))
    ref_norm = norms[ref_idx]
    if ref_norm == 0.0:
        return None, np.zeros(len(values))
    ref = values[ref_idx] / ref_norm
    coeffs = voigt.contract(values, ref)
    residual = values - np.outer(coeffs, ref)
    res_norm = np.sqrt(voigt.contract(residual, residual))
    bad = res_norm > tol * np.maximum(norms, 1e-300)
    if np.any(bad & (norms > 0.0)):
        worst = float(np.max(res_norm[norms > 0.0] / norms[norms > 0.0]))
        raise ProportionalityError(f"history is not proportional (angular deviation {worst:.3e})")
    j_ref = voigt.von_mises(ref)
    if j_ref == 0.0:
        return None, np.zeros(len(values))  # purely hydrostatic, never yields
    direction = ref / j_ref
    return direction, coeffs * j_ref


def _branch_stress_range(params: ChabocheParams, dep: float, r_stab: float) -> float:
    """Stress range of the stabilized uniaxial hysteresis branch."""
    kin = 2.0 * params.C_kin / params.D * math.tanh(0.5 * params.D * dep) if params.D > 0 else params.C_kin * dep
    return 2.0 * (params.sigma_y + r_stab) + kin


def _solve_branch_neuber(params: ChabocheParams, product: float, r_stab: float, dep_hi: float) -> tuple[float, float]:
    """Solve range * strain-range = product on the cyclic branch curve.

    Returns (stress range, plastic strain range).  Elastic whenever the
    elastic solution stays within the doubled yield surface.
    """
    elastic_range = math.sqrt(product * params.E)
    if elastic_range <= 2.0 * (params.sigma_y + r_stab):
        return elastic_range, 0.0

    def residual(dep):
        rng = _branch_stress_range(params, dep, r_stab)
        return rng * (rng / params.E + dep) - product

    lo, hi = 0.0, max(dep_hi, 1e-12)
    for _ in range(200):
        if residual(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise CorrectionError("could not bracket the scalar Neuber solve")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(hi, 1.0):
            break
    dep = 0.5 * (lo + hi)
    return _branch_stress_range(params, dep, r_stab), dep


def neuber_correct(
    params: ChabocheParams,
    elastic_stress_history: TensorHistory,
    n_cycles: int = DEFAULT_STABILIZATION_CYCLES,
) -> tuple[TensorHistory, TensorHistory]:
    """Stabilized elasto-plastic cycle from a proportional elastic history.

    The local direction is locked from the elastic tensor; per time step the
    product of von Mises equivalent stress and strain ranges measured from
    the last load reversal is conserved, with the plastic part following the
    stabilized uniaxial hysteresis branch of the hardening model.  The scalar
    solution is mapped back through the proportional direction.  Below yield
    the correction is the identity.

    Returns ``(stress_history, strain_history)``.
    """
    if len(elastic_stress_history) == 0:
        raise ValueError("empty elastic history")
    values = elastic_stress_history.values
    times = elastic_stress_history.times
    direction, amp = _proportional_decomposition(values)

    peak = float(np.max(np.abs(amp))) if direction is not None else 0.0
    if direction is None or peak <= params.sigma_y:
        strain = voigt.elastic_strain(values, params.E, params.nu)
        return (
            TensorHistory(times=times, values=values.copy()),
            TensorHistory(times=times, values=strain),
        )

    a_max = float(np.max(amp))
    a_min = float(np.min(amp))
    span = a_max - a_min
    product_loop = span * span / params.E

    # stabilized-loop solve: the isotropic stress is coupled to the plastic
    # range through the cumulative plastic strain accumulated over n_cycles
    # (p grows by twice the plastic range per cycle); the coupled residual is
    # monotone in the plastic range, so one bisection settles it
    def loop_residual(dep):
        r_s = params.isotropic_stress(2.0 * n_cycles * dep)
        rng = _branch_stress_range(params, dep, r_s)
        return rng * (rng / params.E + dep) - product_loop

    if loop_residual(0.0) >= 0.0:
        dep_loop = 0.0
    else:
        hi = span / params.E
        for _ in range(200):
            if loop_residual(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise CorrectionError("could not bracket the stabilized-loop solve")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if loop_residual(mid) > 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-16 * max(hi, 1.0):
                break
        dep_loop = 0.5 * (lo + hi)
    r_stab = params.isotropic_stress(2.0 * n_cycles * dep_loop)
    rng_loop, dep_loop = _solve_branch_neuber(params, product_loop, r_stab, max(dep_loop, span / params.E))

    # reversal anchors; means scale with the corrected/elastic range ratio
    mean_a = 0.5 * (a_max + a_min)
    sig_top = mean_a * rng_loop / span + 0.5 * rng_loop
    dep_top = mean_a * dep_loop / span + 0.5 * dep_loop

    idx_top = int(np.argmax(amp))
    idx_bot = int(np.argmin(amp))

    sig_scalar = np.empty(len(amp))
    dep_scalar = np.empty(len(amp))
    for i, a in enumerate(amp):
        descending = _on_descending_branch(i, idx_top, idx_bot, len(amp))
        origin = a_max if descending else a_min
        span_t = abs(a - origin)
        rng_t, dep_t = _solve_branch_neuber(params, span_t * span_t / params.E, r_stab, dep_loop)
        if descending:
            sig_scalar[i] = sig_top - rng_t
            dep_scalar[i] = dep_top - dep_t
        else:
            sig_scalar[i] = (sig_top - rng_loop) + rng_t
            dep_scalar[i] = (dep_top - dep_loop) + dep_t

    elastic_dir = voigt.elastic_strain(direction, params.E, params.nu)
    plastic_dir = 1.5 * voigt.deviator(direction)
    stress_vals = np.outer(sig_scalar, direction)
    strain_vals = np.outer(sig_scalar, elastic_dir) + np.outer(dep_scalar, plastic_dir)
    return (
        TensorHistory(times=times, values=stress_vals),
        TensorHistory(times=times, values=strain_vals),
    )


def _on_descending_branch(i: int, idx_top: int, idx_bot: int, n: int) -> bool:
    """Whether sample i sits on the branch leaving the maximum reversal."""
    if idx_top < idx_bot:
        return idx_top <= i < idx_bot
    return not (idx_bot <= i < idx_top)


# ---------------------------------------------------------------------------
# Critical-plane criterion
# ---------------------------------------------------------------------------

def critical_direction(sigma) -> np.ndarray:
    """Unit eigenvector of the largest eigenvalue, with deterministic ties.

    When the top eigenvalues are degenerate (within 1e-9 of the tensor norm)
    the returned vector is the one in the degenerate subspace with the
    lexicographically largest absolute components (x, then y, then z),
    sign-normalized to a positive first nonzero component.
    """
    sigma = np.asarray(sigma, dtype=float)
    mat = voigt.to_matrix(sigma)
    evals, evecs = np.linalg.eigh(mat)
    norm = float(np.linalg.norm(mat))
    tol = 1e-9 * max(norm, 1e-300)
    top = evals >= evals[-1] - tol
    basis = evecs[:, top]
    vec = None
    for axis in range(3):
        proj = basis @ basis[axis, :]
        length = np.linalg.norm(proj)
        if length > 1e-12:
            vec = proj / length
            break
    if vec is None:  # degenerate numerics; fall back to the raw eigenvector
        vec = evecs[:, -1]
    for comp in vec:
        if abs(comp) > 1e-12:
            if comp < 0.0:
                vec = -vec
            break
    return vec


def criterion_delta_eps(strain_history: TensorHistory, n_star) -> float:
    """Range of the normal strain n . eps(t) . n over the provided cycle."""
    if len(strain_history) == 0:
        raise ValueError("empty strain history")
    n_star = np.asarray(n_star, dtype=float)
    if abs(np.linalg.norm(n_star) - 1.0) > 1e-9:
        raise ValueError("n_star must be a unit vector")
    projected = voigt.normal_projection(strain_history.values, n_star)
    return float(np.max(projected) - np.min(projected))
