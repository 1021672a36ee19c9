"""Specimen mechanical data model and synthetic pore-field generation.

An :class:`ElasticElementField` is the specimen's mechanical fingerprint:
per-element volumes plus the elastic stress tensor per unit nominal load, so
one elastic description is reusable across every load amplitude.  The
generator replaces tomography-driven meshing with analytical spherical-cavity
stress fields discretized into concentric shells, keeping generation cost
proportional to the number of pores.  Precomputed strain-range tables across
load levels (the reusable input to the likelihood) also live here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from . import voigt
from .material_point import (
    ChabocheParams,
    cosine_cycle,
    criterion_delta_eps,
    critical_direction,
    neuber_correct,
)

FIELD_HEADER = "id,volume_mm3,sxx,syy,szz,sxy,syz,sxz"
TABLE_HEADER = "element_id,load_MPa,delta_eps,volume_mm3"

#: Shell elements per pore; the innermost sits at the cavity surface.
DEFAULT_SHELLS = 8

#: Shells extend to this multiple of the pore radius; beyond it the stress
#: concentration has decayed below ~2 % and the material counts as bulk.
SHELL_EXTENT = 4.0


class FieldFormatError(ValueError):
    """Malformed field or table file; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class FieldGenerationError(RuntimeError):
    """Synthetic field generation produced an inconsistent geometry."""


class ExtrapolationError(ValueError):
    """Requested load amplitude lies outside the precomputed level grid."""


class CriterionError(RuntimeError):
    """Criterion computation failed for one element."""

    def __init__(self, element_id: int, cause: Exception):
        super().__init__(f"element {element_id}: {cause}")
        self.element_id = element_id
        self.cause = cause


@dataclass(eq=False)
class ElasticElementField:
    """Per-element volumes and unit-load elastic stress tensors."""

    ids: np.ndarray
    volumes: np.ndarray
    sigma_unit: np.ndarray
    geometry_tag: str = ""
    nominal_area_note: str = ""

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.sigma_unit = np.asarray(self.sigma_unit, dtype=float)
        n = self.ids.size
        if self.volumes.shape != (n,) or self.sigma_unit.shape != (n, 6):
            raise ValueError("inconsistent field array shapes")
        if n == 0:
            raise ValueError("field must contain at least one element")
        if np.any(self.volumes <= 0.0):
            raise ValueError("element volumes must be positive")
        if np.unique(self.ids).size != n:
            raise ValueError("element ids must be unique")

    @property
    def n_elements(self) -> int:
        return int(self.ids.size)

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.volumes))


@dataclass(frozen=True)
class PoreFieldStats:
    """Statistical description of the pore population and gauge geometry.

    Radii follow a log-normal law (median in micrometres, log standard
    deviation) truncated below the acceptance radius, mirroring the size
    filter applied to tomography data.  The default density reproduces a
    0.28 % pore volume fraction for the default radius law.
    """

    pore_density: float = 0.9553
    radius_median_um: float = 70.0
    radius_log_sd: float = 0.35
    accept_radius_um: float = 50.0
    gauge_radius_mm: float = 3.072
    gauge_length_mm: float = 20.0
    surface_kt_boost: float = 1.25

    def __post_init__(self):
        if self.pore_density < 0:
            raise ValueError("pore density must be nonnegative")
        if min(self.radius_median_um, self.radius_log_sd, self.accept_radius_um) <= 0:
            raise ValueError("radius law parameters must be positive")
        if min(self.gauge_radius_mm, self.gauge_length_mm) <= 0:
            raise ValueError("gauge dimensions must be positive")
        if self.surface_kt_boost < 1.0:
            raise ValueError("surface_kt_boost must be at least 1")

    @property
    def gauge_volume(self) -> float:
        return math.pi * self.gauge_radius_mm**2 * self.gauge_length_mm


def cavity_peak_kt(nu: float) -> float:
    """Equatorial stress concentration of a spherical cavity in uniaxial tension."""
    return (27.0 - 15.0 * nu) / (2.0 * (7.0 - 5.0 * nu))


def _sample_radii_mm(stats: PoreFieldStats, count: int, rng) -> np.ndarray:
    """Truncated log-normal radii, in mm, truncated below the acceptance radius."""
    mu = math.log(stats.radius_median_um / 1000.0)
    s = stats.radius_log_sd
    floor = ndtr((math.log(stats.accept_radius_um / 1000.0) - mu) / s)
    u = floor + rng.random(count) * (1.0 - floor)
    return np.exp(mu + s * ndtri(u))


def synth_field_report(
    stats: PoreFieldStats,
    resolution: int = DEFAULT_SHELLS,
    seed=0,
    nu: float = 0.3,
    n_pores: int | None = None,
) -> tuple[ElasticElementField, dict]:
    """Generate a synthetic porous field plus a generation report.

    Pore count is Poisson in the gauge volume (unless pinned by ``n_pores``),
    centers are uniform in the gauge cylinder, radii follow the truncated
    law.  Each pore becomes ``resolution`` concentric shell elements whose
    unit stress is the analytical cavity concentration 1 + (Kt-1)(a/r)^3
    evaluated at the shell inner radius, along the remote uniaxial direction;
    surface-breaking pores (center within one radius of the lateral surface)
    get their innermost shell boosted.  The remaining volume is one bulk
    element at the nominal uniaxial stress, so the total element volume
    equals the gauge volume exactly.
    """
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    rng = np.random.default_rng(seed)
    gauge_volume = stats.gauge_volume
    if n_pores is None:
        count = int(rng.poisson(stats.pore_density * gauge_volume))
    else:
        count = int(n_pores)
    kt_peak = cavity_peak_kt(nu)

    ids = [0]
    volumes = [gauge_volume]
    tensors = [voigt.UNIAXIAL_X.copy()]
    surface_breaking = 0
    if count > 0:
        radii = _sample_radii_mm(stats, count, rng)
        # uniform centers in the cylinder; only the radial coordinate matters
        # for the lateral surface-breaking classification
        radial = stats.gauge_radius_mm * np.sqrt(rng.random(count))
        is_surface = radial > stats.gauge_radius_mm - radii
        surface_breaking = int(np.sum(is_surface))
        ratio = SHELL_EXTENT ** (np.arange(resolution + 1) / resolution)
        kt_shells = 1.0 + (kt_peak - 1.0) * ratio[:-1] ** -3
        next_id = 1
        shell_total = 0.0
        for a, surf in zip(radii, is_surface):
            bounds = a * ratio
            shell_vols = 4.0 / 3.0 * math.pi * (bounds[1:] ** 3 - bounds[:-1] ** 3)
            shell_total += float(np.sum(shell_vols))
            for k in range(resolution):
                kt = kt_shells[k]
                if surf and k == 0:
                    kt *= stats.surface_kt_boost
                ids.append(next_id)
                volumes.append(shell_vols[k])
                tensors.append(kt * voigt.UNIAXIAL_X)
                next_id += 1
        bulk = gauge_volume - shell_total
        if bulk <= 0.0:
            raise FieldGenerationError(
                f"shell volume {shell_total:.3f} mm^3 exceeds the gauge volume {gauge_volume:.3f} mm^3"
            )
        volumes[0] = bulk

    field = ElasticElementField(
        ids=np.array(ids),
        volumes=np.array(volumes),
        sigma_unit=np.array(tensors),
        geometry_tag=f"cylinder r={stats.gauge_radius_mm} L={stats.gauge_length_mm}",
        nominal_area_note="unit nominal amplitude = 1 MPa uniaxial along x",
    )
    info = {
        "seed": seed if isinstance(seed, int) else str(seed),
        "pore_count": count,
        "surface_breaking_count": surface_breaking,
        "gauge_volume_mm3": gauge_volume,
        "pore_volume_fraction": float(
            np.sum(4.0 / 3.0 * math.pi * radii**3) / gauge_volume
        )
        if count > 0
        else 0.0,
        "stats": {
            "pore_density": stats.pore_density,
            "radius_median_um": stats.radius_median_um,
            "radius_log_sd": stats.radius_log_sd,
            "accept_radius_um": stats.accept_radius_um,
            "gauge_radius_mm": stats.gauge_radius_mm,
            "gauge_length_mm": stats.gauge_length_mm,
            "surface_kt_boost": stats.surface_kt_boost,
        },
    }
    return field, info


def synth_field(
    stats: PoreFieldStats,
    resolution: int = DEFAULT_SHELLS,
    seed=0,
    nu: float = 0.3,
    n_pores: int | None = None,
) -> ElasticElementField:
    """Synthetic porous field; see :func:`synth_field_report` for the recipe."""
    return synth_field_report(stats, resolution, seed, nu, n_pores)[0]


def tile_field(field: ElasticElementField, k: int) -> ElasticElementField:
    """Concatenate k copies of a field with re-indexed element ids."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return field
    n = field.n_elements
    offsets = np.repeat(np.arange(k) * (int(np.max(field.ids)) + 1), n)
    return ElasticElementField(
        ids=np.tile(field.ids, k) + offsets,
        volumes=np.tile(field.volumes, k),
        sigma_unit=np.tile(field.sigma_unit, (k, 1)),
        geometry_tag=f"{field.geometry_tag} x{k}",
        nominal_area_note=field.nominal_area_note,
    )


def thin_variant(stats: PoreFieldStats, radius_divisor: float) -> PoreFieldStats:
    """Iso-volume thin-specimen statistics: radius/d, length*d^2."""
    if radius_divisor <= 1.0:
        if radius_divisor == 1.0:
            return stats
        raise ValueError("radius divisor must be >= 1")
    return replace(
        stats,
        gauge_radius_mm=stats.gauge_radius_mm / radius_divisor,
        gauge_length_mm=stats.gauge_length_mm * radius_divisor**2,
    )


def notch_variant(field: ElasticElementField, kt: float, volume_fraction: float) -> ElasticElementField:
    """Embed a notch-like elevated-stress region covering a volume fraction.

    Every element is split: a ``volume_fraction`` share of its volume sees
    the element's stress scaled by ``kt`` (the notch region, carrying the
    same pore population as the rest of the specimen), the remainder stays
    as-is.  Total volume is conserved exactly.  On a pore-free field this
    reduces to a plain bulk-plus-notch-block geometry.
    """
    if kt <= 1.0:
        raise ValueError("kt must exceed 1")
    if not 0.0 < volume_fraction < 1.0:
        raise ValueError("volume_fraction must be in (0, 1)")
    offset = int(np.max(field.ids)) + 1
    return ElasticElementField(
        ids=np.concatenate([field.ids, field.ids + offset]),
        volumes=np.concatenate(
            [(1.0 - volume_fraction) * field.volumes, volume_fraction * field.volumes]
        ),
        sigma_unit=np.vstack([field.sigma_unit, kt * field.sigma_unit]),
        geometry_tag=f"{field.geometry_tag} notch kt={kt} f={volume_fraction}",
        nominal_area_note=field.nominal_area_note,
    )


# ---------------------------------------------------------------------------
# Field files
# ---------------------------------------------------------------------------

def save_field(path, field: ElasticElementField) -> None:
    """Write a field file (comma-separated, full round-trip precision)."""
    lines = []
    if field.geometry_tag:
        lines.append(f"# geometry: {field.geometry_tag}")
    if field.nominal_area_note:
        lines.append(f"# note: {field.nominal_area_note}")
    lines.append(FIELD_HEADER)
    for i in range(field.n_elements):
        row = [str(int(field.ids[i])), repr(float(field.volumes[i]))]
        row += [repr(float(x)) for x in field.sigma_unit[i]]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> ElasticElementField:
    """Parse a field file, validating invariants with line-numbered errors."""
    ids, volumes, tensors = [], [], []
    seen_ids = set()
    geometry_tag = ""
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if header_seen:
                    continue
                if line.startswith("# geometry:"):
                    geometry_tag = line.split(":", 1)[1].strip()
                continue
            if not header_seen:
                if line != FIELD_HEADER:
                    raise FieldFormatError(path, line_no, f"expected header '{FIELD_HEADER}'")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise FieldFormatError(path, line_no, f"expected 8 columns, got {len(parts)}")
            try:
                eid = int(parts[0])
                vol = float(parts[1])
                tensor = [float(x) for x in parts[2:]]
            except ValueError as exc:
                raise FieldFormatError(path, line_no, str(exc)) from exc
            if vol <= 0.0:
                raise FieldFormatError(path, line_no, f"nonpositive volume {vol} for element {eid}")
            if eid in seen_ids:
                raise FieldFormatError(path, line_no, f"duplicate element id {eid}")
            seen_ids.add(eid)
            ids.append(eid)
            volumes.append(vol)
            tensors.append(tensor)
    if not header_seen:
        raise FieldFormatError(path, 0, "missing header line")
    if not ids:
        raise FieldFormatError(path, 0, "field file has no element rows")
    return ElasticElementField(
        ids=np.array(ids),
        volumes=np.array(volumes),
        sigma_unit=np.array(tensors),
        geometry_tag=geometry_tag,
    )


# ---------------------------------------------------------------------------
# Criterion tables
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CriterionTable:
    """Stabilized-cycle strain ranges per element across load levels."""

    element_ids: np.ndarray
    volumes: np.ndarray
    load_levels: np.ndarray
    delta_eps: np.ndarray
    geometry_tag: str = ""

    def __post_init__(self):
        self.element_ids = np.asarray(self.element_ids, dtype=np.int64)
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.load_levels = np.asarray(self.load_levels, dtype=float)
        self.delta_eps = np.asarray(self.delta_eps, dtype=float)
        n, levels = self.element_ids.size, self.load_levels.size
        if self.volumes.shape != (n,) or self.delta_eps.shape != (n, levels):
            raise ValueError("inconsistent criterion table shapes")
        if np.any(self.delta_eps < 0.0):
            raise ValueError("strain ranges must be nonnegative")
        if np.any(np.diff(self.delta_eps, axis=1) < -1e-15):
            raise ValueError("strain ranges must be nondecreasing along load levels")

    def interpolate(self, sigma_a: float) -> np.ndarray:
        """Per-element strain range at an arbitrary amplitude.

        Exact grid hits return the stored column; otherwise monotone
        piecewise-linear interpolation between the bracketing levels.
        Amplitudes outside the grid raise :class:`ExtrapolationError`.
        """
        levels = self.load_levels
        hit = np.nonzero(levels == sigma_a)[0]
        if hit.size:
            return self.delta_eps[:, hit[0]].copy()
        if sigma_a < levels[0] or sigma_a > levels[-1]:
            raise ExtrapolationError(
                f"amplitude {sigma_a} MPa outside the table grid [{levels[0]}, {levels[-1]}]"
            )
        hi = int(np.searchsorted(levels, sigma_a))
        lo = hi - 1
        w = (sigma_a - levels[lo]) / (levels[hi] - levels[lo])
        return (1.0 - w) * self.delta_eps[:, lo] + w * self.delta_eps[:, hi]


def criterion_table(
    field: ElasticElementField,
    mat: ChabocheParams,
    load_levels,
    cycles: int = 20,
    samples: int = 40,
    failures: list | None = None,
) -> CriterionTable:
    """Stabilized-cycle strain range for every element at every load level.

    Per element and level the proportional elastic history is the unit
    tensor scaled by the amplitude over a fully reversed cosine cycle; the
    fast plastic correction recovers the stabilized cycle, and the strain
    range is measured along the element's critical direction.  Identical
    (tensor, level) pairs are solved once and reused.

    Correction failures raise :class:`CriterionError` annotated with the
    element id, unless a ``failures`` list is supplied, in which case failed
    elements are skipped and recorded there as ``(element_id, exception)``.
    """
    levels = np.asarray(load_levels, dtype=float)
    if levels.size == 0:
        raise ValueError("need at least one load level")
    if np.any(levels <= 0.0):
        raise ValueError("load levels must be positive")
    if np.any(np.diff(levels) <= 0.0):
        raise ValueError("load levels must be strictly ascending")

    cache: dict = {}
    rows = []
    kept = []
    for i in range(field.n_elements):
        tensor = field.sigma_unit[i]
        key0 = tensor.tobytes()
        try:
            n_star = cache.get(("dir", key0))
            if n_star is None:
                n_star = critical_direction(tensor)
                cache[("dir", key0)] = n_star
            row = np.empty(levels.size)
            for j, level in enumerate(levels):
                key = (key0, level)
                val = cache.get(key)
                if val is None:
                    history = cosine_cycle(tensor, amplitude=level, samples=samples)
                    _, strain = neuber_correct(mat, history, n_cycles=cycles)
                    val = criterion_delta_eps(strain, n_star)
                    cache[key] = val
                row[j] = val
        except Exception as exc:  # noqa: BLE001 - annotated and optionally collected
            err = CriterionError(int(field.ids[i]), exc)
            if failures is None:
                raise err from exc
            failures.append((int(field.ids[i]), err))
            continue
        rows.append(row)
        kept.append(i)
    if not rows:
        raise CriterionError(-1, RuntimeError("criterion failed for every element"))
    kept = np.array(kept)
    return CriterionTable(
        element_ids=field.ids[kept],
        volumes=field.volumes[kept],
        load_levels=levels,
        delta_eps=np.vstack(rows),
        geometry_tag=field.geometry_tag,
    )


def save_criterion_table(path, table: CriterionTable, comments=()) -> None:
    """Write a criterion table as long-format CSV."""
    lines = [f"# {c}" for c in comments]
    if table.geometry_tag:
        lines.append(f"# geometry: {table.geometry_tag}")
    lines.append(TABLE_HEADER)
    for i in range(table.element_ids.size):
        for j, level in enumerate(table.load_levels):
            lines.append(
                f"{int(table.element_ids[i])},{float(level)!r},"
                f"{float(table.delta_eps[i, j])!r},{float(table.volumes[i])!r}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_criterion_table(path) -> CriterionTable:
    """Parse a long-format criterion table CSV."""
    per_element: dict[int, dict] = {}
    geometry_tag = ""
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# geometry:") and not header_seen:
                    geometry_tag = line.split(":", 1)[1].strip()
                continue
            if not header_seen:
                if line != TABLE_HEADER:
                    raise FieldFormatError(path, line_no, f"expected header '{TABLE_HEADER}'")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FieldFormatError(path, line_no, f"expected 4 columns, got {len(parts)}")
            try:
                eid = int(parts[0])
                level = float(parts[1])
                value = float(parts[2])
                vol = float(parts[3])
            except ValueError as exc:
                raise FieldFormatError(path, line_no, str(exc)) from exc
            entry = per_element.setdefault(eid, {"volume": vol, "levels": {}})
            entry["levels"][level] = value
    if not per_element:
        raise FieldFormatError(path, 0, "criterion table has no rows")
    eids = sorted(per_element)
    level_sets = {tuple(sorted(per_element[e]["levels"])) for e in eids}
    if len(level_sets) != 1:
        raise FieldFormatError(path, 0, "elements carry inconsistent load-level grids")
    levels = np.array(next(iter(level_sets)))
    delta = np.array([[per_element[e]["levels"][lv] for lv in levels] for e in eids])
    return CriterionTable(
        element_ids=np.array(eids),
        volumes=np.array([per_element[e]["volume"] for e in eids]),
        load_levels=levels,
        delta_eps=delta,
        geometry_tag=geometry_tag,
    )
