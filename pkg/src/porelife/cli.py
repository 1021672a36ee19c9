"""Batch pipeline commands: field generation, criterion precomputation,
calibration, load-life quantile prediction, and the homogenization study.

Every command reads one config file, writes CSV/JSON into an output
directory, and is byte-reproducible from its seed.  Exit codes: 0 success,
2 validation error, 3 partial element failures, 4 calibration degeneracy.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, fatigue_as_dict, fatigue_from_dict, load_config
from .field import (
    CriterionError,
    FieldFormatError,
    criterion_table,
    load_criterion_table,
    load_field,
    notch_variant,
    save_criterion_table,
    save_field,
    synth_field_report,
    thin_variant,
    tile_field,
)
from .likelihood import (
    FatigueObservation,
    Heterogeneous,
    heterogeneous_objective,
    homogeneous_objective,
    load_observations,
    structure_for,
    unknown_pores_objective,
)
from .optimize import (
    CalibrationDegeneracyError,
    CalibrationProblem,
    calibrate,
    ensure_failures,
    one_line_mask,
    write_trace_csv,
)
from .strain_life import StrainLifeParams
from .weakest_link import StructureLifetime, sample_lifetimes, wohler_quantiles, write_quantile_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3
EXIT_DEGENERATE = 4

DEFAULT_NOTCH_KT = 2.5
DEFAULT_NOTCH_VOLUME_FRACTION = 0.02


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_params_arg(config: RunConfig, params_path) -> StrainLifeParams:
    if params_path is None:
        return config.fatigue
    with open(params_path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    record = payload.get("params", payload)
    return fatigue_from_dict(record)


# ---------------------------------------------------------------------------
# genfield
# ---------------------------------------------------------------------------

def cmd_genfield(
    config: RunConfig,
    out_dir,
    count: int = 1,
    n_pores: int | None = None,
    thin: float | None = None,
    tile: int | None = None,
    notch_kt: float | None = None,
    notch_volume_fraction: float = DEFAULT_NOTCH_VOLUME_FRACTION,
) -> int:
    """Generate synthetic field files plus a JSON manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = config.pores
    if thin is not None:
        stats = thin_variant(stats, thin)
    children = np.random.SeedSequence(config.seed).spawn(count)
    manifest = {
        "seed": config.seed,
        "count": count,
        "gauge_volume_mm3": stats.gauge_volume,
        "thin": thin,
        "tile": tile,
        "notch_kt": notch_kt,
        "fields": [],
    }
    for i in range(count):
        field, info = synth_field_report(
            stats, config.shells, children[i], nu=config.material.nu, n_pores=n_pores
        )
        if tile is not None and tile > 1:
            field = tile_field(field, tile)
        if notch_kt is not None:
            field = notch_variant(field, notch_kt, notch_volume_fraction)
        name = f"field_{i:03d}.csv"
        save_field(out_dir / name, field)
        manifest["fields"].append(
            {
                "file": name,
                "spawn_index": i,
                "n_elements": field.n_elements,
                "total_volume_mm3": field.total_volume,
                "pore_count": info["pore_count"],
                "surface_breaking_count": info["surface_breaking_count"],
                "pore_volume_fraction": info["pore_volume_fraction"],
            }
        )
    manifest["stats"] = {
        "pore_density": stats.pore_density,
        "radius_median_um": stats.radius_median_um,
        "radius_log_sd": stats.radius_log_sd,
        "accept_radius_um": stats.accept_radius_um,
        "gauge_radius_mm": stats.gauge_radius_mm,
        "gauge_length_mm": stats.gauge_length_mm,
        "surface_kt_boost": stats.surface_kt_boost,
        "shells": config.shells,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# criterion
# ---------------------------------------------------------------------------

def _criterion_content_hash(config: RunConfig, field_path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(field_path.read_bytes())
    recipe = (
        repr(config.material),
        tuple(config.load_levels),
        config.n_cycles,
        config.cycle_samples,
    )
    digest.update(repr(recipe).encode())
    return digest.hexdigest()


def _stored_hash(table_path: Path) -> str | None:
    if not table_path.exists():
        return None
    with open(table_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# content-hash: "):
                return line.split(": ", 1)[1].strip()
            if not line.startswith("#"):
                break
    return None


def cmd_criterion(config: RunConfig, out_dir, field_paths) -> int:
    """Precompute criterion tables for field files; skips unchanged inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    any_failures = False
    for raw in field_paths:
        field_path = Path(raw)
        table_path = out_dir / (field_path.stem + ".criterion.csv")
        content_hash = _criterion_content_hash(config, field_path)
        if _stored_hash(table_path) == content_hash:
            print(f"{table_path.name}: up to date, skipped")
            continue
        field = load_field(field_path)
        failures: list = []
        table = criterion_table(
            field,
            config.material,
            config.load_levels,
            cycles=config.n_cycles,
            samples=config.cycle_samples,
            failures=failures,
        )
        for eid, err in failures:
            any_failures = True
            print(f"{field_path.name}: element {eid} failed: {err}", file=sys.stderr)
        save_criterion_table(
            table_path,
            table,
            comments=[f"content-hash: {content_hash}", f"source: {field_path.name}"],
        )
        print(f"{table_path.name}: {table.element_ids.size} elements x {len(config.load_levels)} levels")
    return EXIT_PARTIAL if any_failures else EXIT_OK


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

def _reduce_per_level(observations, seed):
    """One observation per distinct amplitude, picked deterministically."""
    rng = np.random.default_rng(seed)
    by_level: dict[float, list] = {}
    for o in observations:
        by_level.setdefault(o.sigma_a, []).append(o)
    return [lvl[rng.integers(len(lvl))] for _, lvl in sorted(by_level.items())]


def _unknown_pores_assignments(n_obs: int, pool_size: int, n_k: int, seed):
    """Frozen per-observation table subsets drawn once from the master seed."""
    if pool_size <= n_k:
        return None
    rng = np.random.default_rng(seed)
    return [rng.choice(pool_size, size=n_k, replace=False) for _ in range(n_obs)]


def cmd_calibrate(
    config: RunConfig,
    out_dir,
    mode: str,
    observations_path,
    table_paths=(),
    homogeneous_observations_path=None,
    reduce_per_level: bool = False,
) -> int:
    """Fit the fatigue model in one of the four likelihood modes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    observations = load_observations(observations_path)
    ensure_failures(observations)
    volume = config.pores.gauge_volume
    tables = [load_criterion_table(p) for p in table_paths]

    if mode == "homogeneous":
        objective = homogeneous_objective(
            observations, volume, config.material.E, config.runout_cycles
        )
    elif mode == "heterogeneous":
        if not tables:
            raise ConfigError("heterogeneous mode needs at least one criterion table")
        objective = heterogeneous_objective(observations, tables, config.runout_cycles)
    elif mode == "unknown-pores":
        if not tables:
            raise ConfigError("unknown-pores mode needs at least one criterion table")
        assignments = _unknown_pores_assignments(
            len(observations), len(tables), config.n_k, config.seed
        )
        objective = unknown_pores_objective(
            observations, tables, config.runout_cycles, assignments
        )
    elif mode == "joint":
        if not tables:
            raise ConfigError("joint mode needs criterion tables for the porous term")
        if homogeneous_observations_path is None:
            raise ConfigError("joint mode needs --homogeneous-observations")
        homogeneous_obs = load_observations(homogeneous_observations_path)
        if reduce_per_level:
            homogeneous_obs = _reduce_per_level(homogeneous_obs, config.seed)
        ensure_failures(homogeneous_obs)
        assignments = _unknown_pores_assignments(
            len(observations), len(tables), config.n_k, config.seed
        )
        term_h = homogeneous_objective(
            homogeneous_obs, volume, config.material.E, config.runout_cycles
        )
        term_u = unknown_pores_objective(
            observations, tables, config.runout_cycles, assignments
        )

        def objective(params):
            return term_h(params) + term_u(params)

    else:
        raise ConfigError(f"unknown calibration mode '{mode}'")

    problem = CalibrationProblem(
        objective=objective,
        x0=config.fatigue,
        free_mask=config.free_mask,
        budget=config.budget,
    )
    result = calibrate(problem, n_starts=config.n_starts, seed=config.seed)
    _write_json(
        out_dir / "fitted.json",
        {
            "mode": mode,
            "params": fatigue_as_dict(result.params),
            "log_likelihood": result.log_likelihood,
            "n_observations": len(observations),
            "n_censored": sum(1 for o in observations if o.censored),
            "n_starts": config.n_starts,
            "budget": config.budget,
            "seed": config.seed,
        },
    )
    write_trace_csv(out_dir / "trace.csv", result.trace)
    print(
        f"mode={mode}: log-likelihood {result.log_likelihood:.4f} "
        f"({len(observations)} observations)"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# wohler
# ---------------------------------------------------------------------------

def cmd_wohler(config: RunConfig, out_dir, table_paths, params_path=None) -> int:
    """Pooled lifetime quantiles per load level across criterion tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _load_params_arg(config, params_path)
    tables = [load_criterion_table(p) for p in table_paths]
    if not tables:
        raise ConfigError("wohler needs at least one criterion table")
    structs_per_level = {
        level: [structure_for(params, Heterogeneous(t), level) for t in tables]
        for level in config.load_levels
    }
    table = wohler_quantiles(
        structs_per_level,
        quantiles=config.quantiles,
        samples_per_struct=config.samples_per_struct,
        seed=config.seed,
        runout_cycles=config.runout_cycles,
    )
    write_quantile_csv(out_dir / "wohler.csv", table, config.quantiles)
    print(f"wohler.csv: {len(config.load_levels)} levels x {len(tables)} fields")
    return EXIT_OK


# ---------------------------------------------------------------------------
# homogenize
# ---------------------------------------------------------------------------

def _pooled_median(structs, samples_per_struct, seed, runout_cycles) -> float:
    pools = []
    children = np.random.SeedSequence(seed).spawn(len(structs))
    for struct, child in zip(structs, children):
        values, _ = sample_lifetimes(struct, samples_per_struct, child, runout_cycles)
        pools.append(values)
    return float(np.median(np.concatenate(pools)))


def synthesize_observations(params, tables, levels, samples_per_struct, seed, runout_cycles):
    """Multi-scale-model lifetimes on known fields, censored at the cap."""
    observations = []
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(tables) * len(levels))
    idx = 0
    for table in tables:
        for level in levels:
            struct = structure_for(params, Heterogeneous(table), level)
            values, censored = sample_lifetimes(
                struct, samples_per_struct, children[idx], runout_cycles
            )
            idx += 1
            for v, c in zip(values, censored):
                observations.append(
                    FatigueObservation(level, min(float(v), runout_cycles), bool(c))
                )
    return observations


def fit_homogenized_model(config: RunConfig, observations) -> StrainLifeParams:
    """0D homogeneous fit (one-line model) on synthetic lifetime data."""
    ensure_failures(observations)
    objective = homogeneous_objective(
        observations, config.pores.gauge_volume, config.material.E, config.runout_cycles
    )
    problem = CalibrationProblem(
        objective=objective,
        x0=config.fatigue,
        free_mask=one_line_mask(),
        budget=config.budget,
    )
    return calibrate(problem, n_starts=config.n_starts, seed=config.seed).params


def cmd_homogenize(
    config: RunConfig,
    out_dir,
    cylinder_table_paths,
    params_path=None,
    challenge_porous_path=None,
    challenge_bare_path=None,
    notch_kt: float = DEFAULT_NOTCH_KT,
    notch_volume_fraction: float = DEFAULT_NOTCH_VOLUME_FRACTION,
) -> int:
    """Homogenization transferability study.

    Generates synthetic lifetimes with the multi-scale model (A) on the
    cylinder fields, fits a 0D homogenized model (B) on them, then compares
    the two models' median predictions on the cylinder and on a high-Kt
    challenge geometry (porous for A, pore-free for B).  Challenge tables
    are generated from the config when not supplied.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params_a = _load_params_arg(config, params_path)
    cylinder_tables = [load_criterion_table(p) for p in cylinder_table_paths]
    if not cylinder_tables:
        raise ConfigError("homogenize needs at least one cylinder criterion table")
    levels = config.load_levels

    observations = synthesize_observations(
        params_a,
        cylinder_tables,
        levels,
        config.samples_per_struct,
        config.seed,
        config.runout_cycles,
    )
    params_b = fit_homogenized_model(config, observations)

    if challenge_porous_path is not None:
        challenge_porous = load_criterion_table(challenge_porous_path)
    else:
        seed_gen = np.random.SeedSequence(config.seed).spawn(len(cylinder_tables) + 1)[-1]
        porous_field, _ = synth_field_report(
            config.pores, config.shells, seed_gen, nu=config.material.nu
        )
        challenge_porous = criterion_table(
            notch_variant(porous_field, notch_kt, notch_volume_fraction),
            config.material,
            levels,
            cycles=config.n_cycles,
            samples=config.cycle_samples,
        )
    if challenge_bare_path is not None:
        challenge_bare = load_criterion_table(challenge_bare_path)
    else:
        bare_field = synth_field_report(
            config.pores, config.shells, config.seed, nu=config.material.nu, n_pores=0
        )[0]
        challenge_bare = criterion_table(
            notch_variant(bare_field, notch_kt, notch_volume_fraction),
            config.material,
            levels,
            cycles=config.n_cycles,
            samples=config.cycle_samples,
        )

    report = {
        "model_a": fatigue_as_dict(params_a),
        "model_b": fatigue_as_dict(params_b),
        "levels": list(levels),
        "notch_kt": notch_kt,
        "cylinder": {"median_A": [], "median_B": []},
        "challenge": {"median_A": [], "median_B": []},
    }
    for level in levels:
        structs_a = [structure_for(params_a, Heterogeneous(t), level) for t in cylinder_tables]
        report["cylinder"]["median_A"].append(
            _pooled_median(structs_a, config.samples_per_struct, config.seed, config.runout_cycles)
        )
        report["cylinder"]["median_B"].append(_gauge_structure(params_b, config, level).median())
        report["challenge"]["median_A"].append(
            structure_for(params_a, Heterogeneous(challenge_porous), level).median()
        )
        report["challenge"]["median_B"].append(
            structure_for(params_b, Heterogeneous(challenge_bare), level).median()
        )
    _write_json(out_dir / "homogenize.json", report)
    print("homogenize.json written")
    return EXIT_OK


def _gauge_structure(params: StrainLifeParams, config: RunConfig, level: float) -> StructureLifetime:
    """Homogenized prediction on the plain gauge volume."""
    from .likelihood import Homogeneous

    return structure_for(
        params, Homogeneous(config.pores.gauge_volume, config.material.E), level
    )


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", type=Path, default=None, help="run configuration file")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--threads", type=int, default=1, help="worker threads for parallel maps")
    sub.add_argument("--out", type=Path, required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="porelife",
        description="Probabilistic fatigue lifetimes of porous structures",
    )
    parser.add_argument("--version", action="version", version=f"porelife {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genfield", help="generate synthetic pore fields")
    _add_common(p)
    p.add_argument("--count", type=int, default=1, help="number of fields")
    p.add_argument("--pores", type=int, default=None, help="pin the pore count (0 = bulk only)")
    p.add_argument("--thin", type=float, default=None, help="iso-volume radius divisor")
    p.add_argument("--tile", type=int, default=None, help="tile the field this many times")
    p.add_argument("--notch-kt", type=float, default=None, help="add a notch block at this Kt")
    p.add_argument(
        "--notch-volume-fraction",
        type=float,
        default=DEFAULT_NOTCH_VOLUME_FRACTION,
        help="volume fraction of the notch block",
    )

    p = sub.add_parser("criterion", help="precompute criterion tables")
    _add_common(p)
    p.add_argument("fields", nargs="+", type=Path, help="field files")

    p = sub.add_parser("calibrate", help="maximum-likelihood calibration")
    _add_common(p)
    p.add_argument(
        "--mode",
        required=True,
        choices=["homogeneous", "heterogeneous", "unknown-pores", "joint"],
    )
    p.add_argument("--observations", required=True, type=Path)
    p.add_argument("--tables", nargs="*", type=Path, default=[])
    p.add_argument("--homogeneous-observations", type=Path, default=None)
    p.add_argument("--reduce-per-level", action="store_true")

    p = sub.add_parser("wohler", help="pooled lifetime quantiles per load level")
    _add_common(p)
    p.add_argument("--params", type=Path, default=None, help="fitted.json parameter file")
    p.add_argument("tables", nargs="+", type=Path)

    p = sub.add_parser("homogenize", help="homogenization transferability study")
    _add_common(p)
    p.add_argument("--params", type=Path, default=None)
    p.add_argument("--challenge-porous", type=Path, default=None)
    p.add_argument("--challenge-bare", type=Path, default=None)
    p.add_argument("--notch-kt", type=float, default=DEFAULT_NOTCH_KT)
    p.add_argument(
        "--notch-volume-fraction", type=float, default=DEFAULT_NOTCH_VOLUME_FRACTION
    )
    p.add_argument("tables", nargs="+", type=Path, help="cylinder criterion tables")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.command == "genfield":
            return cmd_genfield(
                config,
                args.out,
                count=args.count,
                n_pores=args.pores,
                thin=args.thin,
                tile=args.tile,
                notch_kt=args.notch_kt,
                notch_volume_fraction=args.notch_volume_fraction,
            )
        if args.command == "criterion":
            return cmd_criterion(config, args.out, args.fields)
        if args.command == "calibrate":
            return cmd_calibrate(
                config,
                args.out,
                mode=args.mode,
                observations_path=args.observations,
                table_paths=args.tables,
                homogeneous_observations_path=args.homogeneous_observations,
                reduce_per_level=args.reduce_per_level,
            )
        if args.command == "wohler":
            return cmd_wohler(config, args.out, args.tables, params_path=args.params)
        if args.command == "homogenize":
            return cmd_homogenize(
                config,
                args.out,
                args.tables,
                params_path=args.params,
                challenge_porous_path=args.challenge_porous,
                challenge_bare_path=args.challenge_bare,
                notch_kt=args.notch_kt,
                notch_volume_fraction=args.notch_volume_fraction,
            )
        raise ConfigError(f"unknown command {args.command}")
    except CalibrationDegeneracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, FieldFormatError, CriterionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
