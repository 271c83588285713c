"""Command-line entry point: validate, run, compare, simulate, surface.

Exit codes: 0 ok, 2 validation, 3 numerical failure, 4 I/O. Failures leave
a machine-readable error.json in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import artifacts
from .config import RunConfig, load_config, validate_config_file
from .errors import DomainError, NumericalError
from .geometry import pairwise_distances
from .gp import PhiSupport, build_cache
from .network import build_design, build_dyads
from .nodetable import read_node_csv
from .sampler import PosteriorDraws, run_chain
from .scoring import chain_summary, score_model
from .simulate import run_appendixA
from .surface import estimate_surface, read_grid_csv
from .weights import four_weight_models

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _chain_worker(args):
    dyads, design, spec, priors, config, cache, seq = args
    return run_chain(dyads, design, spec, priors, config, cache,
                     rng=np.random.default_rng(seq))


def _run_all_chains(dyads, design, spec, priors, config, cache, threads: int):
    seqs = np.random.SeedSequence(config.seed).spawn(config.chains)
    jobs = [(dyads, design, spec, priors, config, cache, s) for s in seqs]
    if threads > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=min(threads, config.chains)) as pool:
            chains = list(pool.map(_chain_worker, jobs))
    else:
        chains = [_chain_worker(j) for j in jobs]
    for c in chains:
        c.seed = config.seed
    return chains


def pool_chains(chains: list[PosteriorDraws]) -> PosteriorDraws:
    """Stack the thinned draws of several chains into one container."""
    first = chains[0]

    def cat(name):
        if getattr(first, name) is None:
            return None
        return np.concatenate([getattr(c, name) for c in chains], axis=0)

    return PosteriorDraws(
        beta=cat("beta"), sigma2_y=cat("sigma2_y"), gamma=cat("gamma"),
        eta=cat("eta"), theta=cat("theta"), sigma2_eta=cat("sigma2_eta"),
        sigma2_theta=cat("sigma2_theta"), phi=cat("phi"),
        fitted_means=cat("fitted_means"),
        beta_names=first.beta_names, gamma_labels=first.gamma_labels,
        seed=first.seed,
    )


def _prepare(config: RunConfig):
    table = read_node_csv(config.nodes_csv, config.coordinate_mode)
    dyads = build_dyads(table, config.dissimilarity,
                        location_tol=config.location_tolerance)
    design = build_design(table, dyads)
    cache = None
    if config.sampler.spatial_effects:
        if config.phi_values:
            support = PhiSupport(tuple(config.phi_values))
        else:
            support = PhiSupport.from_max_distance(
                dyads.scale_denominators[0], config.phi_increment)
        dist = pairwise_distances(dyads.location_coords, config.coordinate_mode)
        cache = build_cache(dist, support)
    return table, dyads, design, cache


def _base_meta(config: RunConfig, dyads, design, cache) -> dict:
    return {
        "schema_version": 1,
        "seed": config.sampler.seed,
        "config": config.raw,
        "nodes_csv": str(config.nodes_csv),
        "coordinate_mode": config.coordinate_mode.value,
        "location_tolerance": config.location_tolerance,
        "n": dyads.n,
        "dyad_count": dyads.dyad_count,
        "m": dyads.m,
        "design_columns": design.column_names,
        "dropped_columns": design.dropped_columns,
        "scale_denominators": list(dyads.scale_denominators),
        "phi_support": list(cache.support.values) if cache else None,
        "jitter_events": cache.jitter_events if cache else [],
    }


def cmd_run(config: RunConfig, out_dir: Path, threads: int) -> int:
    t0 = time.perf_counter()
    table, dyads, design, cache = _prepare(config)
    spec = config.weight_spec()
    chains = _run_all_chains(dyads, design, spec, config.priors,
                             config.sampler, cache, threads)
    pooled = pool_chains(chains)

    out_dir.mkdir(parents=True, exist_ok=True)
    dyads.to_csv(out_dir / "dyads.csv")
    artifacts.write_draws(out_dir, chains)
    artifacts.write_summary(out_dir / "summary.csv", chain_summary(chains))
    score = score_model(dyads, design, pooled, spec,
                        mode=config.scoring_mode, thin=config.scoring_thin)
    artifacts.write_scores(out_dir / "scores.csv", [score])

    if config.grid_csv is not None:
        grid = read_grid_csv(config.grid_csv)
        surf = estimate_surface(pooled, grid, design.column_names,
                                location_coords=dyads.location_coords,
                                cache=cache, mode=config.coordinate_mode,
                                thin=config.surface_thin)
        surf.to_csv(out_dir / "surface.csv")

    meta = _base_meta(config, dyads, design, cache)
    meta.update({
        "subcommand": "run",
        "weight_model": spec.label,
        "chains": config.sampler.chains,
        "acceptance_rates": {"gamma": [c.acceptance_rate for c in chains]},
        "proposal_scales": [c.proposal_scale for c in chains],
        "iterations_per_second": [c.sweeps_per_second for c in chains],
        "wall_clock_seconds": time.perf_counter() - t0,
    })
    artifacts.write_run_meta(out_dir / "run_meta.json", meta)
    return EXIT_OK


def cmd_compare(config: RunConfig, out_dir: Path, threads: int) -> int:
    t0 = time.perf_counter()
    table, dyads, design, cache = _prepare(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    dyads.to_csv(out_dir / "dyads.csv")
    scores = []
    rates = {}
    for name, spec in four_weight_models().items():
        chains = _run_all_chains(dyads, design, spec, config.priors,
                                 config.sampler, cache, threads)
        pooled = pool_chains(chains)
        sc = score_model(dyads, design, pooled, spec,
                         mode=config.scoring_mode, thin=config.scoring_thin)
        sc.label = name
        scores.append(sc)
        rates[name] = [c.acceptance_rate for c in chains]
        sub = out_dir / f"model_{name}"
        artifacts.write_draws(sub, chains)
        artifacts.write_summary(sub / "summary.csv", chain_summary(chains))
    artifacts.write_scores(out_dir / "scores.csv", scores)
    meta = _base_meta(config, dyads, design, cache)
    meta.update({
        "subcommand": "compare",
        "chains": config.sampler.chains,
        "acceptance_rates": rates,
        "wall_clock_seconds": time.perf_counter() - t0,
    })
    artifacts.write_run_meta(out_dir / "run_meta.json", meta)
    return EXIT_OK


def cmd_simulate_appendixA(seeds: list[int], iterations: int, out_dir: Path) -> int:
    t0 = time.perf_counter()
    report = run_appendixA(seeds, iterations=iterations, out_dir=out_dir)
    plain, weighted = report.coverage_counts()
    meta = {
        "schema_version": 1,
        "subcommand": "simulate appendixA",
        "seed": seeds[0],
        "seeds": seeds,
        "iterations": iterations,
        "coverage_plain": plain,
        "coverage_weighted": weighted,
        "inflation_dt1": [r.inflation_dt1 for r in report.results],
        "inflation_dt3": [r.inflation_dt3 for r in report.results],
        "wall_clock_seconds": time.perf_counter() - t0,
        "jitter_events": [],
        "acceptance_rates": {},
    }
    artifacts.write_run_meta(out_dir / "run_meta.json", meta)
    return EXIT_OK


def cmd_surface(in_dir: Path, grid_path: Path, out_dir: Path, thin: int) -> int:
    meta_path = in_dir / "run_meta.json"
    if not meta_path.exists():
        raise DomainError(f"no run_meta.json in {in_dir}")
    with meta_path.open(encoding="utf-8") as fh:
        meta = json.load(fh)
    from .geometry import CoordinateMode
    mode = CoordinateMode(meta["coordinate_mode"])
    table = read_node_csv(meta["nodes_csv"], mode)
    from .network import distinct_locations
    loc_index, loc_coords = distinct_locations(table, meta["location_tolerance"])
    cache = None
    if meta.get("phi_support"):
        support = PhiSupport(tuple(meta["phi_support"]))
        cache = build_cache(pairwise_distances(loc_coords, mode), support)
    chains = artifacts.read_draws(in_dir)
    pooled = pool_chains(chains)
    grid = read_grid_csv(grid_path)
    surf = estimate_surface(pooled, grid, meta["design_columns"],
                            location_coords=loc_coords, cache=cache,
                            mode=mode, thin=thin)
    out_dir.mkdir(parents=True, exist_ok=True)
    surf.to_csv(out_dir / "surface.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadflow",
        description="Bayesian composite dyadic regression on spatio-temporal networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="dry-run config checks, no side effects")
    p_val.add_argument("--config", required=True)

    for name, descr in (("run", "fit the configured model and emit all artifacts"),
                        ("compare", "fit the four weight models and emit scores.csv")):
        p = sub.add_parser(name, help=descr)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=None, help="override output directory")

    p_sim = sub.add_parser("simulate", help="run a named simulation experiment")
    p_sim.add_argument("experiment", choices=["appendixA"])
    p_sim.add_argument("--seeds", default="1", help="comma-separated seed list")
    p_sim.add_argument("--iterations", type=int, default=50_000)
    p_sim.add_argument("--out", required=True)

    p_surf = sub.add_parser("surface", help="re-grid the potential from stored draws")
    p_surf.add_argument("--in", dest="in_dir", required=True)
    p_surf.add_argument("--grid", required=True)
    p_surf.add_argument("--out", required=True)
    p_surf.add_argument("--thin", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "validate":
        issues = validate_config_file(args.config)
        print(json.dumps({"issues": issues}, indent=2))
        return EXIT_OK if not issues else EXIT_VALIDATION

    out_dir = None
    stage = args.command
    try:
        if args.command in ("run", "compare"):
            issues = validate_config_file(args.config)
            if issues:
                for issue in issues:
                    print(f"config error: {issue}", file=sys.stderr)
                return EXIT_VALIDATION
            config = load_config(args.config)
            if args.seed is not None:
                config.sampler.seed = args.seed
            out_dir = Path(args.out) if args.out else config.output_dir
            handler = cmd_run if args.command == "run" else cmd_compare
            return handler(config, out_dir, args.threads)
        if args.command == "simulate":
            out_dir = Path(args.out)
            seeds = [int(s) for s in str(args.seeds).split(",") if s.strip()]
            if not seeds:
                raise DomainError("at least one seed required")
            return cmd_simulate_appendixA(seeds, args.iterations, out_dir)
        if args.command == "surface":
            out_dir = Path(args.out)
            return cmd_surface(Path(args.in_dir), Path(args.grid), out_dir, args.thin)
    except DomainError as exc:
        _report_failure(out_dir, stage, exc)
        return EXIT_VALIDATION
    except NumericalError as exc:
        _report_failure(out_dir, stage, exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        _report_failure(out_dir, stage, exc)
        return EXIT_IO
    return EXIT_OK


def _report_failure(out_dir: Path | None, stage: str, exc: Exception) -> None:
    print(f"{stage} failed: {exc}", file=sys.stderr)
    if out_dir is not None:
        try:
            artifacts.write_error(out_dir, stage, exc)
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
