"""Command-line driver for batch experiments and analysis.

Subcommands: evolve, random-search, reevaluate-frozen, analyze,
dump-trajectory. Exit codes: 0 ok, 1 runtime failure, 2 usage/config error.
Relative output paths resolve under $VOXEVO_OUTPUT_ROOT when it is set.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import analysis, figures, fitness, records, runner
from .genome import Genome, MODES, genome_from_text
from .physics import write_trajectory
from .runner import ConfigError, PopulationEvaluator

log = logging.getLogger("voxevo")

OUTPUT_ROOT_ENV = "VOXEVO_OUTPUT_ROOT"


def _resolve_output(path_str: str) -> Path:
    path = Path(path_str)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _add_override_args(parser):
    parser.add_argument("--config", type=Path, help="experiment config file (INI)")
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--population-size", type=int, dest="population_size")
    parser.add_argument("--generations", type=int)
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--sigma", type=float, help="mutation scale override")
    parser.add_argument(
        "--per-voxel-prob", type=float, dest="per_voxel_prob", help="per-gene mutation probability"
    )
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for evaluation")


def _load_config(args) -> runner.ExperimentConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "mode",
            "population_size",
            "generations",
            "runs",
            "seed",
            "output_dir",
            "sigma",
            "per_voxel_prob",
        )
    }
    return runner.load_config(args.config, overrides)


def _with_pool(jobs: int, fn):
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            return fn(pool)
    return fn(None)


def cmd_evolve(args) -> int:
    cfg = _load_config(args)
    out_dir = _resolve_output(cfg.output_dir)
    _with_pool(args.jobs, lambda pool: runner.run_experiment(
        cfg, out_dir, pool=pool, progress_every=args.progress_every
    ))
    print(f"evolve complete: {out_dir}")
    return 0


def cmd_random_search(args) -> int:
    cfg = _load_config(args)
    out_dir = _resolve_output(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = runner.config_hash(cfg)
    modes = [args.only_mode] if args.only_mode else list(MODES)

    def work(pool):
        evaluator = PopulationEvaluator(cfg.sim, pool=pool)
        for mode in modes:
            fits = analysis.random_search(
                args.n, mode, cfg.sim, cfg.seed, evaluate=evaluator.evaluate_genomes
            )
            path = out_dir / f"random_search_{mode}.csv"
            with open(path, "w") as fh:
                fh.write(records.meta_line(chash, cfg.seed))
                fh.write("index,fitness\n")
                for i, f in enumerate(fits):
                    fh.write(f"{i},{float(f)!r}\n")
            print(f"wrote {path}")

    _with_pool(args.jobs, work)
    return 0


def _runs_from_dir(run_dir: Path) -> list[dict]:
    manifest = runner.load_manifest(run_dir)
    if manifest is None:
        raise ConfigError(f"no manifest.json in {run_dir}")
    runs = []
    for key in sorted(manifest["runs"], key=int):
        info = manifest["runs"][key]
        _, gens = records.read_generations_csv(run_dir / info["generations_csv"])
        _, lineage = records.read_lineage_csv(run_dir / info["lineage_csv"])
        run = {
            "mode": manifest["config"]["experiment"]["mode"],
            "seed": info["seed"],
            "run_index": int(key),
            "generations": gens,
            "lineage": lineage,
            "config_hash": manifest["config_hash"],
            "per_voxel_prob": manifest["config"]["mutation"]["per_voxel_prob"],
        }
        frozen_path = run_dir / f"run_{int(key):02d}_frozen.csv"
        if frozen_path.exists():
            run["frozen"] = _read_frozen_csv(frozen_path)
        runs.append(run)
    return runs


def _read_frozen_csv(path) -> dict[int, float]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("generation"):
                continue
            gen, _id, fz = line.split(",")
            out[int(gen)] = float(fz)
    return out


def cmd_reevaluate_frozen(args) -> int:
    run_dir = _resolve_output(str(args.run_dir))
    if not run_dir.exists():
        raise ConfigError(f"run directory not found: {run_dir}")
    manifest = runner.load_manifest(run_dir)
    if manifest is None:
        raise ConfigError(f"no manifest.json in {run_dir}")
    sim_kwargs = dict(manifest["config"]["sim"])
    sim_kwargs["sample_rate"] = int(sim_kwargs["sample_rate"])
    sim = runner.SimConfig(**sim_kwargs)
    chash = manifest["config_hash"]

    def work(pool):
        evaluator = PopulationEvaluator(sim, pool=pool, eval_mode=fitness.FROZEN_MIDLIFE)
        for key in sorted(manifest["runs"], key=int):
            info = manifest["runs"][key]
            _, gens = records.read_generations_csv(run_dir / info["generations_csv"])
            _, lineage = records.read_lineage_csv(run_dir / info["lineage_csv"])
            genomes_by_id = {e.id: e for e in lineage}
            champions = [(g.generation, g.best_id) for g in gens]
            genome_list = [
                Genome(genomes_by_id[best_id].genes, genomes_by_id[best_id].mode)
                for _, best_id in champions
            ]
            frozen_fits = evaluator.evaluate_genomes(genome_list)
            out_path = run_dir / f"run_{int(key):02d}_frozen.csv"
            with open(out_path, "w") as fh:
                fh.write(records.meta_line(chash, info["seed"]))
                fh.write("generation,id,frozen_fitness\n")
                for (gen, best_id), fz in zip(champions, frozen_fits):
                    fh.write(f"{gen},{best_id},{fz!r}\n")
            print(f"wrote {out_path}")

    _with_pool(args.jobs, work)
    return 0


def cmd_analyze(args) -> int:
    run_dirs = [_resolve_output(str(d)) for d in args.run_dirs]
    for d in run_dirs:
        if not d.exists():
            raise ConfigError(f"run directory not found: {d}")
    out_dir = _resolve_output(str(args.out))
    out_dir.mkdir(parents=True, exist_ok=True)

    runs: list[dict] = []
    for d in run_dirs:
        runs.extend(_runs_from_dir(d))
    hashes = sorted({r["config_hash"] for r in runs})
    seeds = ",".join(str(r["seed"]) for r in runs)
    meta = f"config_hashes={'|'.join(hashes)} seeds={seeds}"
    if len(hashes) > 1:
        meta += " warning=mixed_configs"

    figures.write_fig4_trajectories(runs, out_dir, meta)
    figures.write_fig5_window_fitness(runs, out_dir, meta)
    figures.write_fig6_lineages(runs, out_dir, meta)
    figures.write_fig7_mutation_impact(runs, out_dir, meta)

    random_samples = {}
    for d in run_dirs:
        for mode in MODES:
            path = d / f"random_search_{mode}.csv"
            if path.exists():
                vals = []
                with open(path) as fh:
                    for line in fh:
                        if line.startswith("#") or line.startswith("index") or not line.strip():
                            continue
                        vals.append(float(line.split(",")[1]))
                random_samples[mode] = np.asarray(vals)
    if random_samples:
        figures.write_fig3_random(random_samples, out_dir, meta, bins=args.bins)
    else:
        log.info("no random-search samples found; skipping fig3")

    rates = sorted({r["per_voxel_prob"] for r in runs})
    if len(rates) > 1:
        cells = [
            analysis.SweepCell(
                r["per_voxel_prob"], r["mode"], r["run_index"], r["seed"],
                r["generations"][-1].best_fitness,
            )
            for r in runs
        ]
        figures.write_fig8_sweep(cells, out_dir, meta)
    else:
        log.info("single mutation rate; skipping fig8")
    print(f"analysis written to {out_dir}")
    return 0


def cmd_dump_trajectory(args) -> int:
    genome_path = Path(args.genome)
    if not genome_path.exists():
        raise ConfigError(f"genome file not found: {genome_path}")
    cfg = _load_config(args)
    with open(genome_path) as fh:
        g = genome_from_text(fh.read())
    trace = fitness.evaluate(g, cfg.sim, record_frames=True)
    out = Path(args.out)
    write_trajectory(out, trace.times, trace.frames)
    print(f"wrote {out} (fitness {trace.fitness:.6f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxevo", description="Soft voxel robots with lifetime growth under AFPO."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run evolutionary searches")
    _add_override_args(p)
    p.add_argument("--progress-every", type=int, default=0, help="log best fitness every N generations")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("random-search", help="evaluate random genomes per mode")
    _add_override_args(p)
    p.add_argument("--n", type=int, default=1000, help="robots per mode")
    p.add_argument("--only-mode", choices=MODES, help="restrict to one mode")
    p.set_defaults(func=cmd_random_search)

    p = sub.add_parser("reevaluate-frozen", help="reevaluate run champions with development frozen")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_reevaluate_frozen)

    p = sub.add_parser("analyze", help="emit figure CSVs and plots from run dirs")
    p.add_argument("run_dirs", nargs="+", type=Path)
    p.add_argument("--out", default="analysis")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dump-trajectory", help="simulate a genome file and dump node positions")
    _add_override_args(p)
    p.add_argument("--genome", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_trajectory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except records.RecordParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        log.exception("command failed: %s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
