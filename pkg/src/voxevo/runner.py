"""Experiment orchestration: config files, manifests, parallel evaluation.

A config file is flat INI text with [experiment], [mutation] and [sim]
sections; command-line overrides win over file values. Every run derives its
own seed from (experiment seed, run index), and evaluation results are merged
back in candidate order, so the number of worker processes cannot change any
output byte.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from . import fitness as fitness_mod
from .analysis import derive_seed
from .evolution import MutationConfig, run_evolution
from .genome import EVO_DEVO, MODES
from .physics import SimConfig
from . import records

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Bad config file or override; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = EVO_DEVO
    population_size: int = 30
    generations: int = 2000
    runs: int = 30
    seed: int = 1
    output_dir: str = "runs/experiment"
    mutation: MutationConfig = field(default_factory=MutationConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"experiment.mode must be one of {MODES}, got {self.mode!r}")
        for name in ("population_size", "generations", "runs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"experiment.{name} must be >= 1")


_EXPERIMENT_KEYS = {
    "mode": str,
    "population_size": int,
    "generations": int,
    "runs": int,
    "seed": int,
    "output_dir": str,
}


def _section_keys(cls) -> dict:
    types = {}
    for f in fields(cls):
        if f.type in ("float", float):
            types[f.name] = float
        elif f.type in ("int", int):
            types[f.name] = int
        else:
            types[f.name] = float
    return types


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from an INI file plus CLI overrides."""
    exp_vals: dict = {}
    mut_vals: dict = {}
    sim_vals: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as err:
            raise ConfigError(f"{path}: {err}") from err
        section_types = {
            "experiment": (_EXPERIMENT_KEYS, exp_vals),
            "mutation": (_section_keys(MutationConfig), mut_vals),
            "sim": (_section_keys(SimConfig), sim_vals),
        }
        for section in parser.sections():
            if section not in section_types:
                raise ConfigError(f"{path}: unknown section [{section}]")
            keys, target = section_types[section]
            for key, raw in parser.items(section):
                if key not in keys:
                    raise ConfigError(f"{path}: unknown key {section}.{key}")
                try:
                    target[key] = keys[key](raw)
                except ValueError as err:
                    raise ConfigError(f"{path}: bad value for {section}.{key}: {raw!r}") from err
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _EXPERIMENT_KEYS:
            exp_vals[key] = _EXPERIMENT_KEYS[key](value)
        elif key in _section_keys(MutationConfig):
            mut_vals[key] = float(value)
        elif key in _section_keys(SimConfig):
            sim_vals[key] = float(value)
        else:
            raise ConfigError(f"unknown override {key!r}")
    try:
        mutation = MutationConfig(**mut_vals)
        sim = SimConfig(**{k: (int(v) if k == "sample_rate" else v) for k, v in sim_vals.items()})
        return ExperimentConfig(mutation=mutation, sim=sim, **exp_vals)
    except (ValueError, TypeError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of everything that determines output data (output_dir excluded)."""
    parts = []
    for name in ("mode", "population_size", "generations", "runs", "seed"):
        parts.append(f"experiment.{name}={getattr(cfg, name)!r}")
    for f in fields(MutationConfig):
        parts.append(f"mutation.{f.name}={getattr(cfg.mutation, f.name)!r}")
    for f in fields(SimConfig):
        parts.append(f"sim.{f.name}={getattr(cfg.sim, f.name)!r}")
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def _evaluate_task(args):
    genome, sim, mode = args
    trace = fitness_mod.evaluate(genome, sim, mode=mode)
    return trace.fitness, trace.terminated_rollover, trace.blown_up


class PopulationEvaluator:
    """Assigns fitness to candidate lists, optionally via a process pool.

    Results are consumed in submission order, so worker scheduling cannot
    reorder anything.
    """

    def __init__(self, sim: SimConfig, pool=None, eval_mode: str = fitness_mod.FULL):
        self.sim = sim
        self.pool = pool
        self.eval_mode = eval_mode

    def evaluate_genomes(self, genomes) -> list[float]:
        tasks = [(g, self.sim, self.eval_mode) for g in genomes]
        if self.pool is None:
            results = [_evaluate_task(t) for t in tasks]
        else:
            results = self.pool.map(_evaluate_task, tasks)
        out = []
        for (fit, rolled, blown) in results:
            if blown:
                log.warning("simulation blew up; assigning fitness 0")
            out.append(fit)
        return out

    def __call__(self, individuals) -> None:
        for ind, fit in zip(individuals, self.evaluate_genomes([i.genome for i in individuals])):
            ind.fitness = fit


def run_seed_for(cfg: ExperimentConfig, run_index: int) -> int:
    return derive_seed(cfg.seed, run_index)


def _manifest_path(out_dir: Path) -> Path:
    return out_dir / "manifest.json"


def load_manifest(out_dir: Path) -> dict | None:
    path = _manifest_path(out_dir)
    if not path.exists():
        return None
    with open(path) as fh:
        return json.load(fh)


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    tmp = _manifest_path(out_dir).with_suffix(".json.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    tmp.replace(_manifest_path(out_dir))


def config_echo(cfg: ExperimentConfig) -> dict:
    echo = {
        "experiment": {
            name: getattr(cfg, name)
            for name in ("mode", "population_size", "generations", "runs", "seed", "output_dir")
        },
        "mutation": {f.name: getattr(cfg.mutation, f.name) for f in fields(MutationConfig)},
        "sim": {f.name: getattr(cfg.sim, f.name) for f in fields(SimConfig)},
    }
    return echo


def run_experiment(cfg: ExperimentConfig, out_dir: Path, pool=None, progress_every: int = 0):
    """Execute (or resume) all runs of an experiment, persisting artifacts.

    Completed runs listed in the manifest are skipped; a manifest written
    under a different config hash aborts rather than mixing artifacts.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    manifest = load_manifest(out_dir)
    if manifest is None:
        manifest = {
            "config_hash": chash,
            "version": __version__,
            "config": config_echo(cfg),
            "runs": {},
        }
    elif manifest.get("config_hash") != chash:
        raise ConfigError(
            f"{out_dir} already holds artifacts for config {manifest.get('config_hash')}, "
            f"refusing to mix with {chash}"
        )

    evaluator = PopulationEvaluator(cfg.sim, pool=pool)
    for run_index in range(cfg.runs):
        key = str(run_index)
        if key in manifest["runs"]:
            log.info("run %d already complete, skipping", run_index)
            continue
        seed = run_seed_for(cfg, run_index)
        started = time.time()
        record = run_evolution(
            cfg.population_size,
            cfg.generations,
            cfg.mode,
            cfg.mutation,
            seed,
            evaluator,
            progress_every=progress_every,
        )
        gen_file = out_dir / f"run_{run_index:02d}_generations.csv"
        lin_file = out_dir / f"run_{run_index:02d}_lineage.csv"
        records.write_generations_csv(record, gen_file, chash)
        records.write_lineage_csv(record, lin_file, chash)
        manifest["runs"][key] = {
            "seed": seed,
            "wall_time_s": round(time.time() - started, 3),
            "generations_csv": gen_file.name,
            "lineage_csv": lin_file.name,
        }
        _write_manifest(out_dir, manifest)
        log.info(
            "run %d done: champion %.4f",
            run_index,
            record.champion().best_fitness,
        )
    return manifest
