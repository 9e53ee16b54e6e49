"""Figure-analog CSVs and plots assembled from persisted run records.

Each writer emits one CSV (with a provenance header comment) and one SVG.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import analysis
from .genome import EVO, EVO_DEVO

log = logging.getLogger(__name__)

MODE_COLORS = {EVO: "tab:blue", EVO_DEVO: "tab:red"}


def _open_csv(path, meta: str):
    fh = open(path, "w")
    fh.write(f"# {meta}\n")
    return fh


def write_fig3_random(samples: dict[str, np.ndarray], out_dir, meta: str, bins: int = 50):
    """Random-search fitness histograms, equal bins across groups."""
    out_dir = Path(out_dir)
    with _open_csv(out_dir / "fig3_random.csv", meta) as fh:
        fh.write("mode,index,fitness\n")
        for mode, vals in samples.items():
            for i, v in enumerate(vals):
                fh.write(f"{mode},{i},{float(v)!r}\n")
    counts, edges = analysis.fitness_histogram(samples, bins=bins)
    fig, ax = plt.subplots(figsize=(6, 4))
    centers = 0.5 * (edges[:-1] + edges[1:])
    for mode, c in counts.items():
        ax.step(centers, c / c.sum(), where="mid", label=mode,
                color=MODE_COLORS.get(mode))
    ax.set_xlabel("fitness")
    ax.set_ylabel("relative frequency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "fig3_random.svg")
    plt.close(fig)


def write_fig4_trajectories(runs: list[dict], out_dir, meta: str):
    """Best-of-generation fitness per run, plus frozen reevaluations if present."""
    out_dir = Path(out_dir)
    with _open_csv(out_dir / "fig4_trajectories.csv", meta) as fh:
        fh.write("mode,seed,generation,best_fitness,frozen_fitness\n")
        for run in runs:
            frozen = run.get("frozen", {})
            for g in run["generations"]:
                fz = frozen.get(g.generation)
                fz_cell = "" if fz is None else repr(fz)
                fh.write(f"{run['mode']},{run['seed']},{g.generation},{g.best_fitness!r},{fz_cell}\n")
    fig, ax = plt.subplots(figsize=(6, 4))
    by_mode: dict[str, list] = {}
    for run in runs:
        by_mode.setdefault(run["mode"], []).append(
            [g.best_fitness for g in run["generations"]]
        )
    for mode, series in by_mode.items():
        n = min(len(s) for s in series)
        arr = np.array([s[:n] for s in series])
        ax.plot(np.arange(n), arr.mean(axis=0), label=mode, color=MODE_COLORS.get(mode))
    ax.set_xlabel("generation")
    ax.set_ylabel("best fitness (mean over runs)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "fig4_trajectories.svg")
    plt.close(fig)


def write_fig5_window_fitness(runs: list[dict], out_dir, meta: str):
    """Total development window vs fitness for every developing individual."""
    out_dir = Path(out_dir)
    ws, fs = [], []
    with _open_csv(out_dir / "fig5_window_vs_fitness.csv", meta) as fh:
        fh.write("mode,seed,id,W,fitness\n")
        for run in runs:
            for e in run["lineage"]:
                fh.write(f"{run['mode']},{run['seed']},{e.id},{e.window!r},{e.fitness!r}\n")
                if run["mode"] == EVO_DEVO:
                    ws.append(e.window)
                    fs.append(e.fitness)
    fig, ax = plt.subplots(figsize=(6, 4))
    if ws:
        ax.plot(ws, fs, ".", ms=2, alpha=0.3, color=MODE_COLORS[EVO_DEVO])
        ax.set_title(f"spearman rho = {analysis.spearman(ws, fs):.3f}")
    ax.set_xlabel("total development window W")
    ax.set_ylabel("fitness")
    fig.tight_layout()
    fig.savefig(out_dir / "fig5_window_vs_fitness.svg")
    plt.close(fig)


def write_fig6_lineages(runs: list[dict], out_dir, meta: str):
    """Champion-lineage window trajectories, oldest ancestor first."""
    out_dir = Path(out_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    with _open_csv(out_dir / "fig6_lineage_windows.csv", meta) as fh:
        fh.write("mode,seed,step,id,W\n")
        for run in runs:
            champion_id = run["generations"][-1].best_id
            path = analysis.lineage_extract(run["lineage"], champion_id)
            for step, e in enumerate(path):
                fh.write(f"{run['mode']},{run['seed']},{step},{e.id},{e.window!r}\n")
            ax.plot(
                [e.window for e in path],
                alpha=0.7,
                color=MODE_COLORS.get(run["mode"]),
                label=run["mode"],
            )
    handles, labels = ax.get_legend_handles_labels()
    uniq = dict(zip(labels, handles))
    if uniq:
        ax.legend(uniq.values(), uniq.keys())
    ax.set_xlabel("lineage step (oldest ancestor -> champion)")
    ax.set_ylabel("total development window W")
    fig.tight_layout()
    fig.savefig(out_dir / "fig6_lineage_windows.svg")
    plt.close(fig)


def write_fig7_mutation_impact(runs: list[dict], out_dir, meta: str):
    """Parent vs child fitness scatter for all mutation events."""
    out_dir = Path(out_dir)
    pts: dict[str, list] = {}
    with _open_csv(out_dir / "fig7_mutation_impact.csv", meta) as fh:
        fh.write("mode,seed,parent_id,child_id,parent_fitness,child_fitness,M,early,late\n")
        for run in runs:
            by_id = {e.id: e for e in run["lineage"]}
            for e in run["lineage"]:
                if e.parent_id is None:
                    continue
                parent = by_id[e.parent_id]
                early = int(e.mutated_s0)
                late = int(e.mutated_s1 and not e.mutated_s0)
                if parent.fitness > 0 and e.fitness > 0:
                    m = repr(analysis.mutation_impact(parent.fitness, e.fitness))
                else:
                    m = ""
                fh.write(
                    f"{run['mode']},{run['seed']},{parent.id},{e.id},"
                    f"{parent.fitness!r},{e.fitness!r},{m},{early},{late}\n"
                )
                pts.setdefault(run["mode"], []).append((parent.fitness, e.fitness))
    fig, axes = plt.subplots(1, max(1, len(pts)), figsize=(5 * max(1, len(pts)), 4))
    if len(pts) <= 1:
        axes = [axes]
    for ax, (mode, pairs) in zip(axes, sorted(pts.items())):
        arr = np.array(pairs)
        ax.plot(arr[:, 0], arr[:, 1], ".", ms=2, alpha=0.3, color=MODE_COLORS.get(mode))
        lim = max(arr.max(), 1e-6)
        ax.plot([0, lim], [0, lim], "k--", lw=0.8)
        ax.set_xlabel("parent fitness")
        ax.set_ylabel("child fitness")
        ax.set_title(mode)
    fig.tight_layout()
    fig.savefig(out_dir / "fig7_mutation_impact.svg")
    plt.close(fig)


def write_fig8_sweep(cells, out_dir, meta: str):
    """Champion fitness per mutation-rate grid cell."""
    out_dir = Path(out_dir)
    with _open_csv(out_dir / "fig8_sweep.csv", meta) as fh:
        fh.write("rate,mode,run,seed,champion_fitness\n")
        for c in cells:
            fh.write(f"{c.rate!r},{c.mode},{c.run_index},{c.seed},{c.champion_fitness!r}\n")
    fig, ax = plt.subplots(figsize=(6, 4))
    by_mode: dict[str, dict[float, list]] = {}
    for c in cells:
        by_mode.setdefault(c.mode, {}).setdefault(c.rate, []).append(c.champion_fitness)
    for mode, per_rate in sorted(by_mode.items()):
        rates = sorted(per_rate)
        med = [float(np.median(per_rate[r])) for r in rates]
        ax.plot(rates, med, "o-", label=mode, color=MODE_COLORS.get(mode))
    ax.set_xlabel("per-gene mutation probability")
    ax.set_ylabel("median champion fitness")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "fig8_sweep.svg")
    plt.close(fig)
