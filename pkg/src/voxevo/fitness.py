"""Lifetime evaluation: simulate a genome and score volume-normalized travel.

Fitness sums the per-interval displacement in +y divided by the average body
volume over the interval, sampled at a fixed rate. Volume is computed
analytically from the genome (the lattice only approximates it). Rolling
over onto the top layer, or a numerical blowup, zeroes the fitness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine, physics
from .genome import (
    ActuationParams,
    Gene,
    Genome,
    current_lengths_array,
    expand_arrays,
    genes_to_arrays,
    rest_length,
)
from .physics import SimConfig, TOP_NODES, BOTTOM_NODES

FULL = "full"
FROZEN_MIDLIFE = "frozen_midlife"
FROZEN_EVAL_SECONDS = 2.0


@dataclass
class FitnessTrace:
    """Sampled (t, y, Q) history of one evaluation plus its score."""

    times: np.ndarray
    com_y: np.ndarray
    volume: np.ndarray
    terminated_rollover: bool
    blown_up: bool
    fitness: float
    frames: np.ndarray | None = None  # (samples, nodes, 3) when recorded


def total_volume(genome: Genome, t: float, tau: float, params: ActuationParams) -> float:
    """Current body volume: twice the summed cubed lengths of the 24 genes."""
    if not 0.0 <= t <= tau:
        raise ValueError(f"t={t} outside lifetime [0, {tau}]")
    return _genes_volume(*genes_to_arrays(genome.genes), t, tau, params)


def _genes_volume(s0, s1, t, tau, params) -> float:
    lengths = current_lengths_array(s0, s1, t, tau, params)
    return float(2.0 * np.sum(lengths**3))


def fitness_from_samples(com_y, volume) -> float:
    """Sum of per-interval displacement over average interval volume."""
    y = np.asarray(com_y, dtype=np.float64)
    q = np.asarray(volume, dtype=np.float64)
    if y.shape != q.shape or y.ndim != 1 or len(y) < 1:
        raise ValueError("need equal-length 1-d sample arrays")
    if len(y) == 1:
        return 0.0
    return float(2.0 * np.sum(np.diff(y) / (q[1:] + q[:-1])))


def evaluate(
    genome: Genome,
    config: SimConfig,
    mode: str = FULL,
    record_frames: bool = False,
) -> FitnessTrace:
    """Simulate one lifetime and score it.

    mode "full" develops the genome over config.eval_duration. Mode
    "frozen_midlife" pins every voxel at its midlife resting length and
    evaluates for two seconds (development switched off, actuation kept).
    """
    if mode not in (FULL, FROZEN_MIDLIFE):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    params = ActuationParams(config.actuation_amplitude, config.actuation_period)
    if mode == FROZEN_MIDLIFE:
        tau = config.eval_duration
        genes = tuple(
            Gene(m, m) for m in (rest_length(g, tau / 2.0, tau) for g in genome.genes)
        )
        duration = FROZEN_EVAL_SECONDS
    else:
        genes = genome.genes
        duration = config.eval_duration

    s0g, s1g = genes_to_arrays(genes)
    s0v, s1v = expand_arrays(genes)
    state = physics.build_lattice(s0v, config)
    pos = state.positions
    buffers = physics.make_buffers()
    steps_per = config.steps_per_sample
    n_samples = round(duration * config.sample_rate)

    times = [0.0]
    ys = [float(pos[:, 1].mean())]
    qs = [_genes_volume(s0g, s1g, 0.0, duration, params)]
    frames = [pos.copy()] if record_frames else None
    rolled = False
    blown = False

    for i in range(1, n_samples + 1):
        status = physics.advance_in_place(
            state, s0v, s1v, duration, config.actuation_amplitude,
            config, steps_per, (i - 1) * steps_per, buffers,
        )
        if status != _engine.STATUS_OK:
            blown = True
            break
        t = i / config.sample_rate
        times.append(t)
        ys.append(float(pos[:, 1].mean()))
        qs.append(_genes_volume(s0g, s1g, t, duration, params))
        if frames is not None:
            frames.append(pos.copy())
        # Rollover is checked at sampling instants, not every physics step.
        if pos[TOP_NODES, 2].mean() < pos[BOTTOM_NODES, 2].mean() - config.rollover_margin:
            rolled = True
            break

    fitness = 0.0 if (rolled or blown) else fitness_from_samples(ys, qs)
    return FitnessTrace(
        np.array(times),
        np.array(ys),
        np.array(qs),
        rolled,
        blown,
        fitness,
        np.array(frames) if frames is not None else None,
    )


def export_trace(trace: FitnessTrace, path) -> None:
    """Write t,y,Q rows plus a footer carrying the score and termination flag."""
    with open(path, "w") as fh:
        fh.write("t,y,Q\n")
        for t, y, q in zip(trace.times, trace.com_y, trace.volume):
            fh.write(f"{float(t)!r},{float(y)!r},{float(q)!r}\n")
        fh.write(
            f"# fitness={trace.fitness!r} terminated_rollover={trace.terminated_rollover} "
            f"blown_up={trace.blown_up}\n"
        )
