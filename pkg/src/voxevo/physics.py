"""Mass-spring lattice simulation of the 4x4x3 voxel robot.

Point masses sit at voxel corners (shared between neighbors). Every pair of
corners within a voxel is connected by a spring: 12 cube edges, 12 face
diagonals and 4 internal diagonals, so the cube resists shear and collapse.
A spring's target length is the mean resting length of the voxels it belongs
to, scaled by sqrt(2) / sqrt(3) for diagonals. Integration is semi-implicit
Euler at a fixed timestep; the ground plane is a penalty spring with Coulomb
friction. One simulation is single-threaded and fully deterministic; distinct
states can be stepped concurrently from any number of threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .genome import GRID_X, GRID_Y, GRID_Z, LENGTH_MAX, LENGTH_MIN, NUM_VOXELS

NODES_X, NODES_Y, NODES_Z = GRID_X + 1, GRID_Y + 1, GRID_Z + 1
NUM_NODES = NODES_X * NODES_Y * NODES_Z  # 100

# Uniform node mass chosen so a unit voxel weighs 1: total mass 48 over 100 nodes.
TOTAL_MASS = float(NUM_VOXELS)
NODE_MASS = TOTAL_MASS / NUM_NODES

# Contact penalty parameters, as multiples of the structural stiffness.
CONTACT_STIFFNESS_RATIO = 10.0
CONTACT_DAMPING_RATIO = 1.0


class SimulationBlowup(RuntimeError):
    """Raised when a node exceeds the configured speed limit (dt too large)."""


def node_index(ix: int, iy: int, iz: int) -> int:
    return ix + NODES_X * (iy + NODES_Y * iz)


def _build_topology():
    # Springs keyed by node pair; a pair shared between voxels becomes one
    # spring whose target averages over all owning voxels.
    pairs: dict[tuple[int, int], list[int]] = {}
    factors: dict[tuple[int, int], float] = {}
    corners_of: list[list[int]] = []
    offsets = list(itertools.product((0, 1), repeat=3))
    for vz in range(GRID_Z):
        for vy in range(GRID_Y):
            for vx in range(GRID_X):
                vid = vx + GRID_X * (vy + GRID_Y * vz)
                corners = [node_index(vx + dx, vy + dy, vz + dz) for dx, dy, dz in offsets]
                while len(corners_of) <= vid:
                    corners_of.append([])
                corners_of[vid] = corners
                for a in range(8):
                    for b in range(a + 1, 8):
                        key = (min(corners[a], corners[b]), max(corners[a], corners[b]))
                        if key not in pairs:
                            oa, ob = offsets[a], offsets[b]
                            ndiff = sum(1 for u, v in zip(oa, ob) if u != v)
                            factors[key] = float(np.sqrt(float(ndiff)))
                            pairs[key] = []
                        pairs[key].append(vid)

    keys = sorted(pairs)
    spring_i = np.array([k[0] for k in keys], dtype=np.int32)
    spring_j = np.array([k[1] for k in keys], dtype=np.int32)
    spring_factor = np.array([factors[k] for k in keys], dtype=np.float64)
    adj_ptr = np.zeros(len(keys) + 1, dtype=np.int32)
    adj_vox = []
    for n, k in enumerate(keys):
        adj_vox.extend(sorted(pairs[k]))
        adj_ptr[n + 1] = len(adj_vox)
    return (
        spring_i,
        spring_j,
        spring_factor,
        adj_ptr,
        np.array(adj_vox, dtype=np.int32),
        np.array(corners_of, dtype=np.int32),
    )


SPRING_I, SPRING_J, SPRING_FACTOR, ADJ_PTR, ADJ_VOX, VOXEL_CORNERS = _build_topology()
NUM_SPRINGS = len(SPRING_I)

_NODE_GRID = np.array(
    [(ix, iy, iz) for iz in range(NODES_Z) for iy in range(NODES_Y) for ix in range(NODES_X)],
    dtype=np.int32,
)
TOP_NODES = np.flatnonzero(_NODE_GRID[:, 2] == NODES_Z - 1)
BOTTOM_NODES = np.flatnonzero(_NODE_GRID[:, 2] == 0)


@dataclass(frozen=True)
class SimConfig:
    """Physics and evaluation constants. Defaults were tuned once so the
    uniform robot settles in under half a second, then frozen."""

    dt: float = 1e-4
    eval_duration: float = 8.0
    actuation_amplitude: float = 0.20
    actuation_period: float = 0.25
    sample_rate: int = 100
    gravity: float = -981.0
    stiffness: float = 20000.0
    damping_ratio: float = 0.4
    air_drag: float = 0.0
    ground_friction: float = 1.0
    static_friction_ratio: float = 1.5
    rollover_margin: float = 0.1
    speed_limit: float = 1000.0

    def __post_init__(self):
        if self.dt <= 0 or self.eval_duration <= 0 or self.sample_rate <= 0:
            raise ValueError("dt, eval_duration and sample_rate must be positive")
        if not 0.0 <= self.actuation_amplitude <= 0.2:
            raise ValueError(f"actuation amplitude {self.actuation_amplitude} outside [0, 0.2]")
        if self.actuation_period <= 0:
            raise ValueError("actuation period must be positive")
        if self.stiffness <= 0 or self.damping_ratio < 0 or self.ground_friction < 0:
            raise ValueError("stiffness must be > 0; damping and friction >= 0")
        if self.static_friction_ratio < 1.0:
            raise ValueError("static friction must be at least the dynamic coefficient")
        steps = self.steps_per_sample
        if abs(steps * self.dt * self.sample_rate - 1.0) > 1e-9:
            raise ValueError(
                f"dt={self.dt} does not divide the sample interval 1/{self.sample_rate}"
            )

    @property
    def steps_per_sample(self) -> int:
        return round(1.0 / (self.sample_rate * self.dt))

    @property
    def spring_damping(self) -> float:
        return 2.0 * self.damping_ratio * float(np.sqrt(self.stiffness * NODE_MASS))

    @property
    def contact_stiffness(self) -> float:
        return CONTACT_STIFFNESS_RATIO * self.stiffness

    @property
    def contact_damping(self) -> float:
        return CONTACT_DAMPING_RATIO * float(np.sqrt(self.contact_stiffness * NODE_MASS))


@dataclass
class PhysicsState:
    """Node positions/velocities and contact state; topology lives at module level."""

    positions: np.ndarray  # (NUM_NODES, 3), voxel-length units
    velocities: np.ndarray  # (NUM_NODES, 3)
    anchors: np.ndarray  # (NUM_NODES, 2) stiction anchor points
    stuck: np.ndarray  # (NUM_NODES,) bool, True while pinned to the anchor
    step_count: int = 0
    terminated_rollover: bool = False
    dt: float = field(default=1e-4, repr=False)

    @property
    def time(self) -> float:
        return self.step_count * self.dt

    def copy(self) -> "PhysicsState":
        return PhysicsState(
            self.positions.copy(),
            self.velocities.copy(),
            self.anchors.copy(),
            self.stuck.copy(),
            self.step_count,
            self.terminated_rollover,
            self.dt,
        )


def _validate_rest_lengths(rest_lengths) -> np.ndarray:
    rl = np.ascontiguousarray(rest_lengths, dtype=np.float64)
    if rl.shape != (NUM_VOXELS,):
        raise ValueError(f"expected {NUM_VOXELS} rest lengths, got shape {rl.shape}")
    if np.any(rl < LENGTH_MIN) or np.any(rl > LENGTH_MAX):
        raise ValueError(f"rest lengths must lie in [{LENGTH_MIN}, {LENGTH_MAX}]")
    return rl


def _axis_coords(spacings: np.ndarray, centered: bool) -> np.ndarray:
    # Forward/backward cumulative sums; their half-difference is exactly
    # mirror-symmetric for palindromic spacings, which keeps bilaterally
    # symmetric genomes bit-symmetric about the origin.
    n = len(spacings)
    fwd = np.zeros(n + 1)
    bwd = np.zeros(n + 1)
    for i in range(n):
        fwd[i + 1] = fwd[i] + spacings[i]
    for i in range(n - 1, -1, -1):
        bwd[i] = bwd[i + 1] + spacings[i]
    if centered:
        return 0.5 * (fwd - bwd)
    return fwd


def build_lattice(rest_lengths, config: SimConfig) -> PhysicsState:
    """Assemble the lattice at rest on the ground plane (min node z = 0).

    Grid plane spacing along each axis is the mean rest length of the voxel
    slab between the planes, so a uniform genome yields exact unit (or
    uniformly scaled) cubes.
    """
    rl = _validate_rest_lengths(rest_lengths)
    grid = rl.reshape(GRID_Z, GRID_Y, GRID_X)  # [z, y, x]
    sx = np.array([grid[:, :, i].mean() for i in range(GRID_X)])
    sy = np.array([grid[:, i, :].mean() for i in range(GRID_Y)])
    sz = np.array([grid[i, :, :].mean() for i in range(GRID_Z)])
    xs = _axis_coords(sx, centered=True)
    ys = _axis_coords(sy, centered=True)
    zs = _axis_coords(sz, centered=False)

    positions = np.empty((NUM_NODES, 3), dtype=np.float64)
    for iz in range(NODES_Z):
        for iy in range(NODES_Y):
            for ix in range(NODES_X):
                positions[node_index(ix, iy, iz)] = (xs[ix], ys[iy], zs[iz])
    return PhysicsState(
        positions,
        np.zeros((NUM_NODES, 3)),
        np.zeros((NUM_NODES, 2)),
        np.zeros(NUM_NODES, dtype=np.bool_),
        0,
        False,
        config.dt,
    )


def center_of_mass_y(state: PhysicsState) -> float:
    """Mass-weighted mean y coordinate (uniform masses: the plain mean)."""
    return float(state.positions[:, 1].mean())


def check_rollover(state: PhysicsState, config: SimConfig) -> bool:
    """True when the top node plane's centroid sits below the bottom plane's
    by at least the configured margin."""
    top = state.positions[TOP_NODES, 2].mean()
    bottom = state.positions[BOTTOM_NODES, 2].mean()
    return bool(top < bottom - config.rollover_margin)


def advance_in_place(
    state: PhysicsState,
    s0v: np.ndarray,
    s1v: np.ndarray,
    tau: float,
    amplitude: float,
    config: SimConfig,
    n_steps: int,
    step0: int,
    buffers=None,
) -> int:
    """Run the compiled kernel on the state's arrays; returns its status code."""
    if buffers is None:
        buffers = make_buffers()
    lengths, targets, forces = buffers
    return _engine.advance(
        state.positions,
        state.velocities,
        state.anchors,
        state.stuck,
        SPRING_I,
        SPRING_J,
        SPRING_FACTOR,
        ADJ_PTR,
        ADJ_VOX,
        s0v,
        s1v,
        tau,
        amplitude,
        config.actuation_period,
        n_steps,
        step0,
        config.dt,
        config.stiffness,
        config.spring_damping,
        config.air_drag,
        NODE_MASS,
        config.gravity,
        config.contact_stiffness,
        config.contact_damping,
        config.static_friction_ratio * config.ground_friction,
        config.ground_friction,
        config.speed_limit,
        lengths,
        targets,
        forces,
    )


def make_buffers():
    """Scratch arrays reused across kernel calls within one simulation."""
    return (
        np.empty(NUM_VOXELS, dtype=np.float64),
        np.empty(NUM_SPRINGS, dtype=np.float64),
        np.empty((NUM_NODES, 3), dtype=np.float64),
    )


def step(state: PhysicsState, rest_lengths, config: SimConfig) -> PhysicsState:
    """Advance one timestep toward the given per-voxel rest lengths.

    The caller supplies the instantaneous rest lengths (development and
    actuation already applied); no actuation is added here. Returns a new
    state; raises SimulationBlowup when a node passes the speed limit.
    """
    if state.terminated_rollover:
        raise ValueError("cannot step a state terminated by rollover")
    rl = _validate_rest_lengths(rest_lengths)
    new = state.copy()
    status = advance_in_place(new, rl, rl, 1.0, 0.0, config, n_steps=1, step0=state.step_count)
    if status != _engine.STATUS_OK:
        raise SimulationBlowup(
            f"node speed exceeded {config.speed_limit} at t={state.time}; reduce dt"
        )
    new.step_count += 1
    new.terminated_rollover = check_rollover(new, config)
    return new


def settle(state: PhysicsState, rest_lengths, config: SimConfig, duration: float) -> PhysicsState:
    """Step with fixed rest lengths and no actuation for a given time span."""
    rl = _validate_rest_lengths(rest_lengths)
    new = state.copy()
    n = round(duration / config.dt)
    status = advance_in_place(new, rl, rl, 1.0, 0.0, config, n, state.step_count)
    if status != _engine.STATUS_OK:
        raise SimulationBlowup("settling blew up; reduce dt or stiffness")
    new.step_count += n
    return new


def write_trajectory(path, times, frames) -> None:
    """Dump sampled node positions as text for external viewers.

    Header: node count and lattice dims. Then one line per sample:
    time followed by x y z for every node.
    """
    with open(path, "w") as fh:
        fh.write(f"{NUM_NODES} {GRID_X} {GRID_Y} {GRID_Z}\n")
        for t, frame in zip(times, frames):
            flat = " ".join(f"{v:.9g}" for v in frame.ravel())
            fh.write(f"{t:.9g} {flat}\n")
