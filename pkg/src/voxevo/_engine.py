"""Hot inner loop of the lattice simulation, compiled with numba.

Everything here operates on flat arrays prepared by voxevo.physics; keep the
formulas in sync with voxevo.genome (the per-voxel length law is duplicated
so the whole step stays inside one compiled kernel).
"""

from __future__ import annotations

import math

from numba import njit

STATUS_OK = 0
STATUS_BLOWUP = 1


@njit(cache=True)
def advance(
    pos,
    vel,
    anchor,
    stuck,
    spring_i,
    spring_j,
    spring_factor,
    adj_ptr,
    adj_vox,
    s0v,
    s1v,
    tau,
    amp,
    period,
    n_steps,
    step0,
    dt,
    stiffness,
    spring_damping,
    air_drag,
    node_mass,
    gravity,
    contact_stiffness,
    contact_damping,
    friction_static,
    friction_dynamic,
    speed_limit,
    lengths,
    targets,
    forces,
):
    """Advance n_steps of semi-implicit Euler in place; return a status code.

    Per step: voxel resting lengths ramp linearly from s0v to s1v over tau
    and are actuated by amp*sin(2*pi*t/period) scaled by the shrink limiter;
    each spring pulls toward factor * mean(adjacent voxel lengths); ground
    contact is a one-sided penalty spring with a damped normal force.

    Friction is stick-slip with anchors: a stuck node is pinned to its anchor
    point by a tangential spring until that spring's force exceeds the static
    bound mu_s * N; sliding nodes feel impulse-clamped dynamic friction and
    re-stick (anchoring at the current spot) once the dynamic impulse can
    arrest their tangential velocity within one step. Breaking contact
    releases the anchor.
    """
    n_nodes = pos.shape[0]
    n_springs = spring_i.shape[0]
    n_vox = s0v.shape[0]
    inv_mass = 1.0 / node_mass
    speed_sq = speed_limit * speed_limit
    drag_keep = 1.0 - air_drag * dt
    if drag_keep < 0.0:
        drag_keep = 0.0

    for n in range(n_steps):
        t = (step0 + n) * dt
        frac = t / tau
        act = amp * math.sin(2.0 * math.pi * t / period)

        for k in range(n_vox):
            r = s0v[k] + frac * (s1v[k] - s0v[k])
            if r >= 1.0:
                d = 1.0
            else:
                d = (4.0 * r - 1.0) / 3.0
            lengths[k] = r + act * d

        for s in range(n_springs):
            acc = 0.0
            for p in range(adj_ptr[s], adj_ptr[s + 1]):
                acc += lengths[adj_vox[p]]
            targets[s] = spring_factor[s] * acc / (adj_ptr[s + 1] - adj_ptr[s])

        for i in range(n_nodes):
            forces[i, 0] = 0.0
            forces[i, 1] = 0.0
            forces[i, 2] = 0.0

        for s in range(n_springs):
            i = spring_i[s]
            j = spring_j[s]
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            dist = math.sqrt(dx * dx + dy * dy + dz * dz)
            if dist < 1e-12:
                continue
            ux = dx / dist
            uy = dy / dist
            uz = dz / dist
            rel = (
                (vel[j, 0] - vel[i, 0]) * ux
                + (vel[j, 1] - vel[i, 1]) * uy
                + (vel[j, 2] - vel[i, 2]) * uz
            )
            f = stiffness * (dist - targets[s]) + spring_damping * rel
            forces[i, 0] += f * ux
            forces[i, 1] += f * uy
            forces[i, 2] += f * uz
            forces[j, 0] -= f * ux
            forces[j, 1] -= f * uy
            forces[j, 2] -= f * uz

        for i in range(n_nodes):
            fx = forces[i, 0]
            fy = forces[i, 1]
            fz = forces[i, 2] + node_mass * gravity
            normal = 0.0
            in_contact = pos[i, 2] < 0.0
            if in_contact:
                normal = -contact_stiffness * pos[i, 2] - contact_damping * vel[i, 2]
                if normal < 0.0:
                    normal = 0.0
                fz += normal
            else:
                stuck[i] = False

            sliding = in_contact
            if in_contact and stuck[i]:
                ftx = -contact_stiffness * (pos[i, 0] - anchor[i, 0]) - contact_damping * vel[i, 0]
                fty = -contact_stiffness * (pos[i, 1] - anchor[i, 1]) - contact_damping * vel[i, 1]
                if ftx * ftx + fty * fty > (friction_static * normal) ** 2:
                    stuck[i] = False  # anchor breaks, slide this step
                else:
                    fx += ftx
                    fy += fty
                    sliding = False

            vel[i, 0] = (vel[i, 0] + dt * fx * inv_mass) * drag_keep
            vel[i, 1] = (vel[i, 1] + dt * fy * inv_mass) * drag_keep
            vel[i, 2] = (vel[i, 2] + dt * fz * inv_mass) * drag_keep

            if sliding and normal > 0.0:
                imp = friction_dynamic * normal * dt * inv_mass
                vt = math.sqrt(vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1])
                if vt <= imp:
                    vel[i, 0] = 0.0
                    vel[i, 1] = 0.0
                    stuck[i] = True
                    anchor[i, 0] = pos[i, 0]
                    anchor[i, 1] = pos[i, 1]
                else:
                    scale = 1.0 - imp / vt
                    vel[i, 0] *= scale
                    vel[i, 1] *= scale

            pos[i, 0] += dt * vel[i, 0]
            pos[i, 1] += dt * vel[i, 1]
            pos[i, 2] += dt * vel[i, 2]
            sp = vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1] + vel[i, 2] * vel[i, 2]
            if not (sp <= speed_sq):
                return STATUS_BLOWUP
    return STATUS_OK
