"""Pure numpy integrator, the fallback for the compiled kernel.

Operation order matches ``_kernel.pyx`` exactly so both backends produce
identical bits: spring forces are accumulated per node in spring order, the
source-end and destination-end sums are kept apart and subtracted at the end.
"""
import math

import numpy as np

from ..errors import SimulationDiverged


def integrate(pos, vel, inv_mass, damping, free_idx, spring_a, spring_b, rest0, stiffness,
              act_sin, act_cos, strain, omega, gravity_z, dt, n_steps, step0, sample_every,
              probe_idx):
    """Advance ``pos``/``vel`` in place by ``n_steps`` semi-implicit Euler steps.

    Returns (times, centroids) sampled at every ``sample_every``-th step
    counted from ``step0`` (the initial state included when step0 % sample_every == 0).
    Time of step i is ``i * dt``.
    """
    n_nodes = pos.shape[0]
    times = []
    cents = []

    def sample(i):
        c = pos[probe_idx[0]].copy()
        for j in probe_idx[1:]:
            c += pos[j]
        c /= len(probe_idx)
        times.append(i * dt)
        cents.append(c)

    if step0 % sample_every == 0:
        sample(step0)
    pf = pos[free_idx]
    vf = vel[free_idx]
    im = inv_mass[free_idx][:, None]
    cf = damping[free_idx][:, None]
    # non-finite values are reported as SimulationDiverged, not as numpy warnings
    with np.errstate(invalid="ignore", over="ignore"):
        for i in range(step0, step0 + n_steps):
            t = i * dt
            s = math.sin(omega * t)
            c = math.cos(omega * t)
            rest = rest0 * (1.0 + strain * (act_sin * s + act_cos * c))
            d = pos[spring_b] - pos[spring_a]
            length = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
            mag = stiffness * (length - rest) / length
            fs = d * mag[:, None]
            fa = np.empty((n_nodes, 3))
            fb = np.empty((n_nodes, 3))
            for k in range(3):
                fa[:, k] = np.bincount(spring_a, weights=fs[:, k], minlength=n_nodes)
                fb[:, k] = np.bincount(spring_b, weights=fs[:, k], minlength=n_nodes)
            force = fa[free_idx] - fb[free_idx]
            acc = (force - cf * vf) * im
            acc[:, 2] += gravity_z
            vf = vf + acc * dt
            pf = pf + vf * dt
            if not np.isfinite(pf).all():
                raise SimulationDiverged((i + 1) * dt)
            pos[free_idx] = pf
            vel[free_idx] = vf
            if (i + 1) % sample_every == 0:
                sample(i + 1)
    return np.array(times), np.array(cents).reshape(-1, 3)
