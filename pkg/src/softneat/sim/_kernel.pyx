# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled semi-implicit Euler integrator for the voxel lattice.

Mirrors ``_kernel_py.integrate`` operation for operation; see that module for
the argument contract.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, isfinite, sin, sqrt

from ..errors import SimulationDiverged

cnp.import_array()


def integrate(double[:, ::1] pos, double[:, ::1] vel, const double[::1] inv_mass,
              const double[::1] damping, const cnp.int64_t[::1] free_idx,
              const cnp.int64_t[::1] spring_a, const cnp.int64_t[::1] spring_b,
              const double[::1] rest0, const double[::1] stiffness,
              const double[::1] act_sin, const double[::1] act_cos,
              double strain, double omega, double gravity_z, double dt,
              long n_steps, long step0, long sample_every,
              const cnp.int64_t[::1] probe_idx):
    cdef Py_ssize_t n_nodes = pos.shape[0]
    cdef Py_ssize_t n_springs = rest0.shape[0]
    cdef Py_ssize_t n_free = free_idx.shape[0]
    cdef Py_ssize_t n_probe = probe_idx.shape[0]
    cdef long n_samples = 0
    cdef long i, first_sample
    cdef Py_ssize_t e, k, a, b, j, q
    cdef double t, s, c, rest, dx, dy, dz, length, mag, fx, fy, fz
    cdef double ax, ay, az, vx, vy, vz, px, py, pz, im, cd
    cdef double[:, ::1] fa = np.zeros((n_nodes, 3))
    cdef double[:, ::1] fb = np.zeros((n_nodes, 3))

    first_sample = step0 if step0 % sample_every == 0 else step0 + (sample_every - step0 % sample_every)
    if first_sample <= step0 + n_steps:
        n_samples = (step0 + n_steps - first_sample) // sample_every + 1
    times_arr = np.empty(n_samples)
    cents_arr = np.empty((n_samples, 3))
    cdef double[::1] times = times_arr
    cdef double[:, ::1] cents = cents_arr
    cdef long si = 0

    if step0 % sample_every == 0:
        _sample(pos, probe_idx, n_probe, cents, si)
        times[si] = step0 * dt
        si += 1

    for i in range(step0, step0 + n_steps):
        t = i * dt
        s = sin(omega * t)
        c = cos(omega * t)
        for j in range(n_nodes):
            fa[j, 0] = 0.0
            fa[j, 1] = 0.0
            fa[j, 2] = 0.0
            fb[j, 0] = 0.0
            fb[j, 1] = 0.0
            fb[j, 2] = 0.0
        for e in range(n_springs):
            a = spring_a[e]
            b = spring_b[e]
            rest = rest0[e] * (1.0 + strain * (act_sin[e] * s + act_cos[e] * c))
            dx = pos[b, 0] - pos[a, 0]
            dy = pos[b, 1] - pos[a, 1]
            dz = pos[b, 2] - pos[a, 2]
            length = sqrt(dx * dx + dy * dy + dz * dz)
            mag = stiffness[e] * (length - rest) / length
            fx = dx * mag
            fy = dy * mag
            fz = dz * mag
            # separate source/destination sums, each in spring order
            fa[a, 0] += fx
            fa[a, 1] += fy
            fa[a, 2] += fz
            fb[b, 0] += fx
            fb[b, 1] += fy
            fb[b, 2] += fz
        for q in range(n_free):
            j = free_idx[q]
            im = inv_mass[j]
            cd = damping[j]
            ax = ((fa[j, 0] - fb[j, 0]) - cd * vel[j, 0]) * im
            ay = ((fa[j, 1] - fb[j, 1]) - cd * vel[j, 1]) * im
            az = ((fa[j, 2] - fb[j, 2]) - cd * vel[j, 2]) * im + gravity_z
            vx = vel[j, 0] + ax * dt
            vy = vel[j, 1] + ay * dt
            vz = vel[j, 2] + az * dt
            px = pos[j, 0] + vx * dt
            py = pos[j, 1] + vy * dt
            pz = pos[j, 2] + vz * dt
            if not (isfinite(px) and isfinite(py) and isfinite(pz)):
                raise SimulationDiverged((i + 1) * dt)
            vel[j, 0] = vx
            vel[j, 1] = vy
            vel[j, 2] = vz
            pos[j, 0] = px
            pos[j, 1] = py
            pos[j, 2] = pz
        if (i + 1) % sample_every == 0:
            _sample(pos, probe_idx, n_probe, cents, si)
            times[si] = (i + 1) * dt
            si += 1
    return times_arr[:si], cents_arr[:si]


cdef inline void _sample(double[:, ::1] pos, const cnp.int64_t[::1] probe_idx, Py_ssize_t n_probe,
                         double[:, ::1] cents, long si) noexcept:
    cdef Py_ssize_t j, p
    cdef double cx = pos[probe_idx[0], 0]
    cdef double cy = pos[probe_idx[0], 1]
    cdef double cz = pos[probe_idx[0], 2]
    for j in range(1, n_probe):
        p = probe_idx[j]
        cx = cx + pos[p, 0]
        cy = cy + pos[p, 1]
        cz = cz + pos[p, 2]
    cents[si, 0] = cx / n_probe
    cents[si, 1] = cy / n_probe
    cents[si, 2] = cz / n_probe
