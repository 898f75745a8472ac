"""Mass-spring lattice built from a SAM, and its time integration.

Each voxel corner is a point mass shared by neighbouring voxels. Springs run
along the 12 voxel edges (axial) and the 12 face diagonals (shear). A spring
bordering contractile voxels has a sinusoidal rest length whose phasor is the
mean over all voxels sharing it (passive voxels contribute zero actuation).
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, MorphologyError, SimulationDiverged
from ..morphology import CONTRACTILE
from ..phase import TWO_PI, PhaseField
from . import backend as _backend

LINEAR_STRAIN_50 = 1.5 ** (1.0 / 3.0) - 1.0

_CORNERS = np.array([(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=np.int64)


def _corner(i, j, k):
    return 4 * i + 2 * j + k


def _voxel_springs():
    """(corner a, corner b, is_diagonal) for the 24 springs of one voxel."""
    out = []
    for a in range(8):
        for b in range(a + 1, 8):
            diff = np.abs(_CORNERS[a] - _CORNERS[b]).sum()
            if diff == 1:
                out.append((a, b, False))
            elif diff == 2:
                out.append((a, b, True))
    return out


_VOXEL_SPRINGS = _voxel_springs()


@dataclass(frozen=True)
class MaterialParams:
    """Material and environment settings.

    Defaults are the in-vitro values (Poisson 0.35, E = 5 MPa, friction 1.0 /
    0.5, +-50 % volumetric actuation at 4 Hz). Friction is stored but inert:
    the cantilevered actuator has no ground contact.
    """

    poisson_ratio: float = 0.35
    youngs_modulus: float = 5e6
    static_friction: float = 1.0
    dynamic_friction: float = 0.5
    volumetric_amplitude: float = 0.5
    actuation_frequency: float = 4.0
    density: float = 1000.0
    voxel_edge: float = 0.01
    damping_ratio: float = 0.1
    gravity: bool = False

    def __post_init__(self):
        if not 0.0 <= self.poisson_ratio < 1.0:
            raise ConfigurationError("poisson_ratio must lie in [0, 1)")
        for name in ("youngs_modulus", "density", "voxel_edge", "actuation_frequency"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"{name} must be positive")
        if self.damping_ratio < 0.0:
            raise ConfigurationError("damping_ratio must be >= 0")
        if not 0.0 <= self.volumetric_amplitude < 1.0:
            raise ConfigurationError("volumetric_amplitude must lie in [0, 1)")

    @classmethod
    def desk(cls, **kw):
        """Mass-scaled preset for desk-scale evolution (same E and nu, 400x density)."""
        base = dict(density=4e5)
        base.update(kw)
        return cls(**base)

    @property
    def linear_strain(self):
        """Isotropic linear strain equivalent to the volumetric amplitude."""
        return (1.0 + self.volumetric_amplitude) ** (1.0 / 3.0) - 1.0

    @property
    def omega(self):
        return 2.0 * math.pi * self.actuation_frequency

    @property
    def axial_stiffness(self):
        return self.youngs_modulus * self.voxel_edge

    @property
    def diagonal_stiffness(self):
        nu = self.poisson_ratio
        return self.axial_stiffness * nu / (1.0 - nu)

    @property
    def voxel_mass(self):
        return self.density * self.voxel_edge ** 3

    def to_dict(self):
        return asdict(self)


@dataclass
class LatticeState:
    pos: np.ndarray  # (n, 3) m
    vel: np.ndarray  # (n, 3) m/s
    mass: np.ndarray  # (n,) kg
    damping: np.ndarray  # (n,) N s/m
    fixed: np.ndarray  # (n,) bool
    spring_a: np.ndarray  # (m,) int64, a < b
    spring_b: np.ndarray
    rest0: np.ndarray
    stiffness: np.ndarray
    coef_sin: np.ndarray  # weight of sin(w t) in the rest-length modulation
    coef_cos: np.ndarray  # weight of cos(w t)
    probe: np.ndarray  # free-end node indices
    strain: float = LINEAR_STRAIN_50
    omega: float = 8.0 * math.pi
    gravity_z: float = 0.0
    step_index: int = 0
    dt: float = 0.0
    grid: np.ndarray | None = field(default=None, repr=False)  # integer corner coords

    @property
    def n_nodes(self):
        return len(self.pos)

    @property
    def n_springs(self):
        return len(self.rest0)

    @property
    def active(self):
        return (self.coef_sin != 0.0) | (self.coef_cos != 0.0)

    @property
    def phase(self):
        """Phase of each spring's modulation (0 for passive springs)."""
        return np.arctan2(self.coef_cos, self.coef_sin)

    @property
    def amplitude(self):
        return np.hypot(self.coef_sin, self.coef_cos)

    @property
    def time(self):
        return self.step_index * self.dt

    @property
    def free_idx(self):
        return np.flatnonzero(~self.fixed).astype(np.int64)

    def copy(self):
        return replace(self, pos=self.pos.copy(), vel=self.vel.copy())

    def stable_dt(self):
        """Largest admissible step: 0.5 sqrt(m_min / k_max)."""
        return 0.5 * math.sqrt(float(self.mass.min()) / float(self.stiffness.max()))

    def default_dt(self):
        return 0.5 * self.stable_dt()

    def centroid(self):
        p = self.pos[self.probe[0]].copy()
        for j in self.probe[1:]:
            p += self.pos[j]
        return p / len(self.probe)

    def momentum(self):
        return (self.mass[:, None] * self.vel).sum(axis=0)

    def rest_lengths(self, t):
        s, c = math.sin(self.omega * t), math.cos(self.omega * t)
        return self.rest0 * (1.0 + self.strain * (self.coef_sin * s + self.coef_cos * c))

    def energy(self, t=None):
        """Kinetic plus spring energy at the instantaneous rest lengths."""
        t = self.time if t is None else t
        kin = 0.5 * float((self.mass * (self.vel ** 2).sum(axis=1)).sum())
        d = self.pos[self.spring_b] - self.pos[self.spring_a]
        ext = np.sqrt((d ** 2).sum(axis=1)) - self.rest_lengths(t)
        return kin + 0.5 * float((self.stiffness * ext ** 2).sum())


def build_lattice(sam, mat=None, phase_field=None, anchor=True):
    """Lattice for ``sam``; nodes on the x = 0 plane are fixed when ``anchor``."""
    mat = mat or MaterialParams()
    occ = sam.occupied()
    if len(occ) == 0:
        raise MorphologyError("SAM has no voxels")
    if anchor and not (occ[:, 0] == 0).any():
        raise MorphologyError("no voxel on the x = 0 plane: nothing anchors the actuator")
    codes = sam.voxels[tuple(occ.T)]
    nv = len(occ)

    corners = (occ[:, None, :] + _CORNERS[None, :, :]).reshape(-1, 3)
    grid, node_of = np.unique(corners, axis=0, return_inverse=True)
    node_of = node_of.reshape(nv, 8)
    n = len(grid)

    mass = np.bincount(node_of.ravel(), minlength=n) * (mat.voxel_mass / 8.0)

    pairs = []
    diag = []
    for ca, cb, is_diag in _VOXEL_SPRINGS:
        a, b = node_of[:, ca], node_of[:, cb]
        pairs.append(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1))
        diag.append(np.full(nv, is_diag))
    pairs = np.concatenate(pairs)
    diag = np.concatenate(diag)
    owner = np.tile(np.arange(nv), len(_VOXEL_SPRINGS))
    uniq, spring_of = np.unique(pairs, axis=0, return_inverse=True)
    spring_of = spring_of.ravel()
    m = len(uniq)
    is_diag = np.zeros(m, dtype=bool)
    is_diag[spring_of] = diag

    if phase_field is None:
        phases = np.zeros(nv)
    else:
        if len(phase_field) != nv or not np.array_equal(phase_field.coords, occ):
            raise ConfigurationError("phase field does not match the SAM's occupied voxels")
        phases = phase_field.phases
        if not np.all(np.abs(phases) <= TWO_PI):
            raise ConfigurationError("phase offsets must lie in [-2pi, 2pi]")
    contractile = (codes == CONTRACTILE).astype(float)
    border_count = np.bincount(spring_of, minlength=m).astype(float)
    ph = phases[owner]
    act = contractile[owner]
    coef_sin = np.bincount(spring_of, weights=act * np.cos(ph), minlength=m) / border_count
    coef_cos = np.bincount(spring_of, weights=act * np.sin(ph), minlength=m) / border_count

    L = mat.voxel_edge
    pos = grid.astype(float) * L
    # rest lengths use the kernel's length formula, so an unactuated lattice is exactly at rest
    d = pos[uniq[:, 1]] - pos[uniq[:, 0]]
    rest0 = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])
    stiffness = np.where(is_diag, mat.diagonal_stiffness, mat.axial_stiffness)
    k_max = float(stiffness.max())
    damping = 2.0 * mat.damping_ratio * np.sqrt(k_max * mass)
    fixed = grid[:, 0] == 0 if anchor else np.zeros(n, dtype=bool)
    probe = np.flatnonzero(grid[:, 0] == grid[:, 0].max()).astype(np.int64)

    return LatticeState(
        pos=pos,
        vel=np.zeros((n, 3)),
        mass=mass,
        damping=damping,
        fixed=fixed,
        spring_a=uniq[:, 0].astype(np.int64),
        spring_b=uniq[:, 1].astype(np.int64),
        rest0=rest0,
        stiffness=stiffness,
        coef_sin=coef_sin,
        coef_cos=coef_cos,
        probe=probe,
        strain=mat.linear_strain,
        omega=mat.omega,
        gravity_z=-9.81 if mat.gravity else 0.0,
        grid=grid,
    )


def rest_length(state, spring, t):
    """Rest length of spring ``spring`` at time ``t`` (s)."""
    if t < 0:
        raise ConfigurationError("time must be >= 0")
    s, c = math.sin(state.omega * t), math.cos(state.omega * t)
    return float(state.rest0[spring] * (1.0 + state.strain * (state.coef_sin[spring] * s + state.coef_cos[spring] * c)))


def _check_dt(state, dt):
    if not dt > 0.0:
        raise ConfigurationError("dt must be positive")
    bound = state.stable_dt()
    if dt > bound * (1.0 + 1e-12):
        raise ConfigurationError(f"dt={dt:.3g} s exceeds the stability bound {bound:.3g} s")


def _integrate(state, dt, n_steps, sample_every, backend=None):
    integrate = _backend.get(backend)
    free = state.free_idx
    return integrate(
        state.pos,
        state.vel,
        1.0 / state.mass,
        state.damping,
        free,
        state.spring_a,
        state.spring_b,
        state.rest0,
        state.stiffness,
        state.coef_sin,
        state.coef_cos,
        float(state.strain),
        float(state.omega),
        float(state.gravity_z),
        float(dt),
        int(n_steps),
        int(state.step_index),
        int(sample_every),
        state.probe,
    )


def step(state, dt, n_steps=1, backend=None):
    """New state after ``n_steps`` semi-implicit Euler steps of size ``dt``.

    Time is tracked as an integer step index, so ``dt`` must not change
    between calls on the same trajectory.
    """
    _check_dt(state, dt)
    if state.step_index and state.dt and dt != state.dt:
        raise ConfigurationError("dt changed mid-trajectory")
    new = state.copy()
    new.dt = dt
    _integrate(new, dt, n_steps, sample_every=max(1, n_steps) + 1 + new.step_index, backend=backend)
    new.step_index += n_steps
    return new


@dataclass(frozen=True)
class SimParams:
    duration: float = 1.0
    dt: float | None = None
    sample_every: int = 10

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ConfigurationError("duration must be positive")
        if self.sample_every < 1:
            raise ConfigurationError("sample_every must be >= 1")


@dataclass
class SimTrace:
    times: np.ndarray
    centroids: np.ndarray
    voxel_count: int
    config_hash: str = ""
    diverged: bool = False

    def __len__(self):
        return len(self.times)

    @property
    def displacement(self):
        return self.centroids - self.centroids[0]

    def to_csv(self):
        out = io.StringIO()
        out.write(f"# voxel_count={self.voxel_count} config_hash={self.config_hash}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "cx", "cy", "cz"])
        for t, (x, y, z) in zip(self.times.tolist(), self.centroids.tolist()):
            w.writerow([repr(t), repr(x), repr(y), repr(z)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        header = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
        rows = list(csv.DictReader(lines[1:]))
        times = np.array([float(r["t"]) for r in rows])
        cents = np.array([[float(r["cx"]), float(r["cy"]), float(r["cz"])] for r in rows]).reshape(-1, 3)
        return cls(times, cents, int(header["voxel_count"]), header.get("config_hash", ""))

    def save(self, path):
        Path(path).write_text(self.to_csv())


def config_hash(mat, params, dt):
    payload = repr((sorted(mat.to_dict().items()), params.duration, dt, params.sample_every))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def simulate(sam, phase_field, mat=None, duration=None, sample_every=None, dt=None, params=None,
             backend=None):
    """Trace of the free-end face centroid over ``duration`` seconds."""
    mat = mat or MaterialParams()
    params = params or SimParams()
    params = replace(
        params,
        duration=params.duration if duration is None else duration,
        sample_every=params.sample_every if sample_every is None else sample_every,
        dt=params.dt if dt is None else dt,
    )
    if phase_field is None:
        phase_field = PhaseField.uniform(sam, 0.0)
    state = build_lattice(sam, mat, phase_field)
    dt = params.dt or state.default_dt()
    _check_dt(state, dt)
    n_steps = max(1, int(math.ceil(params.duration / dt - 1e-9)))
    state.dt = dt
    times, cents = _integrate(state, dt, n_steps, params.sample_every, backend=backend)
    return SimTrace(times, cents, sam.voxel_count, config_hash(mat, params, dt))


def trace_metrics(trace):
    """Upward-constrained max, unconstrained max and final yz displacement."""
    if len(trace) == 0:
        raise ConfigurationError("empty trace")
    d = trace.displacement
    planar = np.sqrt(d[:, 1] ** 2 + d[:, 2] ** 2)
    upward = d[:, 2] >= 0.0
    return {
        "upward_max": float(planar[upward].max()) if upward.any() else 0.0,
        "planar_max": float(planar.max()),
        "final": float(planar[-1]),
    }


def fitness_from_trace(trace):
    """Largest yz-plane displacement among samples that bend upward (z >= z0)."""
    return trace_metrics(trace)["upward_max"]


__all__ = [
    "LINEAR_STRAIN_50",
    "LatticeState",
    "MaterialParams",
    "SimParams",
    "SimTrace",
    "SimulationDiverged",
    "build_lattice",
    "config_hash",
    "fitness_from_trace",
    "rest_length",
    "simulate",
    "step",
    "trace_metrics",
]
