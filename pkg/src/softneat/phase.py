"""Per-voxel phase offsets (the decoded controller output)."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * math.pi


class PhaseField:
    """Phase offsets on the nonzero voxels of a SAM.

    ``coords`` are (n, 3) voxel indices in lexicographic order, ``phases`` the
    matching offsets in radians.
    """

    __slots__ = ("dims", "coords", "phases")

    def __init__(self, dims, coords, phases):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        phases = np.asarray(phases, dtype=float).reshape(-1)
        if len(coords) != len(phases):
            raise ConfigurationError("coords and phases differ in length")
        self.dims = tuple(int(d) for d in dims)
        self.coords = coords
        self.phases = phases

    @classmethod
    def for_sam(cls, sam, phases):
        return cls(sam.dims, sam.occupied(), phases)

    @classmethod
    def uniform(cls, sam, value):
        return cls.for_sam(sam, np.full(sam.voxel_count, float(value)))

    @classmethod
    def from_grid(cls, sam, grid):
        grid = np.asarray(grid, dtype=float)
        if grid.shape != sam.dims:
            raise ConfigurationError(f"grid shape {grid.shape} != SAM dims {sam.dims}")
        occ = sam.occupied()
        return cls(sam.dims, occ, grid[tuple(occ.T)])

    def __len__(self):
        return len(self.phases)

    def grid(self, fill=0.0):
        g = np.full(self.dims, fill, dtype=float)
        if len(self.coords):
            g[tuple(self.coords.T)] = self.phases
        return g

    def in_range(self):
        return bool(np.all(np.abs(self.phases) <= TWO_PI))

    def mirrored_y(self):
        Y = self.dims[1]
        c = self.coords.copy()
        c[:, 1] = Y - 1 - c[:, 1]
        order = np.lexsort((c[:, 2], c[:, 1], c[:, 0]))
        return PhaseField(self.dims, c[order], self.phases[order])

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["x", "y", "z", "phase"])
        for (x, y, z), p in zip(self.coords.tolist(), self.phases.tolist()):
            w.writerow([x, y, z, repr(p)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text, sam):
        reader = csv.DictReader(io.StringIO(text))
        grid = np.zeros(sam.dims)
        seen = np.zeros(sam.dims, dtype=bool)
        for row in reader:
            x, y, z = int(row["x"]), int(row["y"]), int(row["z"])
            grid[x, y, z] = float(row["phase"])
            seen[x, y, z] = True
        missing = (sam.voxels != 0) & ~seen
        if missing.any():
            raise ConfigurationError(f"phase file misses {int(missing.sum())} occupied voxel(s)")
        return cls.from_grid(sam, grid)

    def save(self, path):
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path, sam):
        return cls.from_csv(Path(path).read_text(), sam)


def clamp_phase(values):
    """Clamp to [-2pi, 2pi]; NaN becomes 0 and infinities saturate."""
    v = np.nan_to_num(np.asarray(values, dtype=float), nan=0.0, posinf=TWO_PI, neginf=-TWO_PI)
    return np.clip(v, -TWO_PI, TWO_PI)
