"""Soft actuator morphologies (SAMs): voxel grids of material codes.

Codes: 0 empty, 1 passive, 3 contractile. The x = 0 face is the anchored end.

The ``.sam`` text format is a header line ``X Y Z`` followed by Z blocks (one
per z layer, bottom first) of Y rows of X digits, blocks separated by a blank
line.
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MorphologyError, SamParseError

EMPTY, PASSIVE, CONTRACTILE = 0, 1, 3
MATERIALS = (EMPTY, PASSIVE, CONTRACTILE)
CANVAS = (20, 8, 8)

NF_STRIPED_SEEDS = (0, 1, 2, 3, 4, 5)
NF_PYRAMID_TRIMS = (0, 2, 4)
NW_FRAGMENT_SEEDS = tuple(range(100, 109))

_NEIGHBOURS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


class Sam:
    """Immutable voxel grid indexed ``voxels[x, y, z]``."""

    __slots__ = ("_voxels",)

    def __init__(self, voxels):
        v = np.array(voxels, dtype=np.int8, copy=True)
        if v.ndim != 3:
            raise MorphologyError(f"voxel array must be 3-D, got shape {v.shape}")
        v.setflags(write=False)
        self._voxels = v

    @property
    def voxels(self):
        return self._voxels

    @property
    def dims(self):
        return tuple(int(d) for d in self._voxels.shape)

    @property
    def voxel_count(self):
        return int(np.count_nonzero(self._voxels))

    @property
    def contractile_count(self):
        return int(np.count_nonzero(self._voxels == CONTRACTILE))

    def occupied(self):
        """Coordinates (n, 3) of nonzero voxels in lexicographic (x, y, z) order."""
        return np.argwhere(self._voxels != 0)

    def digest(self):
        h = hashlib.sha256(repr(self.dims).encode())
        h.update(self._voxels.tobytes())
        return h.hexdigest()[:16]

    def mirrored_y(self):
        return Sam(self._voxels[:, ::-1, :])

    def __eq__(self, other):
        return isinstance(other, Sam) and self.dims == other.dims and np.array_equal(self._voxels, other._voxels)

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self):
        return f"Sam(dims={self.dims}, voxels={self.voxel_count}, contractile={self.contractile_count})"


@dataclass(frozen=True)
class Violation:
    kind: str  # "bounds" | "code" | "anchor" | "connectivity"
    message: str
    coords: tuple = ()


def components(mask):
    """6-connected components of a boolean grid, as lists of coordinates."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    comps = []
    for start in map(tuple, np.argwhere(mask)):
        if seen[start]:
            continue
        seen[start] = True
        comp, queue = [], deque([start])
        while queue:
            p = queue.popleft()
            comp.append(p)
            for d in _NEIGHBOURS:
                q = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
                if all(0 <= q[i] < mask.shape[i] for i in range(3)) and mask[q] and not seen[q]:
                    seen[q] = True
                    queue.append(q)
        comps.append(comp)
    return comps


def is_connected(mask):
    """True when the set cells of ``mask`` form one 6-connected component (vectorised flood fill)."""
    mask = np.asarray(mask, dtype=bool)
    cells = np.argwhere(mask)
    if len(cells) == 0:
        return True
    reached = np.zeros_like(mask)
    reached[tuple(cells[0])] = True
    count = 1
    while True:
        grown = reached.copy()
        grown[1:] |= reached[:-1]
        grown[:-1] |= reached[1:]
        grown[:, 1:] |= reached[:, :-1]
        grown[:, :-1] |= reached[:, 1:]
        grown[:, :, 1:] |= reached[:, :, :-1]
        grown[:, :, :-1] |= reached[:, :, 1:]
        grown &= mask
        n = int(grown.sum())
        if n == count:
            return n == len(cells)
        reached, count = grown, n


def validate(sam, canvas=CANVAS):
    """List of invariant violations; empty means valid."""
    v = sam.voxels
    out = []
    if any(d > c for d, c in zip(sam.dims, canvas)) or any(d < 1 for d in sam.dims):
        out.append(Violation("bounds", f"dims {sam.dims} exceed canvas {canvas}"))
    bad = np.argwhere(~np.isin(v, MATERIALS))
    if len(bad):
        out.append(
            Violation("code", f"{len(bad)} voxel(s) with codes outside {{0,1,3}}", tuple(map(tuple, bad.tolist())))
        )
    occupied = v != 0
    if not occupied[0].any():
        out.append(Violation("anchor", "no voxel on the x = 0 plane"))
    comps = components(occupied)
    if len(comps) > 1:
        comps.sort(key=len, reverse=True)
        stray = tuple(c for comp in comps[1:] for c in comp)
        out.append(Violation("connectivity", f"{len(comps)} disconnected components", stray))
    if not comps:
        out.append(Violation("anchor", "SAM has no voxels"))
    return out


def is_valid(sam, canvas=CANVAS):
    return not validate(sam, canvas)


def check(sam, canvas=CANVAS):
    problems = validate(sam, canvas)
    if problems:
        raise MorphologyError("; ".join(p.message for p in problems))
    return sam


# enclosure ------------------------------------------------------------------


def add_passive_enclosure(sam):
    """Wrap the contractile body in a one-voxel passive tube along x.

    For every x slice spanned by contractile voxels, the ring just outside the
    body's y/z bounding box becomes passive where it is empty and inside the
    canvas. Contractile voxels are never overwritten, so the operation is
    idempotent. A grid larger than the canvas is a dims error.
    """
    if any(d > c for d, c in zip(sam.dims, CANVAS)):
        raise MorphologyError(f"dims {sam.dims} exceed canvas {CANVAS}")
    v = np.array(sam.voxels)
    body = np.argwhere(v == CONTRACTILE)
    if len(body) == 0:
        return Sam(v)
    (x0, y0, z0), (x1, y1, z1) = body.min(axis=0), body.max(axis=0)
    _, Y, Z = v.shape
    ys = range(max(y0 - 1, 0), min(y1 + 1, Y - 1) + 1)
    zs = range(max(z0 - 1, 0), min(z1 + 1, Z - 1) + 1)
    for x in range(x0, x1 + 1):
        for y in ys:
            for z in zs:
                on_ring = y in (y0 - 1, y1 + 1) or z in (z0 - 1, z1 + 1)
                if on_ring and v[x, y, z] == EMPTY:
                    v[x, y, z] = PASSIVE
    return Sam(v)


# generators -----------------------------------------------------------------


def _check_dims(dims, min_yz=3):
    X, Y, Z = dims
    if X < 1 or Y < min_yz or Z < min_yz:
        raise MorphologyError(f"dims {dims} too small (need Y, Z >= {min_yz})")
    if any(d > c for d, c in zip(dims, CANVAS)):
        raise MorphologyError(f"dims {dims} exceed canvas {CANVAS}")


def generate_striped_diagonal(dims=CANVAS, seed=0):
    """Contractile body crossed by empty diagonal stripes (period 3 in x + y).

    The seed picks the stripe offset and trims up to a quarter of the body
    length.
    """
    _check_dims(dims)
    X, Y, Z = dims
    rng = np.random.default_rng(seed)
    offset = int(rng.integers(3))
    length = X - int(rng.integers(0, X // 4 + 1))
    v = np.zeros(dims, dtype=np.int8)
    v[:length, 1:Y - 1, 1:Z - 1] = CONTRACTILE
    for x in range(length):
        for y in range(1, Y - 1):
            if (x + y + offset) % 3 == 0:
                v[x, y, 1:Z - 1] = EMPTY
    if not (v == CONTRACTILE).any():
        v[0, 1, 1:Z - 1] = CONTRACTILE
    return add_passive_enclosure(Sam(v))


def generate_pyramidal(dims=CANVAS, trim=0):
    """Contractile body whose y-width grows from bottom to top layer.

    ``trim`` shortens the body by that many voxels along x.
    """
    _check_dims(dims)
    X, Y, Z = dims
    ny, nz = Y - 2, Z - 2
    length = max(1, X - trim)
    v = np.zeros(dims, dtype=np.int8)
    for k in range(nz):
        width = ny if nz == 1 else 1 + round((ny - 1) * k / (nz - 1))
        start = 1 + (ny - width) // 2
        v[:length, start:start + width, 1 + k] = CONTRACTILE
    return add_passive_enclosure(Sam(v))


def generate_fragmented(dims=CANVAS, seed=0):
    """Irregular connected contractile blob with 30-45 % internal holes.

    The x = 0 slice of the body stays solid so the actuator remains anchored.
    """
    _check_dims(dims)
    X, Y, Z = dims
    rng = np.random.default_rng(seed)
    body = np.zeros(dims, dtype=bool)
    body[:, 1:Y - 1, 1:Z - 1] = True
    volume = int(body.sum())
    target = int(np.ceil(rng.uniform(0.30, 0.45) * volume))
    candidates = [tuple(c) for c in np.argwhere(body) if c[0] > 0]
    order = rng.permutation(len(candidates))
    removed = 0
    for idx in order:
        if removed >= target:
            break
        c = candidates[idx]
        body[c] = False
        if not is_connected(body):
            body[c] = True
            continue
        removed += 1
    v = np.where(body, CONTRACTILE, EMPTY).astype(np.int8)
    return add_passive_enclosure(Sam(v))


def hole_fraction(sam):
    """Empty fraction of the interior box the generators fill."""
    X, Y, Z = sam.dims
    inner = sam.voxels[:, 1:Y - 1, 1:Z - 1]
    return float(np.count_nonzero(inner == EMPTY)) / inner.size


def nf_like_set(dims=CANVAS):
    """Nine fit-like SAMs: six striped seeds and three pyramid lengths."""
    sams = [generate_striped_diagonal(dims, s) for s in NF_STRIPED_SEEDS]
    sams += [generate_pyramidal(dims, trim=t) for t in NF_PYRAMID_TRIMS]
    return sams


def nw_like_set(dims=CANVAS):
    """Nine worst-like SAMs: fragmented blobs from fixed seeds."""
    return [generate_fragmented(dims, s) for s in NW_FRAGMENT_SEEDS]


SAM_SETS = {"nf": nf_like_set, "nf_like": nf_like_set, "nw": nw_like_set, "nw_like": nw_like_set}

GENERATORS = {
    "striped": lambda dims, seed: generate_striped_diagonal(dims, seed),
    "pyramidal": lambda dims, seed: generate_pyramidal(dims),
    "fragmented": lambda dims, seed: generate_fragmented(dims, seed),
}


# file I/O -------------------------------------------------------------------


def dumps(sam):
    X, Y, Z = sam.dims
    v = sam.voxels
    blocks = []
    for z in range(Z):
        rows = ["".join(str(int(v[x, y, z])) for x in range(X)) for y in range(Y)]
        blocks.append("\n".join(rows))
    return f"{X} {Y} {Z}\n" + "\n\n".join(blocks) + "\n"


def loads(text, canvas=CANVAS):
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise SamParseError("empty file or missing header", 1)
    parts = lines[0].split()
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise SamParseError(f"header must be 'X Y Z', got {lines[0]!r}", 1)
    X, Y, Z = (int(p) for p in parts)
    if min(X, Y, Z) < 1:
        raise SamParseError(f"non-positive dims {X} {Y} {Z}", 1)
    if X > canvas[0] or Y > canvas[1] or Z > canvas[2]:
        raise MorphologyError(f"dims {X}x{Y}x{Z} exceed canvas {canvas[0]}x{canvas[1]}x{canvas[2]}")
    v = np.zeros((X, Y, Z), dtype=np.int8)
    lineno = 1
    body = lines[1:]
    i = 0
    for z in range(Z):
        if z > 0:
            if i >= len(body) or body[i].strip():
                raise SamParseError("expected blank line between z blocks", lineno + i + 1)
            i += 1
        for y in range(Y):
            if i >= len(body):
                raise SamParseError(f"unexpected end of file in block z={z}", lineno + i + 1)
            row = body[i].strip()
            if len(row) != X:
                raise SamParseError(f"row has {len(row)} cells, expected {X}", lineno + i + 1)
            for x, ch in enumerate(row):
                if ch not in "013":
                    raise SamParseError(f"invalid material {ch!r}", lineno + i + 1)
                v[x, y, z] = int(ch)
            i += 1
    for j in range(i, len(body)):
        if body[j].strip():
            raise SamParseError("trailing content after last block", lineno + j + 1)
    return Sam(v)


def save(sam, path):
    Path(path).write_text(dumps(sam))


def load(path, canvas=CANVAS):
    return loads(Path(path).read_text(), canvas)


__all__ = [
    "CANVAS",
    "CONTRACTILE",
    "EMPTY",
    "PASSIVE",
    "Sam",
    "Violation",
    "add_passive_enclosure",
    "check",
    "components",
    "generate_fragmented",
    "generate_pyramidal",
    "generate_striped_diagonal",
    "hole_fraction",
    "is_connected",
    "is_valid",
    "load",
    "loads",
    "dumps",
    "nf_like_set",
    "nw_like_set",
    "save",
    "validate",
]
