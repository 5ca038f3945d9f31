"""Quasi-uniform scattered node generation by iterative advancing front.

Boundary nodes seed a FIFO expansion queue; each dequeued node spawns 12
candidates on a randomly rotated circle of radius h around it.  Candidates
outside the domain or within 0.85h of an accepted node are discarded.
Rejection queries use a uniform background grid with cell size h.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Domain, discretize_boundary

# candidate acceptance radius as a fraction of h
MIN_DIST_FACTOR = 0.85
N_CANDIDATES = 12


class NodeGenError(RuntimeError):
    """Node generation failed to terminate or received bad inputs."""


@dataclass(frozen=True)
class NodeSet:
    """Scattered nodes: boundary nodes first, then interior fill.

    positions (N, 2), normals/tags only for the first boundary_count slots.
    Immutable after construction (arrays are write-protected).
    """

    positions: np.ndarray
    boundary_count: int
    normals: np.ndarray
    tags: np.ndarray
    h: float
    seed: int

    def __post_init__(self):
        for arr in (self.positions, self.normals, self.tags):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def interior(self) -> np.ndarray:
        return self.positions[self.boundary_count:]

    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[: self.boundary_count] = True
        return mask


class _Grid:
    """Uniform background grid for O(1) proximity rejection."""

    def __init__(self, cell: float):
        self.cell = cell
        self.cells: dict[tuple[int, int], list[int]] = {}

    def key(self, p) -> tuple[int, int]:
        return (int(math.floor(p[0] / self.cell)), int(math.floor(p[1] / self.cell)))

    def insert(self, idx: int, p) -> None:
        self.cells.setdefault(self.key(p), []).append(idx)

    def neighbor_indices(self, p) -> list[int]:
        ix, iy = self.key(p)
        out: list[int] = []
        for cx in range(ix - 1, ix + 2):
            for cy in range(iy - 1, iy + 2):
                got = self.cells.get((cx, cy))
                if got:
                    out.extend(got)
        return out


def fill(domain: Domain, h: float, seed: int) -> NodeSet:
    """Fill the domain with quasi-uniform nodes seeded from its boundary.

    Deterministic for fixed (domain, h, seed).  Raises NodeGenError if the
    accepted node count exceeds 100 * area / h^2 (non-termination guard).
    """
    boundary = discretize_boundary(domain, h)
    nb = len(boundary)
    if nb < 3:
        raise NodeGenError("boundary produced fewer than 3 nodes")

    cap = int(100.0 * domain.area() / h**2) + nb
    buf = np.empty((max(1024, 2 * nb), 2), dtype=float)
    count = 0
    grid = _Grid(h)

    def append(p) -> int:
        nonlocal buf, count
        if count == len(buf):
            buf = np.concatenate([buf, np.empty_like(buf)])
        buf[count] = p
        grid.insert(count, p)
        count += 1
        return count - 1

    for bn in boundary:
        append(bn.position)

    rng = np.random.default_rng(seed)
    queue = deque(range(nb))
    base = 2.0 * math.pi * np.arange(N_CANDIDATES) / N_CANDIDATES
    rmin2 = (MIN_DIST_FACTOR * h) ** 2

    while queue:
        i = queue.popleft()
        center = buf[i]
        phi = rng.uniform(0.0, 2.0 * math.pi)
        ang = base + phi
        cand = center + h * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        inside = domain.contains(cand)
        for c, ok in zip(cand, inside):
            if not ok:
                continue
            neigh = grid.neighbor_indices(c)
            if neigh:
                d = buf[neigh] - c
                if np.min(d[:, 0] ** 2 + d[:, 1] ** 2) < rmin2:
                    continue
            j = append(c)
            queue.append(j)
            if count > cap:
                raise NodeGenError(
                    f"advancing front did not terminate ({count} nodes > cap {cap})"
                )

    positions = buf[:count].copy()
    normals = np.array([bn.normal for bn in boundary], dtype=float)
    tags = np.array([bn.tag for bn in boundary], dtype="U16")
    return NodeSet(
        positions=positions,
        boundary_count=nb,
        normals=normals,
        tags=tags,
        h=float(h),
        seed=int(seed),
    )


def nearest_neighbors(nodes: NodeSet, query, k: int) -> np.ndarray:
    """Indices of the k closest nodes, ascending distance, ties by lower index."""
    if k > nodes.n:
        raise ValueError(f"k={k} exceeds node count {nodes.n}")
    tree = cKDTree(nodes.positions)
    kq = min(nodes.n, k + 8)
    dist, idx = tree.query(np.asarray(query, dtype=float), k=kq)
    order = np.lexsort((idx, dist))
    return idx[order][:k]


def export_csv(nodes: NodeSet, path) -> None:
    """Write the node set as CSV: x, y, is_boundary, nx, ny, tag."""
    nb = nodes.boundary_count
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,is_boundary,nx,ny,tag\n")
        for i, (x, y) in enumerate(nodes.positions):
            if i < nb:
                nx, ny = (float(v) for v in nodes.normals[i])
                fh.write(f"{float(x)!r},{float(y)!r},1,{nx!r},{ny!r},{nodes.tags[i]}\n")
            else:
                fh.write(f"{float(x)!r},{float(y)!r},0,0.0,0.0,\n")
