"""Grid-rasterised Voronoi partition of the domain and its neighbour graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .env import Domain

DUPLICATE_NUDGE = 1e-9


@dataclass(frozen=True)
class Tessellation:
    generators: np.ndarray      # (N, 2)
    cell_of_grid: np.ndarray    # (ny, nx) owner index per grid cell
    adjacency: np.ndarray       # (N, N) bool, symmetric, zero diagonal
    domain: Domain

    @property
    def n_robots(self) -> int:
        return len(self.generators)

    def mask(self, robot_i: int) -> np.ndarray:
        return self.cell_of_grid == robot_i

    def cell_sizes(self) -> np.ndarray:
        return np.bincount(self.cell_of_grid.ravel(), minlength=self.n_robots)


def _separate_duplicates(positions: np.ndarray, domain: Domain) -> np.ndarray:
    pos = positions.copy()
    for i in range(1, len(pos)):
        while np.any(np.all(pos[:i] == pos[i], axis=1)):
            step = DUPLICATE_NUDGE if pos[i, 0] + DUPLICATE_NUDGE <= domain.width else -DUPLICATE_NUDGE
            pos[i, 0] += step
    return pos


def nearest_generator(generators: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Owner of each point; exact ties go to the lowest robot index."""
    return np.argmin(cdist(np.atleast_2d(points), generators, "sqeuclidean"), axis=1)


def update_voronoi(positions, domain: Domain) -> Tessellation:
    gens = np.atleast_2d(np.asarray(positions, dtype=float))
    if len(gens) < 1:
        raise ValueError("need at least one generator")
    for p in gens:
        domain.check(p)
    gens = _separate_duplicates(gens, domain)
    n = len(gens)
    owner = nearest_generator(gens, domain.cell_centers()).reshape(domain.grid_ny, domain.grid_nx)

    adj = np.zeros((n, n), dtype=bool)
    for a, b in ((owner[:, :-1], owner[:, 1:]), (owner[:-1, :], owner[1:, :])):
        diff = a != b
        adj[a[diff], b[diff]] = True
    # a generator crowded out of every grid cell is linked to whoever owns its spot
    flat = owner.ravel()
    for i, p in enumerate(gens):
        j = flat[domain.cell_index(p)]
        if j != i:
            adj[i, j] = True
    adj = adj | adj.T
    np.fill_diagonal(adj, False)
    return Tessellation(gens, owner, adj, domain)


def cell_member(tess: Tessellation, robot_i: int, q) -> bool:
    """Whether ``q`` lies in robot ``robot_i``'s cell (exact distances, low-index ties)."""
    q = tess.domain.check(q)
    return int(nearest_generator(tess.generators, q[None, :])[0]) == robot_i


def neighbors(tess: Tessellation, robot_i: int) -> list[int]:
    return [int(j) for j in np.flatnonzero(tess.adjacency[robot_i])]
