"""Hybrid exploration/exploitation switch for a single robot."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .env import Domain
from .ergodic import FourierBasis, ergodic_control
from .gp import GpModel, predict
from .voronoi import Tessellation


class Mode(str, enum.Enum):
    SEEKING = "seeking"
    SENSING = "sensing"


@dataclass(frozen=True)
class ControllerConfig:
    beta: float = 5.0
    tau: float = 0.08
    exclusion_radius: float = 0.8
    lcb_use_std: bool = False
    # mask candidates within found_radius of the robot's own past samples
    exclude_visited: bool = True

    def __post_init__(self):
        if self.beta < 0 or self.tau <= 0 or self.exclusion_radius <= 0:
            raise ValueError(f"invalid controller config: {self}")


@dataclass(frozen=True)
class PotentialSource:
    index: int          # flat grid index
    position: np.ndarray
    mu: float
    var: float
    lcb: float


def lcb(mu, var, cfg: ControllerConfig):
    width = np.sqrt(var) if cfg.lcb_use_std else var
    return mu - cfg.beta * width


def find_local_maxima(mu_grid, cell_mask, exclusion_mask) -> np.ndarray:
    """Flat indices of strict 8-neighbour maxima of ``mu_grid`` in the cell, outside exclusions."""
    mu = np.asarray(mu_grid, dtype=float)
    if not (mu.shape == np.shape(cell_mask) == np.shape(exclusion_mask)):
        raise ValueError("masks must match the grid shape")
    padded = np.pad(mu, 1, constant_values=-np.inf)
    ny, nx = mu.shape
    is_max = np.ones_like(mu, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            is_max &= mu > padded[1 + dy:1 + dy + ny, 1 + dx:1 + dx + nx]
    is_max &= np.asarray(cell_mask, dtype=bool) & ~np.asarray(exclusion_mask, dtype=bool)
    return np.flatnonzero(is_max)


def exclusion_mask(domain: Domain, found_positions, radius: float) -> np.ndarray:
    centers = domain.cell_centers()
    mask = np.zeros(len(centers), dtype=bool)
    for p in np.asarray(found_positions, dtype=float).reshape(-1, 2):
        mask |= np.sum((centers - p) ** 2, axis=1) <= radius**2
    return mask.reshape(domain.grid_ny, domain.grid_nx)


def select_target(mu_grid, var_grid, cell_mask, excl_mask, cfg: ControllerConfig, domain: Domain,
                  blocked=None):
    """Return ``(is_src, best)`` where ``best`` is the highest-LCB candidate or None.

    ``blocked`` cells are removed from the surface before the maxima search,
    so the best remaining point next to a blocked region can still qualify.
    """
    mu_grid = np.asarray(mu_grid, dtype=float)
    surface = mu_grid if blocked is None else np.where(blocked, -np.inf, mu_grid)
    cand = find_local_maxima(surface, cell_mask, excl_mask)
    if len(cand) == 0:
        return False, None
    mu = mu_grid.ravel()[cand]
    var = np.asarray(var_grid).ravel()[cand]
    scores = lcb(mu, var, cfg)
    k = int(np.argmax(scores))  # first maximum, i.e. lowest grid index
    if not scores[k] > cfg.tau:
        return False, None
    idx = int(cand[k])
    best = PotentialSource(idx, domain.cell_centers()[idx], float(mu[k]), float(var[k]), float(scores[k]))
    return True, best


def identify_potential_source(gp: GpModel, tess: Tessellation, robot_i: int, found_positions,
                              cfg: ControllerConfig):
    domain = tess.domain
    mu, var = predict(gp, domain.cell_centers())
    shape = (domain.grid_ny, domain.grid_nx)
    excl = exclusion_mask(domain, found_positions, cfg.exclusion_radius)
    is_src, best = select_target(mu.reshape(shape), var.reshape(shape), tess.mask(robot_i), excl, cfg, domain)
    return is_src, (best.position if best is not None else None)


def source_seeking_step(position, q_target, u_max: float, domain: Domain) -> np.ndarray:
    """Straight-line step of length ``min(u_max, distance)`` toward the target."""
    x = np.asarray(position, dtype=float)
    delta = domain.check(q_target) - x
    dist = np.hypot(*delta)
    if dist == 0:
        return np.zeros(2)
    u = delta * min(1.0, u_max / dist)
    return domain.clip(x + u) - x


def visited_mask(domain: Domain, samples, radius: float) -> np.ndarray:
    """Grid cells within ``radius`` of any sampling location."""
    return exclusion_mask(domain, samples, radius)


def controller_step(position, mu_grid, var_grid, cell_mask, found_positions, I_k_bar, c_k_bar,
                    basis: FourierBasis, cfg: ControllerConfig, u_max: float,
                    force_sensing: bool = False, visited=None):
    """One hybrid-controller decision: ``(mode, command, target)``.

    ``visited`` optionally marks grid cells already verified empty (within the
    found radius of an own sample); they are cut out of the maxima search.
    A robot already standing on its best candidate has nothing to
    seek, so it falls back to active sensing for that step.
    """
    domain = basis.domain
    target = None
    if not force_sensing:
        excl = exclusion_mask(domain, found_positions, cfg.exclusion_radius)
        is_src, best = select_target(mu_grid, var_grid, cell_mask, excl, cfg, domain, blocked=visited)
        if is_src and np.hypot(*(best.position - np.asarray(position))) > 1e-9:
            target = best.position
            return Mode.SEEKING, source_seeking_step(position, target, u_max, domain), target
    return Mode.SENSING, ergodic_control(I_k_bar, c_k_bar, position, u_max, basis), target
