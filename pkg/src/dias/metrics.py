"""Weighted estimation error against the ground-truth field."""
from __future__ import annotations

import numpy as np

from .gp import predict


class UndefinedWeightError(ValueError):
    """Ground truth is constant, so the max-min weighting is undefined."""


def wrmse(mu_grid, phi_grid) -> float:
    """RMS error weighted by ``(phi - min phi) / (max phi - min phi)``."""
    mu = np.asarray(mu_grid, dtype=float)
    phi = np.asarray(phi_grid, dtype=float)
    if mu.shape != phi.shape:
        raise ValueError(f"shape mismatch: {mu.shape} vs {phi.shape}")
    lo, hi = phi.min(), phi.max()
    if not hi > lo:
        raise UndefinedWeightError("WRMSE weight undefined for a constant ground-truth grid")
    w = (phi - lo) / (hi - lo)
    return float(np.sqrt(np.mean((mu - phi) ** 2 * w)))


def composite_mean(mu_grids, owner) -> np.ndarray:
    """Take each grid cell's estimate from the robot that owns it."""
    stack = np.asarray(mu_grids, dtype=float)
    owner = np.asarray(owner)
    return np.take_along_axis(stack, owner[None, ...], axis=0)[0]


def pooled_wrmse(models, tess, phi_grid) -> float:
    d = tess.domain
    centers = d.cell_centers()
    grids = [predict(m, centers, return_var=False)[0].reshape(d.grid_ny, d.grid_nx) for m in models]
    return wrmse(composite_mean(grids, tess.cell_of_grid), phi_grid)
