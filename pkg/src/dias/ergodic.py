"""Information density, cosine-basis spectra, consensus averaging and the
spectral ergodic feedback law used for active sensing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Domain


class FourierBasis:
    """Orthonormal separable cosine basis on a rectangle, ``k_max`` modes per axis.

    Modes are ordered row-major over ``(k1, k2)``.
    """

    def __init__(self, domain: Domain, k_max: int = 10):
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
        self.domain = domain
        self.k_max = k_max
        k1, k2 = np.meshgrid(np.arange(k_max), np.arange(k_max), indexing="ij")
        self.modes = np.column_stack([k1.ravel(), k2.ravel()])
        self._w = self.modes * np.pi / np.array([domain.width, domain.height])
        a = np.where(self.modes == 0, 1.0, 0.5)
        self.h = np.sqrt(domain.width * domain.height * a[:, 0] * a[:, 1])
        self.weights = (1.0 + np.sum(self.modes**2, axis=1)) ** -1.5
        self._grid_values = None

    def __len__(self):
        return len(self.modes)

    def evaluate(self, points) -> np.ndarray:
        """Basis values, shape (m, n_modes)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        cx = np.cos(p[:, :1] * self._w[:, 0])
        cy = np.cos(p[:, 1:2] * self._w[:, 1])
        return cx * cy / self.h

    def gradient(self, x) -> np.ndarray:
        """Spatial gradient of every basis function at one point, shape (n_modes, 2)."""
        x = np.asarray(x, dtype=float)
        ax, ay = x[0] * self._w[:, 0], x[1] * self._w[:, 1]
        gx = -self._w[:, 0] * np.sin(ax) * np.cos(ay) / self.h
        gy = -self._w[:, 1] * np.cos(ax) * np.sin(ay) / self.h
        return np.column_stack([gx, gy])

    @property
    def grid_values(self) -> np.ndarray:
        if self._grid_values is None:
            self._grid_values = self.evaluate(self.domain.cell_centers())
        return self._grid_values

    def reconstruct(self, coeffs) -> np.ndarray:
        """Inverse transform onto the domain grid, shape (ny, nx)."""
        d = self.domain
        return (self.grid_values @ np.asarray(coeffs)).reshape(d.grid_ny, d.grid_nx)


@dataclass(frozen=True)
class EidField:
    I_grid: np.ndarray
    gamma: float
    alpha: float


def compute_eid(mu_grid, var_grid, gamma_prev: float, alpha: float = 1.0) -> EidField:
    mu = np.asarray(mu_grid, dtype=float)
    var = np.asarray(var_grid, dtype=float)
    if mu.shape != var.shape:
        raise ValueError(f"mean/variance grids differ in shape: {mu.shape} vs {var.shape}")
    if gamma_prev < 0:
        raise ValueError("gamma must be non-negative")
    info = np.sqrt(np.maximum(var, 0.0) + gamma_prev) - np.sqrt(gamma_prev)
    return EidField(mu + alpha * info, float(gamma_prev), float(alpha))


def update_gamma(gamma_prev: float, var_at_new_sample: float) -> float:
    if gamma_prev < 0 or var_at_new_sample < 0:
        raise ValueError("gamma update needs non-negative inputs")
    return gamma_prev + var_at_new_sample


def normalize_density(I_grid, domain: Domain) -> np.ndarray:
    """Clamp at zero and rescale to unit integral; an all-zero field becomes uniform."""
    I = np.maximum(np.asarray(I_grid, dtype=float), 0.0)
    total = I.sum() * domain.cell_area
    if not total > 0:
        return np.full(I.shape, 1.0 / domain.area)
    return I / total


def fourier_coeffs_of_field(I_grid, basis: FourierBasis) -> np.ndarray:
    """Midpoint-rule projection of a grid field onto every basis mode."""
    I = np.asarray(I_grid, dtype=float).ravel()
    return basis.grid_values.T @ I * basis.domain.cell_area


@dataclass
class TrajectoryStats:
    c_k: np.ndarray
    t_elapsed: float = 0.0

    @classmethod
    def empty(cls, basis: FourierBasis) -> "TrajectoryStats":
        return cls(np.zeros(len(basis)), 0.0)


def update_trajectory_stats(stats: TrajectoryStats, new_position, dt: float, basis: FourierBasis) -> TrajectoryStats:
    if dt <= 0:
        raise ValueError("dt must be positive")
    fk = basis.evaluate(new_position)[0]
    t = stats.t_elapsed
    return TrajectoryStats((t * stats.c_k + dt * fk) / (t + dt), t + dt)


def ergodic_metric(I_k, c_k, weights) -> float:
    I_k, c_k = np.asarray(I_k), np.asarray(c_k)
    if I_k.shape != c_k.shape:
        raise ValueError("coefficient vectors cover different mode sets")
    return float(np.sum(np.asarray(weights) * (I_k - c_k) ** 2))


def metropolis_weights(adjacency) -> np.ndarray:
    A = np.asarray(adjacency, dtype=bool)
    if not np.array_equal(A, A.T):
        raise ValueError("neighbour graph must be symmetric")
    A = A & ~np.eye(len(A), dtype=bool)
    deg = A.sum(axis=1)
    P = np.where(A, 1.0 / (1.0 + np.maximum.outer(deg, deg)), 0.0)
    P[np.diag_indices_from(P)] = 1.0 - P.sum(axis=1)
    return P


def consensus_round(local_values, adjacency, t_c: int = 5) -> np.ndarray:
    """Apply ``t_c`` Metropolis mixing steps to per-robot rows of ``local_values``."""
    if t_c < 1:
        raise ValueError("t_c must be >= 1")
    P = metropolis_weights(adjacency)
    v = np.asarray(local_values, dtype=float)
    for _ in range(t_c):
        v = P @ v
    return v


def ergodic_control(I_k_bar, c_k_bar, position, u_max: float, basis: FourierBasis) -> np.ndarray:
    """Unit-speed descent on the ergodic metric, clipped to stay inside the domain."""
    if u_max <= 0:
        raise ValueError("u_max must be positive")
    x = np.asarray(position, dtype=float)
    coef = basis.weights * (np.asarray(c_k_bar) - np.asarray(I_k_bar))
    b = coef @ basis.gradient(x)
    norm = np.linalg.norm(b)
    if norm < 1e-12:
        return np.zeros(2)
    u = -u_max * b / norm
    return basis.domain.clip(x + u) - x
