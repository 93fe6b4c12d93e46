"""Ground-truth environment: a static superposition of Gaussian plumes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when a query point falls outside the rectangular domain."""


@dataclass(frozen=True)
class Domain:
    width: float = 10.0
    height: float = 10.0
    grid_nx: int = 50
    grid_ny: int = 50

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"domain extents must be positive, got {self.width}x{self.height}")
        if self.grid_nx < 2 or self.grid_ny < 2:
            raise ValueError("grid needs at least 2 cells per axis")

    @property
    def cell_area(self) -> float:
        return (self.width / self.grid_nx) * (self.height / self.grid_ny)

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def n_cells(self) -> int:
        return self.grid_nx * self.grid_ny

    def cell_centers(self) -> np.ndarray:
        """Cell centers as an (ny*nx, 2) array in row-major order (row = y index)."""
        xs = (np.arange(self.grid_nx) + 0.5) * (self.width / self.grid_nx)
        ys = (np.arange(self.grid_ny) + 0.5) * (self.height / self.grid_ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_index(self, q) -> int:
        """Flat row-major index of the grid cell containing ``q``."""
        q = self.check(q)
        ix = min(int(q[0] / self.width * self.grid_nx), self.grid_nx - 1)
        iy = min(int(q[1] / self.height * self.grid_ny), self.grid_ny - 1)
        return iy * self.grid_nx + ix

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(0.0 <= q[0] <= self.width and 0.0 <= q[1] <= self.height)

    def check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (2,) or not self.contains(q):
            raise DomainError(f"point {q.tolist()} outside domain [0,{self.width}]x[0,{self.height}]")
        return q

    def clip(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), [0.0, 0.0], [self.width, self.height])


@dataclass(frozen=True)
class Source:
    position: tuple[float, float]
    intensity: float
    spread: float = 1.0

    def __post_init__(self):
        if self.intensity <= 0 or self.spread <= 0:
            raise ValueError(f"source intensity and spread must be positive: {self}")


@dataclass(frozen=True)
class ScalarField:
    sources: tuple[Source, ...]
    domain: Domain = field(default_factory=Domain)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        for s in self.sources:
            if not self.domain.contains(s.position):
                raise DomainError(f"source at {s.position} outside domain")

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.sources], dtype=float).reshape(-1, 2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Vectorised density at an (m, 2) array of points; no domain check."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(points))
        for s in self.sources:
            d2 = np.sum((points - np.asarray(s.position)) ** 2, axis=1)
            out += s.intensity * np.exp(-d2 / (2.0 * s.spread**2))
        return out


def density_at(field: ScalarField, q) -> float:
    q = field.domain.check(q)
    return float(field.evaluate(q[None, :])[0])


def field_on_grid(field: ScalarField) -> np.ndarray:
    """Density at the cell centers, shape (grid_ny, grid_nx)."""
    d = field.domain
    return field.evaluate(d.cell_centers()).reshape(d.grid_ny, d.grid_nx)


@dataclass
class MeasurementModel:
    """Additive Gaussian sensor noise with one independent stream per robot."""

    noise_std: float = 0.01
    streams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    @classmethod
    def seeded(cls, noise_std: float, seed, n_robots: int) -> "MeasurementModel":
        children = np.random.SeedSequence(seed).spawn(n_robots)
        return cls(noise_std, {i: np.random.default_rng(c) for i, c in enumerate(children)})

    def rng(self, robot_id: int) -> np.random.Generator:
        if robot_id not in self.streams:
            raise KeyError(f"no measurement stream for robot {robot_id}")
        return self.streams[robot_id]


def sample(field: ScalarField, model: MeasurementModel, q, robot_id: int) -> float:
    value = density_at(field, q)
    # the draw happens even at zero noise so stream positions stay aligned
    eps = model.rng(robot_id).standard_normal()
    if model.noise_std == 0:
        return value
    return value + model.noise_std * eps


def check_found(sources: Sequence[Source], found: Iterable[int], x, d: float) -> list[int]:
    """Indices of not-yet-found sources within distance ``d`` (inclusive) of ``x``."""
    if d <= 0:
        raise ValueError("found radius must be positive")
    found = set(found)
    x = np.asarray(x, dtype=float)
    hits = []
    for j, s in enumerate(sources):
        if j in found:
            continue
        if np.hypot(*(x - np.asarray(s.position))) <= d:
            hits.append(j)
    return hits


def random_layout(
    rng: np.random.Generator,
    domain: Domain,
    n_sources: int,
    intensity_range: tuple[float, float] = (0.16, 0.20),
    spread: float = 1.0,
    min_separation: float = 2.0,
    margin: float = 1.0,
    max_tries: int = 10_000,
) -> list[Source]:
    """Rejection-sample source positions with pairwise separation >= ``min_separation``."""
    lo = np.array([margin, margin])
    hi = np.array([domain.width - margin, domain.height - margin])
    if np.any(hi <= lo):
        raise ValueError("margin leaves no room for sources")
    positions: list[np.ndarray] = []
    for _ in range(max_tries):
        if len(positions) == n_sources:
            break
        p = lo + (hi - lo) * rng.random(2)
        if all(np.hypot(*(p - q)) >= min_separation for q in positions):
            positions.append(p)
    else:
        if len(positions) < n_sources:
            raise RuntimeError(f"could not place {n_sources} sources with separation {min_separation}")
    intensities = rng.uniform(*intensity_range, size=n_sources)
    return [Source((float(p[0]), float(p[1])), float(a), spread) for p, a in zip(positions, intensities)]
