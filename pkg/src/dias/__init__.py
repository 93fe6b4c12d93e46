"""Distributed multi-robot source seeking with GP estimation, Voronoi
partitioning and a hybrid exploration/exploitation controller."""

from .sim import SimConfig, run, run_batch

__all__ = ["SimConfig", "run", "run_batch"]
__version__ = "0.1.0"
