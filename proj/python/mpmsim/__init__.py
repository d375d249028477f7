"""Multiscale pleural tumour growth simulator (CPM + reaction-diffusion)."""

from ._core import (
    Error,
    bounding_box,
    default_config,
    efficiency,
    gmres,
    load_imbalance,
    partition_slabs,
    run_simulation,
    run_sweep,
    should_retrack,
    speedup,
    synthetic_pleura,
)

__all__ = [
    "Error",
    "bounding_box",
    "default_config",
    "efficiency",
    "gmres",
    "load_imbalance",
    "partition_slabs",
    "run_simulation",
    "run_sweep",
    "should_retrack",
    "speedup",
    "synthetic_pleura",
]
