"""Propagators of the Klein-Gordon equation on static lattice spacetimes."""

from .block_system import BlockSystem, assemble_blocks, spectral_split
from .model import PRESETS, SpatialModel, build_model, check_assumptions, preset
from .propagators import ALL_KINDS, Kind, build_kernel, scalar_reduce

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS", "BlockSystem", "Kind", "PRESETS", "SpatialModel", "assemble_blocks",
    "build_kernel", "build_model", "check_assumptions", "preset", "scalar_reduce",
    "spectral_split",
]
