"""Simulator and analysis toolkit for just-in-time gauge fixing."""

from gaugefix.lattice import (
    BoundarySpec,
    Geometry,
    LatticeError,
    build_lattice,
    cached_lattice,
    logical_x_sheet,
    logical_z_string,
    unit_cell_counts,
)

__all__ = [
    "BoundarySpec",
    "Geometry",
    "LatticeError",
    "build_lattice",
    "cached_lattice",
    "logical_x_sheet",
    "logical_z_string",
    "unit_cell_counts",
]

__version__ = "0.1.0"
