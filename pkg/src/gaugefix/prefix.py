"""Lookback decoding of the layers preceding a gate volume.

Measurement faults in the final layers before the gate corrupt the record
of the prepared initial plane.  A shallow slab of history is decoded
offline when the gate starts; any correction that crosses the plane shared
with the gate becomes a flag, and the gate XORs flags into its initial
gauge record before streaming.

The shared plane is the highest-priority absorber so that a fault on one
of its own measurements is always routed back through it; the flag then
reproduces the fault exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from gaugefix.lattice import AXIS_NAMES, BoundarySpec, Geometry, build_lattice
from gaugefix.noise import sample_errors
from gaugefix.rg import CellSectorRouter, fold_corrections, rg_decode

FaceId = tuple[int, int, int, int]


@dataclass(frozen=True)
class PrefixResult:
    depth: int
    flags: tuple = ()              # gate initial-plane faces
    carried: tuple = ()            # physical end-plane faults, gate coords
    corrections: frozenset = field(default_factory=frozenset)
    n_defects: int = 0

    def flags_json(self) -> str:
        return json.dumps(sorted(
            [f[0], f[1], f[2], AXIS_NAMES[f[3]]] for f in self.flags))


def build_slab(gate: Geometry, depth: int) -> Geometry:
    """History volume of `depth` layers butting against the gate's start."""
    if depth < 1:
        raise ValueError("slab depth must be positive")
    extent = list(gate.extent)
    extent[gate.time_axis] = depth
    return build_lattice("cubic", gate.L, BoundarySpec(gate.rough_axis),
                         gate.time_axis, extent=tuple(extent))


def slab_router(extent: Sequence[int], time_axis: int,
                side_axis: int) -> CellSectorRouter:
    # shared plane first: ties at the far corners must still flag
    absorbers = ((time_axis, 1), (side_axis, 0), (side_axis, 1),
                 (time_axis, 0))
    return CellSectorRouter(extent=tuple(extent), absorbers=absorbers)


def _to_gate_face(face: FaceId, time_axis: int) -> FaceId:
    p = list(face[:3])
    p[time_axis] = 0
    return (p[0], p[1], p[2], face[3])


def decode_slab(slab: Geometry, meas_mask: np.ndarray) -> PrefixResult:
    """Decode one slab worth of measurement faults into flags."""
    t_ax = slab.time_axis
    depth = slab.extent[t_ax]
    defect_mask = slab.cell_parity(meas_mask)
    cells = [slab.cells[i] for i in np.flatnonzero(defect_mask)]
    router = slab_router(slab.extent, t_ax, slab.side_axis)
    out = rg_decode(cells, router)
    if out.leftover:
        raise RuntimeError(f"slab decode left defects: {out.leftover[:4]}")
    folded = fold_corrections(out.corrections)
    flags = sorted(_to_gate_face(f, t_ax) for f in folded
                   if f[3] == t_ax and f[t_ax] == depth)
    carried = sorted(
        _to_gate_face(slab.plaquettes[i], t_ax)
        for i in np.flatnonzero(meas_mask)
        if slab.plaquettes[i][3] == t_ax
        and slab.plaquettes[i][t_ax] == depth)
    return PrefixResult(depth=depth, flags=tuple(flags),
                        carried=tuple(carried),
                        corrections=frozenset(folded),
                        n_defects=len(cells))


def run_prefix(gate: Geometry, depth: int, eps: float,
               rng: np.random.Generator) -> PrefixResult:
    """Sample slab measurement noise and decode it; depth 0 disables."""
    if depth == 0:
        return PrefixResult(depth=0)
    slab = build_slab(gate, depth)
    errors = sample_errors(slab, eps, rng, data=False)
    return decode_slab(slab, errors.meas_mask(slab))


def apply_flags(gate: Geometry, faces: Iterable[FaceId]) -> np.ndarray:
    """Initial-plane flip mask for a set of flagged or carried faces."""
    mask = np.zeros(gate.n_plaquettes, dtype=bool)
    for f in faces:
        pi = gate.plaquette_index.get(f)
        if pi is None or not gate.initial_face_mask[pi]:
            raise ValueError(f"not an initial-plane face: {f}")
        mask[pi] ^= True
    return mask
