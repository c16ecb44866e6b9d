"""Gauge readout: measurement patterns, defects, and the fixing sweep.

The layered realisation measures each plaquette once.  A trial's observed
pattern is the flip image of the true X frame and data errors, XORed with
measurement faults.  Constraint cells turn the pattern into defects; the
deterministic sweep turns a defect-free pattern back into an X frame.
"""

from __future__ import annotations

import csv
from typing import IO, Iterable

import numpy as np

from gaugefix.lattice import AXES, Geometry


class InternalFaultError(RuntimeError):
    """A structural invariant failed; indicates a bug, not a noisy sample."""


def sample_random_gauge(geom: Geometry, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random X frame fixing the initial plane.

    Edges lying inside the initial face are excluded so the starting
    plaquettes keep their prepared values.
    """
    frame = rng.integers(0, 2, size=geom.n_edges, dtype=np.int8).astype(bool)
    frame[geom.initial_edge_mask] = False
    return frame


def observed_pattern(geom: Geometry, frame: np.ndarray | None,
                     data: np.ndarray | None,
                     meas: np.ndarray | None) -> np.ndarray:
    """Flipped-plaquette pattern seen by the measurement round."""
    flips = np.zeros(geom.n_edges, dtype=bool)
    if frame is not None:
        flips ^= frame
    if data is not None:
        flips ^= data
    pattern = geom.edge_flip_image(flips)
    if meas is not None:
        pattern = pattern ^ meas
    return pattern


def extract_defects(geom: Geometry, pattern: np.ndarray) -> np.ndarray:
    """Constraint cells with odd parity; bool over geom.cells."""
    return geom.cell_parity(pattern)


def defect_cells(geom: Geometry, defects: np.ndarray) -> list:
    return [geom.cells[i] for i in np.flatnonzero(defects)]


def _cell_row(geom: Geometry, cell) -> tuple[int, int, int, str]:
    if geom.kind == "cubic":
        coords, kind = cell, "cell"
    else:
        kind = "cube" if cell[0] == "c" else "vertex"
        coords = cell[1:]
    t_ax = geom.time_axis
    rest = [coords[a] for a in AXES if a != t_ax]
    return rest[0], rest[1], coords[t_ax], kind


def write_defect_csv(geom: Geometry, defects: np.ndarray, fh: IO[str]) -> None:
    """Defect table with in-slice coordinates and layer step."""
    w = csv.writer(fh)
    w.writerow(["cell_x", "cell_y", "cell_t", "kind"])
    for cell in defect_cells(geom, defects):
        w.writerow(_cell_row(geom, cell))


def fix_gauge(geom: Geometry, pattern: np.ndarray) -> np.ndarray:
    """X frame whose flip image reproduces a defect-free pattern.

    Each flipped side face is pushed layer by layer to the terminal plane
    along its precomputed ray; faces normal to the time axis need no push
    of their own.  Only valid for patterns with even parity at every
    constraint cell; use `gauge_residue` to audit the reconstruction.
    """
    if geom.sweep_rays is None:
        raise InternalFaultError("geometry carries no sweep tables")
    flipped = np.flatnonzero(pattern)
    if len(flipped) == 0:
        return np.zeros(geom.n_edges, dtype=bool)
    rays = [geom.sweep_rays[i] for i in flipped]
    hits = np.bincount(np.concatenate(rays), minlength=geom.n_edges)
    return (hits & 1).astype(bool)


def gauge_residue(geom: Geometry, pattern: np.ndarray,
                  frame: np.ndarray) -> np.ndarray:
    """Faces where the frame's flip image disagrees with the pattern."""
    return geom.edge_flip_image(frame) ^ pattern


def require_conserved(geom: Geometry, residue: np.ndarray) -> np.ndarray:
    """Check a reconstruction residue is confined to the initial plane.

    Initial-plane disagreements are benign relabelings of the prepared
    plane; anything else means the sweep was fed an invalid pattern.
    Returns the initial-plane part for the caller to carry forward.
    """
    stray = residue & ~geom.initial_face_mask
    if stray.any():
        bad = [geom.plaquettes[i] for i in np.flatnonzero(stray)[:5]]
        raise InternalFaultError(f"sweep residue off the initial plane: {bad}")
    return residue & geom.initial_face_mask


# ---------------------------------------------------------------------------
# star syndromes (used by the handoff decode)


def _star_csr(geom: Geometry):
    cached = getattr(geom, "_star_csr", None)
    if cached is not None:
        return cached
    indptr = np.zeros(len(geom.star_sites) + 1, dtype=np.int64)
    chunks = []
    for i, site in enumerate(geom.star_sites):
        sup = geom._star_support[site]
        indptr[i + 1] = indptr[i] + len(sup)
        chunks.append(np.asarray(sup, dtype=np.int64))
    indices = (np.concatenate(chunks) if chunks
               else np.empty(0, dtype=np.int64))
    geom._star_csr = (indptr, indices)
    return geom._star_csr


def star_syndrome(geom: Geometry, edge_mask: np.ndarray) -> np.ndarray:
    """Parity of a Z-type edge set on every star generator."""
    indptr, indices = _star_csr(geom)
    if len(indices) == 0:
        return np.zeros(len(geom.star_sites), dtype=bool)
    # every star has nonempty support, so plain segmented sums suffice
    par = edge_mask.astype(np.int64)[indices]
    sums = np.add.reduceat(par, indptr[:-1])
    return (sums & 1).astype(bool)


def edge_parity(edge_mask: np.ndarray, indices: np.ndarray) -> int:
    """Parity of the overlap between a flip set and a reference edge list."""
    if len(indices) == 0:
        return 0
    return int(edge_mask[indices].sum() & 1)


def mask_from_edges(geom: Geometry, edges: Iterable) -> np.ndarray:
    mask = np.zeros(geom.n_edges, dtype=bool)
    for e in edges:
        mask[geom.edge_index[e]] = True
    return mask
