"""Lattice geometries for layered 3D surface-code volumes.

Two stabilizer layouts share one cubic edge complex:

* ``cubic``: qubits on edges, X stars on vertices, Z plaquettes on square
  faces, parity constraints on unit cells.
* ``alternative``: the cubes are 3D-checkerboard coloured; X stars live on
  primal cubes (weight 12) and Z plaquettes on (dual cube, corner) pairs
  (weight 3).  Parity constraints come in two species: one per dual cube and
  one per interior vertex.

All entities are addressed by (anchor, orientation) integer tuples so that
incidence is computable in O(1) without adjacency tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

X, Y, Z = 0, 1, 2
AXES = (X, Y, Z)
AXIS_NAMES = "xyz"

Coord = tuple[int, int, int]
EdgeId = tuple[int, int, int, int]        # (x, y, z, axis)
FaceId = tuple[int, int, int, int]        # (x, y, z, normal axis)
# Alternative-lattice plaquette: (dual cube anchor, corner vertex).
CornerPlaq = tuple[Coord, Coord]
# Constraint cells: cubic -> Coord; alternative -> ("c"|"v", x, y, z).
CellId = tuple


def _unit(axis: int) -> Coord:
    e = [0, 0, 0]
    e[axis] = 1
    return tuple(e)  # type: ignore[return-value]


def _shift(p: Sequence[int], axis: int, by: int = 1) -> Coord:
    q = list(p)
    q[axis] += by
    return tuple(q)  # type: ignore[return-value]


class LatticeError(ValueError):
    """Raised for invalid lattice construction or queries."""


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition labels for the six box sides.

    Exactly one axis carries the Rough pair; the other four sides are
    Smooth.  Rough sides terminate Z-type strings, Smooth sides terminate
    measurement-string configurations.
    """

    rough_axis: int

    def __post_init__(self) -> None:
        if self.rough_axis not in AXES:
            raise LatticeError(f"rough_axis must be one of {AXES}")

    def kind_of(self, axis: int, side: int) -> str:
        return "rough" if axis == self.rough_axis else "smooth"

    @classmethod
    def rough_z(cls) -> "BoundarySpec":
        return cls(rough_axis=Z)


def box_complex_counts(extent: Sequence[int]) -> tuple[int, int, int, int]:
    """Entity counts (vertices, edges, faces, cells) of the full box complex.

    The full complex keeps every entity; boundary truncation is applied
    later per boundary spec.  For a single cube this gives (8, 12, 6, 1).
    """
    ex, ey, ez = extent
    verts = (ex + 1) * (ey + 1) * (ez + 1)
    edges = 0
    faces = 0
    for a in AXES:
        spans = [e + 1 for e in (ex, ey, ez)]
        spans[a] = (ex, ey, ez)[a]
        edges += spans[0] * spans[1] * spans[2]
        fspans = list((ex, ey, ez))
        fspans[a] = (ex, ey, ez)[a] + 1
        faces += fspans[0] * fspans[1] * fspans[2]
    cells = ex * ey * ez
    return verts, edges, faces, cells


@dataclass
class Geometry:
    """One concrete lattice volume with frozen incidence structure.

    Immutable after construction; safe to share between worker processes.
    """

    kind: str
    L: int
    extent: Coord
    boundary: BoundarySpec
    time_axis: int

    # populated by the builder
    edges: list[EdgeId] = field(default_factory=list)
    edge_index: dict[EdgeId, int] = field(default_factory=dict)
    plaquettes: list = field(default_factory=list)
    plaquette_index: dict = field(default_factory=dict)
    cells: list[CellId] = field(default_factory=list)
    cell_index: dict[CellId, int] = field(default_factory=dict)
    star_sites: list = field(default_factory=list)

    _plaq_support: list[tuple[int, ...]] = field(default_factory=list)
    _cell_plaqs: list[tuple[int, ...]] = field(default_factory=list)
    _star_support: dict = field(default_factory=dict)

    # CSR-style edge -> plaquette incidence for fast syndrome maps
    edge_plaq_indptr: np.ndarray | None = None
    edge_plaq_indices: np.ndarray | None = None
    # plaquette -> constraint cells (up to 2, -1 padding)
    plaq_cells: np.ndarray | None = None

    # cubic-only lookup grids and sweep tables
    edge_grid: dict | None = None
    face_grid: dict | None = None
    cell_grid: np.ndarray | None = None
    sweep_rays: list | None = None
    initial_face_mask: np.ndarray | None = None
    initial_edge_mask: np.ndarray | None = None
    face_time: np.ndarray | None = None
    cell_time: np.ndarray | None = None

    # ---- derived labels -------------------------------------------------

    @property
    def rough_axis(self) -> int:
        return self.boundary.rough_axis

    @property
    def side_axis(self) -> int:
        return 3 - self.rough_axis - self.time_axis

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    # ---- stabilizer queries ---------------------------------------------

    def plaquette_support(self, site) -> tuple[EdgeId, ...]:
        """Edges in the Z support of one plaquette site."""
        try:
            pi = self.plaquette_index[site]
        except KeyError:
            raise LatticeError(f"not a plaquette site: {site!r}") from None
        return tuple(self.edges[e] for e in self._plaq_support[pi])

    def star_support(self, site) -> tuple[EdgeId, ...]:
        """Edges in the X support of one star site."""
        try:
            return tuple(self.edges[e] for e in self._star_support[site])
        except KeyError:
            raise LatticeError(f"not a star site: {site!r}") from None

    def cell_plaquettes(self, cell: CellId) -> tuple:
        """Plaquette sites whose product is the identity constraint of `cell`."""
        try:
            ci = self.cell_index[cell]
        except KeyError:
            raise LatticeError(f"not a constraint cell: {cell!r}") from None
        return tuple(self.plaquettes[p] for p in self._cell_plaqs[ci])

    def plaquette_support_indices(self, pi: int) -> tuple[int, ...]:
        return self._plaq_support[pi]

    def cell_plaquette_indices(self, ci: int) -> tuple[int, ...]:
        return self._cell_plaqs[ci]

    # ---- fast parity maps -----------------------------------------------

    def edge_flip_image(self, edge_mask: np.ndarray) -> np.ndarray:
        """Plaquette parity pattern produced by flipping an X frame.

        edge_mask: bool (n_edges,).  Returns bool (n_plaquettes,) with True
        where the plaquette outcome is inverted.
        """
        hits = np.zeros(self.n_plaquettes, dtype=np.int64)
        sel = np.flatnonzero(edge_mask)
        for e in sel:
            lo, hi = self.edge_plaq_indptr[e], self.edge_plaq_indptr[e + 1]
            hits[self.edge_plaq_indices[lo:hi]] += 1
        return (hits & 1).astype(bool)

    def cell_parity(self, plaq_mask: np.ndarray) -> np.ndarray:
        """Constraint-cell parities of a flipped-plaquette pattern."""
        par = np.zeros(self.n_cells, dtype=np.int64)
        cells = self.plaq_cells[plaq_mask]
        flat = cells[cells >= 0]
        np.add.at(par, flat, 1)
        return (par & 1).astype(bool)

    # ---- dump ------------------------------------------------------------

    def boundary_tag(self, span_min: Sequence[int], span_max: Sequence[int]) -> str:
        rough = smooth = False
        for a in AXES:
            for side, plane in ((0, 0), (1, self.extent[a])):
                touches = (span_min[a] == plane) if side == 0 else (span_max[a] == plane)
                if touches:
                    if self.boundary.kind_of(a, side) == "rough":
                        rough = True
                    else:
                        smooth = True
        if rough and smooth:
            return "mixed"
        if rough:
            return "rough"
        if smooth:
            return "smooth"
        return "bulk"

    def dump(self, out: TextIO) -> None:
        """Write one line per entity: <type> <x> <y> <z> <orientation> <tag>."""
        ex, ey, ez = self.extent
        for v in np.ndindex(ex + 1, ey + 1, ez + 1):
            out.write(f"vertex {v[0]} {v[1]} {v[2]} - {self.boundary_tag(v, v)}\n")
        for (x, y, z, a) in self.edges:
            hi = _shift((x, y, z), a)
            tag = self.boundary_tag((x, y, z), hi)
            out.write(f"edge {x} {y} {z} {AXIS_NAMES[a]} {tag}\n")
        if self.kind == "cubic":
            for (x, y, z, n) in self.plaquettes:
                hi = [x, y, z]
                for a in AXES:
                    if a != n:
                        hi[a] += 1
                tag = self.boundary_tag((x, y, z), hi)
                out.write(f"face {x} {y} {z} {AXIS_NAMES[n]} {tag}\n")
            for (x, y, z) in self.cells:
                tag = self.boundary_tag((x, y, z), (x + 1, y + 1, z + 1))
                out.write(f"cell {x} {y} {z} - {tag}\n")
        else:
            for p in np.ndindex(ex, ey, ez):
                color = "primal" if sum(p) % 2 == 0 else "dual"
                tag = self.boundary_tag(p, (p[0] + 1, p[1] + 1, p[2] + 1))
                out.write(f"cube {p[0]} {p[1]} {p[2]} {color} {tag}\n")
            for (c, v) in self.plaquettes:
                octant = "".join("p" if c[a] == v[a] else "m" for a in AXES)
                out.write(
                    f"plaquette {v[0]} {v[1]} {v[2]} {octant} "
                    f"{self.boundary_tag(v, v)}\n"
                )


# ---------------------------------------------------------------------------
# builders


def _cubic_edge_exists(p: Coord, a: int, extent: Coord, rough: int) -> bool:
    for i in AXES:
        top = extent[i] - 1 if i == a else extent[i]
        if not (0 <= p[i] <= top):
            return False
    # in-plane edges on the rough planes are absent
    if a != rough and p[rough] in (0, extent[rough]):
        return False
    return True


def _cubic_face_exists(p: Coord, n: int, extent: Coord, rough: int) -> bool:
    for i in AXES:
        top = extent[i] if i == n else extent[i] - 1
        if not (0 <= p[i] <= top):
            return False
    if n == rough and p[rough] in (0, extent[rough]):
        return False
    return True


def _face_edges(p: Coord, n: int) -> list[EdgeId]:
    a, b = [i for i in AXES if i != n]
    return [
        (*p, a),
        (*_shift(p, b), a),
        (*p, b),
        (*_shift(p, a), b),
    ]


def _edge_faces(p: Coord, a: int) -> list[FaceId]:
    out = []
    for n in AXES:
        if n == a:
            continue
        b = 3 - a - n
        out.append((*p, n))
        out.append((*_shift(p, b, -1), n))
    return out


def _build_cubic(geom: Geometry) -> None:
    extent = geom.extent
    rough = geom.rough_axis

    edge_grid = {}
    for a in AXES:
        shape = tuple(extent[i] + (0 if i == a else 1) for i in AXES)
        edge_grid[a] = np.full(shape, -1, dtype=np.int64)
    face_grid = {}
    for n in AXES:
        shape = tuple(extent[i] + (1 if i == n else 0) for i in AXES)
        face_grid[n] = np.full(shape, -1, dtype=np.int64)

    for a in AXES:
        it = np.ndindex(*edge_grid[a].shape)
        for p in it:
            if _cubic_edge_exists(p, a, extent, rough):
                eid = (*p, a)
                edge_grid[a][p] = len(geom.edges)
                geom.edge_index[eid] = len(geom.edges)
                geom.edges.append(eid)

    face_time = []
    for n in AXES:
        for p in np.ndindex(*face_grid[n].shape):
            if _cubic_face_exists(p, n, extent, rough):
                fid = (*p, n)
                face_grid[n][p] = len(geom.plaquettes)
                geom.plaquette_index[fid] = len(geom.plaquettes)
                geom.plaquettes.append(fid)
                t = p[geom.time_axis]
                if n == geom.time_axis:
                    t = max(t - 1, 0)
                face_time.append(t)

    for pi, (x, y, z, n) in enumerate(geom.plaquettes):
        sup = tuple(
            geom.edge_index[e]
            for e in _face_edges((x, y, z), n)
            if e in geom.edge_index
        )
        geom._plaq_support.append(sup)

    cell_time = []
    geom.cell_grid = np.full(extent, -1, dtype=np.int64)
    for p in np.ndindex(*extent):
        cid = p
        geom.cell_grid[p] = len(geom.cells)
        geom.cell_index[cid] = len(geom.cells)
        geom.cells.append(cid)
        cell_time.append(p[geom.time_axis])
        plaqs = []
        for n in AXES:
            for q in (p, _shift(p, n)):
                fi = geom.plaquette_index.get((*q, n))
                if fi is not None:
                    plaqs.append(fi)
        geom._cell_plaqs.append(tuple(plaqs))

    for v in np.ndindex(*[e + 1 for e in extent]):
        if v[rough] in (0, extent[rough]):
            continue  # no star generator on the rough planes
        sup = []
        for a in AXES:
            for q in (_shift(v, a, -1), v):
                ei = geom.edge_index.get((*q, a))
                if ei is not None:
                    sup.append(ei)
        geom.star_sites.append(v)
        geom._star_support[v] = tuple(sup)

    _finalize_incidence(geom)
    geom.edge_grid = edge_grid
    geom.face_grid = face_grid
    geom.face_time = np.asarray(face_time, dtype=np.int64)
    geom.cell_time = np.asarray(cell_time, dtype=np.int64)
    _build_sweep_tables(geom)
    _build_initial_masks(geom)


def _build_alternative(geom: Geometry) -> None:
    extent = geom.extent
    # full edge set: boundary conditions only select which generators exist
    for a in AXES:
        shape = tuple(extent[i] + (0 if i == a else 1) for i in AXES)
        for p in np.ndindex(*shape):
            eid = (*p, a)
            geom.edge_index[eid] = len(geom.edges)
            geom.edges.append(eid)

    def cube_edges(c: Coord) -> list[EdgeId]:
        out = []
        for a in AXES:
            b, d = [i for i in AXES if i != a]
            for db in (0, 1):
                for dd in (0, 1):
                    q = list(c)
                    q[b] += db
                    q[d] += dd
                    out.append((*q, a))
        return out

    def corner_trio(c: Coord, v: Coord) -> list[EdgeId]:
        out = []
        for a in AXES:
            q = list(v)
            q[a] = c[a]
            out.append((*q, a))
        return out

    dual_cubes = []
    for c in np.ndindex(*extent):
        if sum(c) % 2 == 0:
            geom.star_sites.append(c)
            geom._star_support[c] = tuple(geom.edge_index[e] for e in cube_edges(c))
        else:
            dual_cubes.append(c)

    for c in dual_cubes:
        for dv in np.ndindex(2, 2, 2):
            v = (c[0] + dv[0], c[1] + dv[1], c[2] + dv[2])
            site = (c, v)
            geom.plaquette_index[site] = len(geom.plaquettes)
            geom.plaquettes.append(site)
            geom._plaq_support.append(
                tuple(geom.edge_index[e] for e in corner_trio(c, v))
            )

    # cube-species constraints: the eight corner plaquettes of one dual cube
    for c in dual_cubes:
        plaqs = tuple(
            geom.plaquette_index[(c, (c[0] + dv[0], c[1] + dv[1], c[2] + dv[2]))]
            for dv in np.ndindex(2, 2, 2)
        )
        cid = ("c", *c)
        geom.cell_index[cid] = len(geom.cells)
        geom.cells.append(cid)
        geom._cell_plaqs.append(plaqs)

    # vertex-species constraints: corner plaquettes of the dual cubes about a
    # vertex, kept only where their supports cancel exactly
    by_vertex: dict[Coord, list[int]] = {}
    for pi, (c, v) in enumerate(geom.plaquettes):
        by_vertex.setdefault(v, []).append(pi)
    for v, plaqs in sorted(by_vertex.items()):
        parity: dict[int, int] = {}
        for pi in plaqs:
            for e in geom._plaq_support[pi]:
                parity[e] = parity.get(e, 0) ^ 1
        if any(parity.values()):
            continue  # truncated vertex cell does not close; not a constraint
        cid = ("v", *v)
        geom.cell_index[cid] = len(geom.cells)
        geom.cells.append(cid)
        geom._cell_plaqs.append(tuple(plaqs))

    _finalize_incidence(geom)


def _finalize_incidence(geom: Geometry) -> None:
    per_edge: list[list[int]] = [[] for _ in range(geom.n_edges)]
    for pi, sup in enumerate(geom._plaq_support):
        for e in sup:
            per_edge[e].append(pi)
    indptr = np.zeros(geom.n_edges + 1, dtype=np.int64)
    for e, lst in enumerate(per_edge):
        indptr[e + 1] = indptr[e] + len(lst)
    indices = np.empty(indptr[-1], dtype=np.int64)
    for e, lst in enumerate(per_edge):
        indices[indptr[e]: indptr[e + 1]] = lst
    geom.edge_plaq_indptr = indptr
    geom.edge_plaq_indices = indices

    plaq_cells = np.full((geom.n_plaquettes, 2), -1, dtype=np.int64)
    fill = np.zeros(geom.n_plaquettes, dtype=np.int64)
    for ci, plaqs in enumerate(geom._cell_plaqs):
        for pi in plaqs:
            plaq_cells[pi, fill[pi]] = ci
            fill[pi] += 1
    if np.any(fill > 2):
        raise LatticeError("plaquette belongs to more than two constraint cells")
    geom.plaq_cells = plaq_cells


def _build_sweep_tables(geom: Geometry) -> None:
    """Per-face forward rays used by the deterministic gauge-fixing sweep.

    A flipped face whose normal is perpendicular to the time axis is pushed
    layer by layer towards the terminal face; the ray lists the edges whose
    X flips implement the push.  Faces normal to the time axis carry no ray:
    their flips cancel against the push trails of closed configurations.
    """
    t = geom.time_axis
    rays: list[np.ndarray] = []
    for (x, y, z, n) in geom.plaquettes:
        p = (x, y, z)
        if n == t:
            rays.append(np.empty(0, dtype=np.int64))
            continue
        # pushing face (p, n) one step +t flips the shared edge along axis
        # b = the third axis; repeat until the terminal plane absorbs it
        b = 3 - n - t
        ray = []
        q = list(p)
        for step in range(p[t] + 1, geom.extent[t] + 1):
            q[t] = step
            ei = geom.edge_index.get((*q, b))
            if ei is None:
                break
            ray.append(ei)
        rays.append(np.asarray(ray, dtype=np.int64))
    geom.sweep_rays = rays


def _build_initial_masks(geom: Geometry) -> None:
    t = geom.time_axis
    fmask = np.zeros(geom.n_plaquettes, dtype=bool)
    for pi, (x, y, z, n) in enumerate(geom.plaquettes):
        if n == t and (x, y, z)[t] == 0:
            fmask[pi] = True
    emask = np.zeros(geom.n_edges, dtype=bool)
    for ei, (x, y, z, a) in enumerate(geom.edges):
        if a != t and (x, y, z)[t] == 0:
            emask[ei] = True
    geom.initial_face_mask = fmask
    geom.initial_edge_mask = emask


def build_lattice(
    kind: str,
    L: int,
    boundary: BoundarySpec | None = None,
    time_axis: int | None = None,
    extent: Coord | None = None,
) -> Geometry:
    """Construct a lattice volume.

    kind: "cubic" or "alternative".  L: linear size in cells (>= 2).
    `extent` overrides the per-axis cell counts for slab volumes; the default
    is an L-cube.  The time axis must differ from the rough axis.
    """
    if kind not in ("cubic", "alternative"):
        raise LatticeError(f"unknown lattice kind: {kind!r}")
    if L < 2:
        raise LatticeError("L must be at least 2")
    if boundary is None:
        boundary = BoundarySpec.rough_z()
    if time_axis is None:
        time_axis = X if boundary.rough_axis != X else Y
    if time_axis == boundary.rough_axis:
        raise LatticeError("time axis cannot be the rough axis")
    if extent is None:
        extent = (L, L, L)
    if min(extent) < 1:
        raise LatticeError("extent must be positive along every axis")

    geom = Geometry(kind=kind, L=L, extent=tuple(extent), boundary=boundary,
                    time_axis=time_axis)
    if kind == "cubic":
        _build_cubic(geom)
    else:
        _build_alternative(geom)
    return geom


# ---------------------------------------------------------------------------
# logical representatives (cubic)


def logical_z_string(geom: Geometry) -> np.ndarray:
    """Edge indices of a rough-to-rough Z string through the bulk."""
    if geom.kind != "cubic":
        raise LatticeError("logical representatives implemented for cubic only")
    r = geom.rough_axis
    a, b = [i for i in AXES if i != r]
    p = [0, 0, 0]
    p[a] = geom.extent[a] // 2
    p[b] = geom.extent[b] // 2
    out = []
    for k in range(geom.extent[r]):
        p[r] = k
        out.append(geom.edge_index[(*p, r)])
    return np.asarray(out, dtype=np.int64)


def logical_x_sheet(geom: Geometry, layer: int | None = None) -> np.ndarray:
    """Edge indices of an X membrane: all rough-axis edges in one layer."""
    if geom.kind != "cubic":
        raise LatticeError("logical representatives implemented for cubic only")
    r = geom.rough_axis
    if layer is None:
        layer = geom.extent[r] // 2
    out = []
    for ei, (x, y, z, a) in enumerate(geom.edges):
        if a == r and (x, y, z)[r] == layer:
            out.append(ei)
    return np.asarray(out, dtype=np.int64)


def unit_cell_counts(kind: str) -> tuple[int, int, int]:
    """(data, ancilla, total) qubit counts per 2x2x2 bulk unit cell.

    "triple" gives the combined footprint of one cubic volume overlapped
    with two alternative volumes, counting each code's qubits separately.
    """
    if kind == "cubic":
        return 24, 24, 48
    if kind == "alternative":
        return 24, 32, 56
    if kind == "triple":
        c = unit_cell_counts("cubic")
        a = unit_cell_counts("alternative")
        return c[0] + 2 * a[0], c[1] + 2 * a[1], c[2] + 2 * a[2]
    raise LatticeError(f"unknown lattice kind: {kind!r}")


def geometry_cache_key(kind: str, L: int, rough_axis: int, time_axis: int,
                       extent: Coord | None) -> tuple:
    return (kind, L, rough_axis, time_axis, extent)


_GEOMETRY_CACHE: dict[tuple, Geometry] = {}


def cached_lattice(kind: str, L: int, boundary: BoundarySpec | None = None,
                   time_axis: int | None = None,
                   extent: Coord | None = None) -> Geometry:
    """Memoized `build_lattice`; geometries are immutable so sharing is safe."""
    if boundary is None:
        boundary = BoundarySpec.rough_z()
    if time_axis is None:
        time_axis = X if boundary.rough_axis != X else Y
    key = geometry_cache_key(kind, L, boundary.rough_axis, time_axis, extent)
    if key not in _GEOMETRY_CACHE:
        _GEOMETRY_CACHE[key] = build_lattice(kind, L, boundary, time_axis, extent)
    return _GEOMETRY_CACHE[key]
