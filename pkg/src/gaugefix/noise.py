"""Independent-flip noise model and reproducible random streams.

Data-qubit flips and measurement flips are sampled independently at a
common physical rate.  Random streams are counter-based (Philox) so trials
can be regenerated from (master seed, trial index) alone regardless of
scheduling order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from gaugefix.lattice import AXIS_NAMES, Geometry

_AXIS_OF = {name: i for i, name in enumerate(AXIS_NAMES)}


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for one (seed, stream...) address."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ErrorSet:
    """A set of physical faults: data-edge flips and measurement flips.

    `data` holds edge ids; `meas` holds (measurement site, time) pairs where
    the site is a plaquette id of the host geometry.
    """

    data: frozenset = field(default_factory=frozenset)
    meas: frozenset = field(default_factory=frozenset)

    def __or__(self, other: "ErrorSet") -> "ErrorSet":
        return ErrorSet(self.data | other.data, self.meas | other.meas)

    def __xor__(self, other: "ErrorSet") -> "ErrorSet":
        return ErrorSet(self.data ^ other.data, self.meas ^ other.meas)

    def __len__(self) -> int:
        return len(self.data) + len(self.meas)

    # ---- mask views -----------------------------------------------------

    def data_mask(self, geom: Geometry) -> np.ndarray:
        mask = np.zeros(geom.n_edges, dtype=bool)
        for e in self.data:
            mask[geom.edge_index[e]] = True
        return mask

    def meas_mask(self, geom: Geometry) -> np.ndarray:
        """Parity of measurement flips per site, times folded together."""
        mask = np.zeros(geom.n_plaquettes, dtype=bool)
        for site, _t in self.meas:
            mask[geom.plaquette_index[site]] ^= True
        return mask

    # ---- serialization --------------------------------------------------

    def to_json(self) -> str:
        def enc_edge(e):
            return [e[0], e[1], e[2], AXIS_NAMES[e[3]]]

        def enc_site(s):
            if isinstance(s[0], tuple):     # (cube, vertex) pair
                return [list(s[0]), list(s[1])]
            return enc_edge(s)              # face id shares the edge shape

        payload = {
            "data": sorted(enc_edge(e) for e in self.data),
            "meas": sorted([enc_site(s), int(t)] for s, t in self.meas),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ErrorSet":
        def dec_edge(v):
            return (int(v[0]), int(v[1]), int(v[2]), _AXIS_OF[v[3]])

        def dec_site(v):
            if isinstance(v[0], list):
                return (tuple(v[0]), tuple(v[1]))
            return dec_edge(v)

        raw = json.loads(text)
        return cls(
            data=frozenset(dec_edge(v) for v in raw["data"]),
            meas=frozenset((dec_site(s), int(t)) for s, t in raw["meas"]),
        )


def sample_errors(geom: Geometry, eps: float, rng: np.random.Generator,
                  data: bool = True, meas: bool = True,
                  data_support: np.ndarray | None = None,
                  meas_support: np.ndarray | None = None) -> ErrorSet:
    """Bernoulli(eps) flip on every data edge and every measurement.

    Each plaquette is measured once, at the layer step recorded in the
    geometry's face schedule.  `data_support` and `meas_support` restrict
    flips to a subset of edges or faces; draws stay aligned so a
    restriction never reshuffles the other samples.
    """
    data_set: frozenset = frozenset()
    meas_set: frozenset = frozenset()
    if data:
        draw = rng.random(geom.n_edges) < eps
        if data_support is not None:
            draw &= data_support
        hits = np.flatnonzero(draw)
        data_set = frozenset(geom.edges[i] for i in hits)
    if meas:
        draw = rng.random(geom.n_plaquettes) < eps
        if meas_support is not None:
            draw &= meas_support
        hits = np.flatnonzero(draw)
        if geom.face_time is not None:
            meas_set = frozenset(
                (geom.plaquettes[i], int(geom.face_time[i])) for i in hits)
        else:
            meas_set = frozenset((geom.plaquettes[i], 0) for i in hits)
    return ErrorSet(data=data_set, meas=meas_set)


def error_rate_per_site(eps: float, qubits_per_site: int) -> float:
    """Probability that a site with independently failing qubits is faulty."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    return 1.0 - (1.0 - eps) ** qubits_per_site

def eps_for_site_rate(p0: float, qubits_per_site: int) -> float:
    """Physical rate whose per-site failure probability equals p0."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must lie in [0, 1]")
    return 1.0 - (1.0 - p0) ** (1.0 / qubits_per_site)


# ---------------------------------------------------------------------------
# site coarse-graining


@dataclass(frozen=True)
class SiteGrid:
    """Cubic grid of sites, each covering side^3 lattice cells."""

    shape: tuple[int, int, int]
    side: int = 1

    def site_of(self, cell: Iterable[int]) -> tuple[int, int, int]:
        s = tuple(int(c) // self.side for c in cell)
        if not all(0 <= s[i] < self.shape[i] for i in range(3)):
            raise ValueError(f"cell {tuple(cell)} outside the site grid")
        return s  # type: ignore[return-value]

    @property
    def n_sites(self) -> int:
        return self.shape[0] * self.shape[1] * self.shape[2]


def site_grid_for(geom: Geometry, side: int = 1) -> SiteGrid:
    shape = tuple(-(-e // side) for e in geom.extent)
    return SiteGrid(shape=shape, side=side)  # type: ignore[arg-type]


def error_sites(geom: Geometry, errors: ErrorSet,
                grid: SiteGrid) -> frozenset:
    """Coarse-grain an error set to the sites its faults touch.

    Data edges and measurement sites land in the site of their anchor cell;
    anchors are clipped to the cell range so boundary-plane entities fall
    into the adjacent site.
    """
    out = set()

    def clip(p):
        return tuple(min(p[i], geom.extent[i] - 1) for i in range(3))

    for e in errors.data:
        out.add(grid.site_of(clip(e[:3])))
    for site, _t in errors.meas:
        anchor = site[0] if isinstance(site[0], tuple) else site[:3]
        out.add(grid.site_of(clip(anchor)))
    return frozenset(out)


def sample_faulty_sites(shape: tuple[int, int, int], p0: float,
                        rng: np.random.Generator) -> frozenset:
    """Bernoulli(p0) occupancy over an abstract site grid."""
    flat = rng.random(shape) < p0
    return frozenset(map(tuple, np.argwhere(flat)))
