"""Hierarchical decoder for point defects with absorbing boundaries.

The engine clusters defects at doubling radii.  A cluster is neutral when
its parity is even or a boundary can absorb the excess within the current
radius; neutral clusters are corrected immediately (greedy closest pairs,
odd site routed to the nearest absorbing side) and non-neutral clusters
are deferred to the next scale.

Correction elements are produced by a sector router, so the same engine
serves both correction sectors: star defects at vertices repaired by edge
chains, and constraint-cell defects repaired by face chains.  Routers
address entities by coordinate tuple and never materialise a lattice, so
decoding stays cheap on very large sparse volumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from gaugefix.chunks import _components2, distance

Point = tuple[int, int, int]


@dataclass
class RGOutcome:
    corrections: list
    leftover: list
    trace: list = field(default_factory=list)
    levels_run: int = 0


def _greedy_pairs(cluster: Sequence[Point]) -> tuple[list, Point | None]:
    """Closest-first pairing; returns pairs and the odd site if any."""
    left = sorted(cluster)
    order = sorted(
        ((distance(a, b), a, b)
         for i, a in enumerate(left) for b in left[i + 1:]),
    )
    used: set = set()
    pairs = []
    for _d, a, b in order:
        if a in used or b in used:
            continue
        pairs.append((a, b))
        used.add(a)
        used.add(b)
    rest = [p for p in left if p not in used]
    return pairs, (rest[0] if rest else None)


def rg_decode(points: Iterable[Point], router) -> RGOutcome:
    """Run the doubling-radius decode to completion."""
    active = set(tuple(p) for p in points)
    out = RGOutcome(corrections=[], leftover=[])
    if not active:
        return out
    top = max(1, math.ceil(math.log2(max(1, router.domain_scale()))))
    for level in range(top + 2):
        if not active:
            break
        radius = 2 ** level
        out.levels_run = level + 1
        for cluster in sorted(_components2(active, 2 * radius),
                              key=lambda c: sorted(c)):
            members = sorted(cluster)
            reach = min(router.boundary_distance(p) for p in members)
            neutral = len(members) % 2 == 0 or reach <= radius
            if not neutral:
                out.trace.append({"level": level, "action": "defer",
                                  "cluster": members})
                continue
            pairs, odd = _greedy_pairs(members)
            for a, b in pairs:
                out.corrections.extend(router.pair_path(a, b))
                out.trace.append({"level": level, "action": "pair",
                                  "cluster": [a, b]})
            if odd is not None:
                out.corrections.extend(router.boundary_exit(odd))
                out.trace.append({"level": level, "action": "exit",
                                  "cluster": [odd]})
            active -= cluster
    out.leftover = sorted(active)
    return out


def fold_corrections(elements: Iterable) -> set:
    """Mod-2 fold of correction elements (paths may retrace themselves)."""
    out: set = set()
    for el in elements:
        out ^= {el}
    return out


# ---------------------------------------------------------------------------
# sector routers


@dataclass(frozen=True)
class EdgeSectorRouter:
    """Repairs star defects at vertices with chains of edges.

    Z-type chains terminate on the two planes normal to `rough_axis`.
    Pair paths walk axis by axis in axis order, staying clear of the
    removed in-plane edges because every intermediate vertex keeps its
    interior rough-axis coordinate.
    """

    extent: Point
    rough_axis: int

    def domain_scale(self) -> int:
        return max(self.extent)

    def boundary_distance(self, v: Point) -> int:
        r = self.rough_axis
        return min(v[r], self.extent[r] - v[r])

    def _axis_chain(self, v: Point, axis: int, target: int) -> list:
        out = []
        p = list(v)
        step = 1 if target > p[axis] else -1
        while p[axis] != target:
            if step < 0:
                p[axis] -= 1
            out.append((p[0], p[1], p[2], axis))
            if step > 0:
                p[axis] += 1
        return out

    def pair_path(self, a: Point, b: Point) -> list:
        out = []
        cur = a
        for axis in range(3):
            out.extend(self._axis_chain(cur, axis, b[axis]))
            nxt = list(cur)
            nxt[axis] = b[axis]
            cur = tuple(nxt)
        return out

    def boundary_exit(self, v: Point) -> list:
        r = self.rough_axis
        target = 0 if v[r] <= self.extent[r] - v[r] else self.extent[r]
        return self._axis_chain(v, r, target)


@dataclass(frozen=True)
class CellSectorRouter:
    """Repairs constraint-cell defects with chains of flipped faces.

    A step between neighbouring cells flips their shared face; stepping
    out of the volume flips the boundary face.  `absorbers` lists the
    admissible exit sides as (axis, side) pairs in priority order; the
    order breaks distance ties.
    """

    extent: Point
    absorbers: tuple = ()

    def domain_scale(self) -> int:
        return max(self.extent)

    def _exit_distance(self, c: Point, axis: int, side: int) -> int:
        return c[axis] + 1 if side == 0 else self.extent[axis] - c[axis]

    def boundary_distance(self, c: Point) -> float:
        if not self.absorbers:
            return math.inf
        return min(self._exit_distance(c, a, s) for a, s in self.absorbers)

    def _step_faces(self, cur: list, axis: int, target: int) -> list:
        out = []
        while cur[axis] != target:
            if target > cur[axis]:
                cur[axis] += 1
                out.append((cur[0], cur[1], cur[2], axis))
            else:
                out.append((cur[0], cur[1], cur[2], axis))
                cur[axis] -= 1
        return out

    def pair_path(self, a: Point, b: Point) -> list:
        out = []
        cur = list(a)
        for axis in range(3):
            out.extend(self._step_faces(cur, axis, b[axis]))
        return out

    def boundary_exit(self, c: Point) -> list:
        best = None
        for a, s in self.absorbers:
            d = self._exit_distance(c, a, s)
            if best is None or d < best[0]:
                best = (d, a, s)
        if best is None:
            raise RuntimeError("no absorbing boundary configured")
        _d, axis, side = best
        cur = list(c)
        out = []
        if side == 0:
            out.extend(self._step_faces(cur, axis, 0))
            out.append((cur[0], cur[1], cur[2], axis))  # in-plane exit face
        else:
            out.extend(self._step_faces(cur, axis, self.extent[axis] - 1))
            exit_face = list(cur)
            exit_face[axis] += 1
            out.append((exit_face[0], exit_face[1], exit_face[2], axis))
        return out


# ---------------------------------------------------------------------------
# sparse syndromes for virtual volumes


def sparse_star_syndrome(edges: Iterable, extent: Point,
                         rough_axis: int) -> set:
    """Vertices with odd incidence, skipping the star-free rough planes."""
    parity: set = set()
    r = rough_axis
    for (x, y, z, a) in edges:
        lo = (x, y, z)
        hi = tuple(lo[i] + (1 if i == a else 0) for i in range(3))
        for v in (lo, hi):
            if v[r] in (0, extent[r]):
                continue
            parity ^= {v}
    return parity


def sparse_cell_defects(faces: Iterable, extent: Point) -> set:
    """Cells with odd face parity for a sparse flipped-face set."""
    parity: set = set()
    for (x, y, z, n) in faces:
        for c in ((x, y, z), tuple((x, y, z)[i] - (1 if i == n else 0)
                                   for i in range(3))):
            if all(0 <= c[i] <= extent[i] - 1 for i in range(3)):
                parity ^= {c}
    return parity
