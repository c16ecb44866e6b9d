"""Streaming defect resolution for layer-by-layer gauge fixing.

Defects announce themselves when their constraint cell completes, one
layer step at a time.  The decoder holds each defect until enough steps
have passed to justify a commitment: a pair may be connected once both
members have waited at least their spacetime separation, and a defect may
leave through a permitted side once it has waited at least its distance
to that side.  Commitments are greedy, closest first.  When the stream
ends, survivors are forced out through the nearest permitted boundary,
the terminal layer included.

Every commitment emits the flipped measurement outcomes that implement
it: a time-directed tube recording the wait, plus an in-slice connection
at the commitment step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from gaugefix.chunks import distance
from gaugefix.lattice import AXES, Geometry
from gaugefix.rg import sparse_cell_defects

Cell = tuple[int, int, int]
FaceId = tuple[int, int, int, int]


@dataclass(frozen=True)
class JITDecision:
    time: int
    kind: str                    # "pair" | "exit" | "flush"
    cells: tuple                 # birth cells involved
    separation: int
    boundary: tuple | None       # (axis, side) for exits
    faces: tuple

    def to_json(self) -> str:
        return json.dumps({
            "t": self.time,
            "kind": self.kind,
            "cells": [list(c) for c in self.cells],
            "separation": self.separation,
            "boundary": list(self.boundary) if self.boundary else None,
            "faces": [list(f) for f in self.faces],
        })


def write_decision_log(decisions: Iterable[JITDecision], fh: IO[str]) -> None:
    for d in decisions:
        fh.write(d.to_json() + "\n")


class JITDecoder:
    """Definition of the streaming pairing rule over one gate volume.

    Operates on virtual coordinates; `extent` is in cells.  `permitted`
    lists the side boundaries defects may leave through as (axis, side)
    pairs; the terminal layer becomes available at flush time.
    """

    def __init__(self, extent: Cell, time_axis: int,
                 permitted: Sequence[tuple] = ()):
        self.extent = tuple(extent)
        self.time_axis = time_axis
        self.permitted = tuple(permitted)
        for axis, _side in self.permitted:
            if axis == time_axis:
                raise ValueError("side exits cannot use the time axis")
        self.pending: dict[Cell, int] = {}   # birth cell -> birth step
        self.decisions: list[JITDecision] = []
        self._slice_axes = tuple(a for a in AXES if a != time_axis)

    # ---- geometry helpers -------------------------------------------------

    def _tube(self, cell: Cell, until: int) -> list[FaceId]:
        t = self.time_axis
        out = []
        p = list(cell)
        for k in range(cell[t] + 1, until + 1):
            p[t] = k
            out.append((p[0], p[1], p[2], t))
        return out

    def _slice_path(self, a: Cell, b: Cell, at: int) -> list[FaceId]:
        cur = list(a)
        cur[self.time_axis] = at
        out = []
        for axis in self._slice_axes:
            target = b[axis]
            while cur[axis] != target:
                if target > cur[axis]:
                    cur[axis] += 1
                    out.append((cur[0], cur[1], cur[2], axis))
                else:
                    out.append((cur[0], cur[1], cur[2], axis))
                    cur[axis] -= 1
        return out

    def _side_distance(self, cell: Cell, axis: int, side: int) -> int:
        return cell[axis] + 1 if side == 0 else self.extent[axis] - cell[axis]

    def _side_exit(self, cell: Cell, axis: int, side: int,
                   at: int) -> list[FaceId]:
        cur = list(cell)
        cur[self.time_axis] = at
        out = []
        target = 0 if side == 0 else self.extent[axis] - 1
        while cur[axis] != target:
            if target > cur[axis]:
                cur[axis] += 1
                out.append((cur[0], cur[1], cur[2], axis))
            else:
                out.append((cur[0], cur[1], cur[2], axis))
                cur[axis] -= 1
        if side == 0:
            out.append((cur[0], cur[1], cur[2], axis))
        else:
            exit_face = list(cur)
            exit_face[axis] += 1
            out.append((exit_face[0], exit_face[1], exit_face[2], axis))
        return out

    # ---- streaming --------------------------------------------------------

    def step(self, t: int, born: Iterable[Cell]) -> list[JITDecision]:
        """Advance one layer: absorb newborn defects, then commit greedily."""
        for c in born:
            c = tuple(c)
            if c[self.time_axis] != t:
                raise ValueError(f"defect {c} announced at step {t}")
            if c in self.pending:
                raise ValueError(f"duplicate defect {c}")
            self.pending[c] = t
        made = []
        while True:
            choice = self._best_option(t)
            if choice is None:
                break
            made.append(self._commit(choice, t))
        self.decisions.extend(made)
        return made

    def _best_option(self, t: int):
        cells = sorted(self.pending)
        best = None
        for i, u in enumerate(cells):
            du = t - self.pending[u]
            for v in cells[i + 1:]:
                d = distance(u, v)
                if du >= d and t - self.pending[v] >= d:
                    key = (d, 0, u, v)
                    if best is None or key < best[0]:
                        best = (key, ("pair", u, v, d))
            for axis, side in self.permitted:
                d = self._side_distance(u, axis, side)
                if du >= d:
                    key = (d, 1, u, (axis, side))
                    if best is None or key < best[0]:
                        best = (key, ("exit", u, (axis, side), d))
        return None if best is None else best[1]

    def _commit(self, choice, t: int) -> JITDecision:
        if choice[0] == "pair":
            _, u, v, d = choice
            faces = (self._tube(u, t) + self._tube(v, t)
                     + self._slice_path(u, v, t))
            del self.pending[u]
            del self.pending[v]
            return JITDecision(time=t, kind="pair", cells=(u, v),
                               separation=d, boundary=None,
                               faces=tuple(faces))
        _, u, (axis, side), d = choice
        faces = self._tube(u, t) + self._side_exit(u, axis, side, t)
        del self.pending[u]
        return JITDecision(time=t, kind="exit", cells=(u,),
                           separation=d, boundary=(axis, side),
                           faces=tuple(faces))

    def flush(self) -> list[JITDecision]:
        """Force every survivor out through the completed terminal layer.

        A survivor's worldline has already been deferred to the end of the
        stream, so a side exit would cost its side distance on top of the
        carry to the final slice; the terminal face next to that slice is
        never more expensive.  Survivors therefore always leave through
        the terminal layer.
        """
        t_axis = self.time_axis
        top = self.extent[t_axis]
        made = []
        for u in sorted(self.pending):
            made.append(JITDecision(time=top, kind="flush", cells=(u,),
                                    separation=top - u[t_axis],
                                    boundary=(t_axis, 1),
                                    faces=tuple(self._tube(u, top))))
        for d in made:
            del self.pending[d.cells[0]]
        self.decisions.extend(made)
        return made

    def run(self, defects: Iterable[Cell]) -> list[JITDecision]:
        """Stream a complete defect set through the decoder, then flush."""
        by_step: dict[int, list[Cell]] = {}
        for c in defects:
            by_step.setdefault(tuple(c)[self.time_axis], []).append(tuple(c))
        for t in range(self.extent[self.time_axis]):
            self.step(t, by_step.pop(t, ()))
        if by_step:
            raise ValueError(f"defects outside the layer range: {by_step}")
        self.flush()
        return self.decisions


def jit_decoder_for(geom: Geometry) -> JITDecoder:
    """Decoder wired to a gate volume's layer schedule and side rules."""
    if geom.kind != "cubic":
        raise NotImplementedError(
            "streaming defect resolution is defined on the cubic layout")
    side = geom.side_axis
    return JITDecoder(extent=geom.extent, time_axis=geom.time_axis,
                      permitted=((side, 0), (side, 1)))


def decisions_face_set(decisions: Iterable[JITDecision]) -> set:
    out: set = set()
    for d in decisions:
        for f in d.faces:
            out ^= {f}
    return out


# ---------------------------------------------------------------------------
# spread accounting


def decision_cells(decision: JITDecision, extent: Cell) -> set:
    """Cells the decision's faces touch, as its spacetime footprint."""
    return set().union(*({c for c in _face_cells(f, extent)}
                         for f in decision.faces)) if decision.faces else set()


def _face_cells(face: FaceId, extent: Cell):
    x, y, z, n = face
    for c in ((x, y, z),
              tuple((x, y, z)[i] - (1 if i == n else 0) for i in range(3))):
        if all(0 <= c[i] <= extent[i] - 1 for i in range(3)):
            yield c


def empirical_spread(support: Iterable[Cell], lo: Cell, hi: Cell) -> float:
    """Smallest symmetric blow-up factor of a box covering a support.

    Per axis the support must fit a container centred on the reference
    box; the factor is container width over box width, and the result is
    the worst axis.  Box widths count cells, so they are at least one.
    """
    pts = list(support)
    if not pts:
        return 1.0
    worst = 1.0
    for i in range(3):
        width = hi[i] - lo[i] + 1
        over = max(max(lo[i] - min(p[i] for p in pts),
                       max(p[i] for p in pts) - hi[i]), 0)
        worst = max(worst, (width + 2 * over) / width)
    return worst


def decision_lifetime(decision: JITDecision, time_axis: int) -> int:
    """Steps between the earliest involved birth and the commitment."""
    return decision.time - min(c[time_axis] for c in decision.cells)


def audit_spread(decisions: Sequence[JITDecision], components: Sequence,
                 extent: Cell, time_axis: int) -> dict:
    """Attribute decisions to error components and measure their spread.

    Each decision is attached to the component nearest its defect cells;
    a decision whose defects straddle two components is reported as a
    cross pairing.  Per component the record carries the empirical spread
    of the full correction footprint around the component's bounding box
    and the longest deferral.
    """
    comps = [frozenset(c) for c in components]
    boxes = []
    for comp in comps:
        pts = sorted(comp)
        boxes.append((tuple(min(p[i] for p in pts) for i in range(3)),
                      tuple(max(p[i] for p in pts) for i in range(3))))

    def nearest(cell):
        best, arg = None, None
        for k, comp in enumerate(comps):
            d = min(distance(cell, p) for p in comp)
            if best is None or d < best:
                best, arg = d, k
        return arg

    per = [{"component": sorted(c), "box_lo": boxes[k][0],
            "box_hi": boxes[k][1], "support": set(), "max_lifetime": 0,
            "decisions": 0} for k, c in enumerate(comps)]
    cross = []
    for dec in decisions:
        owners = {nearest(c) for c in dec.cells}
        if len(owners) > 1:
            cross.append({"cells": [list(c) for c in dec.cells],
                          "components": sorted(owners)})
            continue
        k = owners.pop()
        per[k]["decisions"] += 1
        per[k]["support"] |= decision_cells(dec, extent)
        life = dec.time - min(c[time_axis] for c in dec.cells)
        per[k]["max_lifetime"] = max(per[k]["max_lifetime"], life)
    for k, rec in enumerate(per):
        rec["s_emp"] = empirical_spread(rec["support"], *boxes[k])
        rec["support"] = sorted(rec["support"])
    return {
        "components": per,
        "cross_pairings": cross,
        "max_spread": max((r["s_emp"] for r in per), default=1.0),
    }


def check_decisions_resolve(decisions: Sequence[JITDecision],
                            defects: Iterable[Cell], extent: Cell) -> bool:
    """The folded correction must annihilate exactly the given defects.

    Boundary faces carry one cell, so exits drop charge off the lattice.
    """
    faces = decisions_face_set(decisions)
    return sparse_cell_defects(faces, extent) == set(map(tuple, defects))
