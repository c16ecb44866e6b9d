"""Shared helpers for the test suite: GF(2) linear algebra and enumerators.

Everything here is deliberately naive and independent of the package
internals so it can serve as an oracle.
"""

from __future__ import annotations

import numpy as np


def gf2_rank(rows) -> int:
    """Rank over GF(2) of a matrix given as an iterable of 0/1 rows."""
    mat = [int("".join(str(int(b)) for b in row), 2) if len(row) else 0
           for row in rows]
    rank = 0
    while mat:
        pivot = max(mat)
        mat.remove(pivot)
        if pivot == 0:
            continue
        rank += 1
        high = pivot.bit_length() - 1
        mat = [m ^ pivot if (m >> high) & 1 else m for m in mat]
    return rank


def gf2_in_span(rows, target) -> bool:
    """True if `target` lies in the GF(2) row span of `rows`."""
    base = gf2_rank(list(rows))
    return gf2_rank(list(rows) + [target]) == base


def support_vector(n: int, indices) -> np.ndarray:
    v = np.zeros(n, dtype=np.int8)
    for i in indices:
        v[i] ^= 1
    return v


def brute_box_entities(extent):
    """Enumerate the full box complex by nested loops; returns dicts of sets."""
    ex, ey, ez = extent
    vertices = {(x, y, z)
                for x in range(ex + 1)
                for y in range(ey + 1)
                for z in range(ez + 1)}
    edges = set()
    for a in range(3):
        tops = [ex, ey, ez]
        spans = [t + 1 for t in tops]
        spans[a] = tops[a]
        for x in range(spans[0]):
            for y in range(spans[1]):
                for z in range(spans[2]):
                    edges.add((x, y, z, a))
    faces = set()
    for n in range(3):
        tops = [ex, ey, ez]
        spans = list(tops)
        spans[n] = tops[n] + 1
        for x in range(spans[0]):
            for y in range(spans[1]):
                for z in range(spans[2]):
                    faces.add((x, y, z, n))
    cells = {(x, y, z)
             for x in range(ex)
             for y in range(ey)
             for z in range(ez)}
    return {"vertices": vertices, "edges": edges, "faces": faces, "cells": cells}


def brute_face_edges(face):
    """Edges of a face by direct geometry: the four unit segments of its rim."""
    x, y, z, n = face
    p = (x, y, z)
    a, b = [i for i in range(3) if i != n]

    def shift(q, axis):
        r = list(q)
        r[axis] += 1
        return tuple(r)

    return {(*p, a), (*shift(p, b), a), (*p, b), (*shift(p, a), b)}


def brute_vertex_edges(v):
    """All six unit edges incident to a vertex of the infinite grid."""
    out = set()
    for a in range(3):
        lo = list(v)
        lo[a] -= 1
        out.add((*lo, a))
        out.add((*v, a))
    return out


def brute_cell_faces(c):
    """The six faces of a unit cube."""
    out = set()
    for n in range(3):
        hi = list(c)
        hi[n] += 1
        out.add((*c, n))
        out.add((*hi, n))
    return out
