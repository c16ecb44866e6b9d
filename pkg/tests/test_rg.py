"""Hierarchical decoder oracles for both correction sectors."""

import numpy as np

from gaugefix.lattice import BoundarySpec, build_lattice
from gaugefix.noise import make_rng
from gaugefix.rg import (
    CellSectorRouter,
    EdgeSectorRouter,
    fold_corrections,
    rg_decode,
    sparse_cell_defects,
    sparse_star_syndrome,
)
from gaugefix.syndrome import extract_defects, star_syndrome


def cubic(L):
    return build_lattice("cubic", L, BoundarySpec(2), time_axis=0)


def decode_edges(error_edges, extent, rough_axis=2):
    router = EdgeSectorRouter(extent=extent, rough_axis=rough_axis)
    defects = sparse_star_syndrome(error_edges, extent, rough_axis)
    out = rg_decode(defects, router)
    total = set(error_edges) ^ fold_corrections(out.corrections)
    return out, total


def sheet_parity(edges, rough_axis, layer):
    return sum(1 for e in edges
               if e[3] == rough_axis and e[rough_axis] == layer) % 2


# ---------------------------------------------------------------------------
# engine behaviour


def test_empty_decode():
    out = rg_decode([], EdgeSectorRouter((4, 4, 4), 2))
    assert out.corrections == [] and out.leftover == []
    assert out.levels_run == 0


def test_adjacent_pair_resolved_at_level_zero():
    router = EdgeSectorRouter((16, 16, 16), 2)
    out = rg_decode([(5, 5, 5), (5, 5, 6)], router)
    assert out.corrections == [(5, 5, 5, 2)]
    assert [t["action"] for t in out.trace] == ["pair"]
    assert out.trace[0]["level"] == 0


def test_lone_bulk_defect_deferred_until_boundary_reachable():
    router = EdgeSectorRouter((16, 16, 16), 2)
    out = rg_decode([(8, 8, 8)], router)
    actions = [(t["level"], t["action"]) for t in out.trace]
    assert actions == [(0, "defer"), (1, "defer"), (2, "defer"), (3, "exit")]
    assert len(out.corrections) == 8
    assert out.leftover == []
    # the exit chain's own syndrome is exactly the defect it consumes
    assert sparse_star_syndrome(out.corrections, (16, 16, 16), 2) == \
        {(8, 8, 8)}


def test_far_pair_merges_at_matching_scale():
    router = EdgeSectorRouter((64, 64, 64), 2)
    out = rg_decode([(30, 30, 30), (30, 30, 35)], router)
    pair_levels = [t["level"] for t in out.trace if t["action"] == "pair"]
    assert pair_levels == [3]  # radius 8 is the first scale joining d=5
    assert out.leftover == []


def test_decode_deterministic():
    rng = make_rng(1)
    pts = [tuple(p) for p in rng.integers(1, 15, size=(9, 3))]
    router = EdgeSectorRouter((16, 16, 16), 2)
    a = rg_decode(pts, router)
    b = rg_decode(pts, router)
    assert a.corrections == b.corrections
    assert a.trace == b.trace


def test_fold_cancels_retraced_elements():
    assert fold_corrections([(0, 0, 0, 1), (0, 0, 0, 1), (1, 1, 1, 2)]) == \
        {(1, 1, 1, 2)}


# ---------------------------------------------------------------------------
# edge sector


def test_edge_sector_corrects_every_single_error():
    L = 4
    g = cubic(L)
    sheet_layer = L // 2
    for e in g.edges:
        out, total = decode_edges({e}, (L, L, L))
        assert out.leftover == []
        assert sparse_star_syndrome(total, (L, L, L), 2) == set(), e
        assert sheet_parity(total, 2, sheet_layer) == 0, e


def test_edge_sector_clears_syndrome_for_random_pairs():
    L = 4
    g = cubic(L)
    rng = make_rng(2)
    for _ in range(150):
        pair = {g.edges[i] for i in rng.choice(g.n_edges, size=2,
                                               replace=False)}
        out, total = decode_edges(pair, (L, L, L))
        assert out.leftover == []
        assert sparse_star_syndrome(total, (L, L, L), 2) == set()


def test_edge_sector_corrects_separated_singles():
    # isolated faults decode independently regardless of volume size
    extent = (40, 40, 40)
    rng = make_rng(3)
    placed = []
    while len(placed) < 6:
        p = tuple(int(v) for v in rng.integers(2, 38, size=3))
        if all(max(abs(p[i] - q[i]) for i in range(3)) >= 9 for q in placed):
            placed.append(p)
    errors = {(p[0], p[1], p[2], int(rng.integers(0, 3))) for p in placed}
    out, total = decode_edges(errors, extent)
    assert out.leftover == []
    assert sparse_star_syndrome(total, extent, 2) == set()
    assert sheet_parity(total, 2, 20) == 0


def test_sparse_star_syndrome_matches_dense():
    g = cubic(3)
    rng = make_rng(4)
    for _ in range(10):
        mask = rng.random(g.n_edges) < 0.15
        edges = {g.edges[i] for i in np.flatnonzero(mask)}
        sparse = sparse_star_syndrome(edges, g.extent, 2)
        dense = {g.star_sites[i]
                 for i in np.flatnonzero(star_syndrome(g, mask))}
        assert sparse == dense


# ---------------------------------------------------------------------------
# cell sector


def gate_router(L):
    # absorbing sides for gauge strings: terminal layer first, then the
    # two smooth sides; the prepared initial layer never absorbs
    return CellSectorRouter(extent=(L, L, L),
                            absorbers=((0, 1), (1, 0), (1, 1)))


def test_cell_sector_corrects_every_single_fault():
    L = 4
    g = cubic(L)
    router = gate_router(L)
    for pi, f in enumerate(g.plaquettes):
        defects = sparse_cell_defects({f}, g.extent)
        assert defects == {g.cells[i] for i in np.flatnonzero(
            extract_defects(g, np.eye(g.n_plaquettes, dtype=bool)[pi]))}
        out = rg_decode(defects, router)
        assert out.leftover == []
        total = {f} ^ fold_corrections(out.corrections)
        assert sparse_cell_defects(total, g.extent) == set(), f


def test_cell_sector_random_patterns_cleared():
    L = 4
    g = cubic(L)
    router = gate_router(L)
    rng = make_rng(5)
    for _ in range(30):
        mask = rng.random(g.n_plaquettes) < 0.05
        faces = {g.plaquettes[i] for i in np.flatnonzero(mask)}
        defects = sparse_cell_defects(faces, g.extent)
        out = rg_decode(defects, router)
        assert out.leftover == []
        total = faces ^ fold_corrections(out.corrections)
        assert sparse_cell_defects(total, g.extent) == set()


def test_cell_sector_exit_tie_breaks_by_absorber_order():
    router_a = CellSectorRouter(extent=(4, 4, 4),
                                absorbers=((0, 0), (1, 0)))
    router_b = CellSectorRouter(extent=(4, 4, 4),
                                absorbers=((1, 0), (0, 0)))
    out_a = rg_decode([(1, 1, 1)], router_a)
    out_b = rg_decode([(1, 1, 1)], router_b)
    assert {f[3] for f in out_a.corrections} == {0}
    assert {f[3] for f in out_b.corrections} == {1}
    assert len(out_a.corrections) == 2


def test_cell_sector_exit_faces_exist_in_lattice():
    # corrections must only ever name measurable faces of the gate volume
    L = 4
    g = cubic(L)
    router = gate_router(L)
    rng = make_rng(6)
    for _ in range(20):
        cells = {tuple(int(v) for v in rng.integers(0, L, size=3))
                 for _ in range(4)}
        out = rg_decode(cells, router)
        for f in fold_corrections(out.corrections):
            assert f in g.plaquette_index, f


def test_sparse_cell_defects_matches_dense():
    g = cubic(3)
    rng = make_rng(7)
    for _ in range(10):
        mask = rng.random(g.n_plaquettes) < 0.2
        faces = {g.plaquettes[i] for i in np.flatnonzero(mask)}
        sparse = sparse_cell_defects(faces, g.extent)
        dense = {g.cells[i]
                 for i in np.flatnonzero(extract_defects(g, mask))}
        assert sparse == dense


def test_cell_sector_requires_absorbers_for_odd_charge():
    router = CellSectorRouter(extent=(4, 4, 4), absorbers=())
    out = rg_decode([(2, 2, 2)], router)
    # nothing can absorb the excess; the defect survives as a failure
    assert out.leftover == [(2, 2, 2)]
