"""Chunk decomposition oracles.

`brute_levels` below is a direct transcription of the recursive chunk
definition, exponential and independent of the package implementation.
"""

import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaugefix.chunks import (
    Container,
    Decomposition,
    DecompositionOverflow,
    chunk_probability_bound,
    components,
    containers,
    decompose,
    diameter,
    distance,
    separation,
    tethered,
    threshold_condition,
    threshold_rate,
    verify_diameter_lemma,
)


def brute_is_chunk(T, n, Q):
    T = frozenset(T)
    if len(T) != 2 ** n:
        return False
    if n == 0:
        return True
    if 2 * diameter(T) > Q ** n:
        return False
    items = sorted(T)
    anchor, rest = items[0], items[1:]
    for extra in itertools.combinations(rest, 2 ** (n - 1) - 1):
        a = frozenset((anchor,) + extra)
        if brute_is_chunk(a, n - 1, Q) and brute_is_chunk(T - a, n - 1, Q):
            return True
    return False


def brute_levels(sites, Q):
    levels = [frozenset(sites)]
    n = 1
    while levels[-1]:
        prev = sorted(levels[-1])
        nxt = set()
        for T in itertools.combinations(prev, 2 ** n):
            if brute_is_chunk(T, n, Q):
                nxt |= set(T)
        if not nxt:
            break
        levels.append(frozenset(nxt))
        n += 1
    return levels


# ---------------------------------------------------------------------------
# metric helpers


def test_distance_and_diameter():
    assert distance((0, 0, 0), (3, -1, 2)) == 3
    assert diameter([]) == 0
    assert diameter([(5, 5, 5)]) == 0
    assert diameter([(0, 0, 0), (1, 4, 2), (3, 0, 0)]) == 4
    assert separation([(0, 0, 0)], [(2, 2, 2), (9, 9, 9)]) == 2
    assert separation([], [(0, 0, 0)]) is None


def test_components_radius():
    sites = [(0, 0, 0), (2, 0, 0), (10, 0, 0)]
    byset = {frozenset(c) for c in components(sites, 2)}
    assert byset == {frozenset({(0, 0, 0), (2, 0, 0)}),
                     frozenset({(10, 0, 0)})}
    assert len(components(sites, 10)) == 1
    # half-integer radii round down on integer distances
    assert len(components([(0, 0, 0), (4, 0, 0)], 3.5)) == 2
    assert len(components([(0, 0, 0), (3, 0, 0)], 3.5)) == 1


# ---------------------------------------------------------------------------
# decomposition basics


def test_empty_and_singleton():
    d = decompose([], 6)
    assert d.m is None
    assert d.levels == (frozenset(),)
    json.dumps(d.report())

    d = decompose([(1, 2, 3)], 6)
    assert d.m == 0
    assert d.residues == (frozenset({(1, 2, 3)}),)


def test_pair_radius_edges():
    # level-1 chunks pair sites with doubled distance at most Q
    assert decompose([(0, 0, 0), (3, 0, 0)], 6).m == 1
    assert decompose([(0, 0, 0), (4, 0, 0)], 6).m == 0
    assert decompose([(0, 0, 0), (3, 0, 0)], 7).m == 1
    assert decompose([(0, 0, 0), (4, 0, 0)], 7).m == 0


def test_two_pair_hierarchy():
    Q = 6
    near = [(0, 0, 0), (1, 0, 0)]
    far = [(10, 0, 0), (11, 0, 0)]
    lone = [(40, 0, 0)]
    d = decompose(near + far + lone, Q)
    assert d.m == 2
    assert d.residues[0] == frozenset(lone)
    assert d.residues[1] == frozenset()
    assert d.residues[2] == frozenset(near + far)
    # pushing the pairs outside Q^2/2 of each other stops the merge
    far2 = [(30, 0, 0), (31, 0, 0)]
    d2 = decompose(near + far2, Q)
    assert d2.m == 1


def test_partition_and_nesting():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = {tuple(p) for p in rng.integers(0, 25, size=(8, 3))}
        d = decompose(pts, 4)
        for a, b in zip(d.levels, d.levels[1:]):
            assert b < a or b == a
        assert frozenset().union(*d.residues) == d.sites
        for i, j in itertools.combinations(range(len(d.residues)), 2):
            assert not (d.residues[i] & d.residues[j])
        assert d.residues[-1] == d.levels[-1] != frozenset()


@pytest.mark.parametrize("Q", [2, 3, 4, 6])
def test_against_brute_force(Q):
    rng = np.random.default_rng(Q)
    for _ in range(30):
        n = int(rng.integers(1, 7))
        pts = {tuple(p) for p in rng.integers(0, 20, size=(n, 3))}
        d = decompose(pts, Q)
        assert list(d.levels) == brute_levels(pts, Q), (Q, sorted(pts))


@settings(max_examples=60, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 15), st.integers(0, 15),
                         st.integers(0, 3)), min_size=0, max_size=6),
       st.sampled_from([2, 3, 5, 8]))
def test_against_brute_force_hypothesis(pts, Q):
    assert list(decompose(pts, Q).levels) == brute_levels(pts, Q)


def test_general_path_agrees_with_brute():
    # a stretched chain forces the recursive enumeration at level 2
    Q = 2
    pts = [(i, 0, 0) for i in range(4)]
    d = decompose(pts, Q)
    assert d.m == 1
    assert list(d.levels) == brute_levels(pts, Q)
    # a genuinely chunkable level-2 set through the general path
    pts2 = [(0, 0, 0), (1, 0, 0), (2, 0, 0), (2, 1, 0)]
    assert list(decompose(pts2, Q).levels) == brute_levels(pts2, Q)


def test_overflow_on_dense_spread_components():
    Q = 2
    pts = [(i, 0, 0) for i in range(17)]
    with pytest.raises(DecompositionOverflow):
        decompose(pts, Q)


def test_larger_q_never_lowers_the_top_level():
    assert decompose([(0, 0, 0), (5, 0, 0)], 6).m == 0
    assert decompose([(0, 0, 0), (5, 0, 0)], 12).m == 1
    rng = np.random.default_rng(3)
    for _ in range(25):
        pts = {tuple(p) for p in rng.integers(0, 30, size=(6, 3))}
        d1 = decompose(pts, 4)
        d2 = decompose(pts, 9)
        assert d1.m <= d2.m
        for n in range(len(d1.levels)):
            assert d1.levels[n] <= d2.levels[n]


def test_dense_grid_uses_counting_path_quickly():
    rng = np.random.default_rng(4)
    pts = {tuple(p) for p in rng.integers(0, 12, size=(60, 3))}
    d = decompose(pts, 87)
    assert d.m == int(np.log2(len(pts)))
    assert d.levels[-1] == d.sites


# ---------------------------------------------------------------------------
# scale-separation checks


def test_diameter_lemma_holds_on_random_configs():
    rng = np.random.default_rng(5)
    for Q in (3, 6):
        for _ in range(25):
            n = int(rng.integers(1, 9))
            pts = {tuple(p) for p in rng.integers(0, 40, size=(n, 3))}
            d = decompose(pts, Q)
            assert verify_diameter_lemma(d) == [], (Q, sorted(pts))


def test_diameter_lemma_checker_flags_doctored_input():
    # hand-built objects violating each bound at level 0
    sites = frozenset({(0, 0, 0), (1, 0, 0), (3, 0, 0)})
    fake = Decomposition(Q=9, sites=sites,
                         levels=(sites,), residues=(sites,))
    kinds = {v["kind"] for v in verify_diameter_lemma(fake)}
    assert "separation" in kinds
    chain = frozenset({(i, 0, 0) for i in range(5)})
    fake2 = Decomposition(Q=2, sites=chain, levels=(chain,),
                          residues=(chain,))
    kinds2 = {v["kind"] for v in verify_diameter_lemma(fake2)}
    assert "diameter" in kinds2


def test_report_schema():
    d = decompose([(0, 0, 0), (1, 0, 0), (9, 9, 9)], 6)
    rep = d.report()
    text = json.dumps(rep)
    back = json.loads(text)
    assert back["Q"] == 6
    assert back["max_level"] == d.m
    assert back["total_sites"] == 3
    assert len(back["levels"]) == d.m + 1
    lvl0 = back["levels"][0]
    assert {"level", "chunked_sites", "residue_sites", "components"} <= \
        set(lvl0)


# ---------------------------------------------------------------------------
# containers and tethering


def test_container_extent_bound():
    rng = np.random.default_rng(6)
    Q, s = 6, 4
    for _ in range(20):
        n = int(rng.integers(1, 9))
        pts = {tuple(p) for p in rng.integers(0, 40, size=(n, 3))}
        d = decompose(pts, Q)
        for box in containers(d, s):
            assert all(e <= s * Q ** box.level for e in box.extent())
            for p in box.sites:
                assert all(box.lo[i] <= p[i] <= box.hi[i] for i in range(3))


def test_container_padding():
    d = decompose([(10, 10, 10)], 6)
    (box,) = containers(d, s=8)
    # level 0, pad floor(7*1/2) = 3
    assert box.lo == (7, 7, 7)
    assert box.hi == (13, 13, 13)


def test_box_separation_and_tethering():
    a = Container(level=0, lo=(0, 0, 0), hi=(0, 0, 0))
    b = Container(level=0, lo=(10, 0, 0), hi=(10, 0, 0))
    assert a.box_separation(b) == 10
    assert b.box_separation(a) == 10
    # r=2, s=2: threshold (2*4+2) * Q^0 = 10
    assert tethered(a, b, Q=6, r=2, s=2)
    c = Container(level=0, lo=(11, 0, 0), hi=(11, 0, 0))
    assert not tethered(a, c, Q=6, r=2, s=2)
    # overlapping boxes separate at zero
    d = Container(level=1, lo=(-5, -5, -5), hi=(5, 5, 5))
    assert a.box_separation(d) == 0
    assert tethered(a, d, Q=6, r=2, s=2)


# ---------------------------------------------------------------------------
# probability arithmetic


@pytest.mark.parametrize("m", [0, 1, 2, 3, 6])
def test_probability_bound_matches_exact_rational(m):
    L, Q = 12, 87
    p0 = 1e-16
    got = chunk_probability_bound(L, Q, p0, m)
    exact = (Fraction(L) ** 3 * Fraction(1, (3 * Q) ** 6)
             * (Fraction(3 * Q) * Fraction(p0)) ** (2 ** m))
    # compare in log space; the values themselves span thousands of decades
    import math
    from mpmath import mp, log as mplog
    with mp.workdps(60):
        lg = float(mplog(got))
    le = math.log(exact.numerator) - math.log(exact.denominator)
    assert abs(lg - le) < 1e-9 * max(1.0, abs(le))


def test_probability_bound_decreases_doubly_exponentially():
    vals = [chunk_probability_bound(12, 87, 1e-16, m) for m in range(4)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    from mpmath import log as mplog
    drops = [float(mplog(vals[i]) - mplog(vals[i + 1])) for i in range(3)]
    # log-drops double each level
    assert drops[1] / drops[0] == pytest.approx(2.0, rel=1e-6)
    assert drops[2] / drops[1] == pytest.approx(2.0, rel=1e-6)


def test_threshold_condition_exact():
    Q = 87
    thr = threshold_rate(Q)
    assert thr == Fraction(1, (3 * Q) ** 6)
    assert not threshold_condition(Q, thr)
    assert threshold_condition(Q, thr * Fraction(99, 100))
    assert not threshold_condition(Q, thr * Fraction(101, 100))
    assert threshold_condition(Q, float(thr) * 0.5)


def test_probability_bound_validates_m():
    with pytest.raises(ValueError):
        chunk_probability_bound(12, 87, 1e-16, -1)
    with pytest.raises(ValueError):
        decompose([(0, 0, 0)], 1)
