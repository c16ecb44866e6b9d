"""Hierarchical chunk decomposition of sparse fault configurations.

A fault configuration is a finite set of sites in Z^3 with the sup-norm
metric.  A level-n chunk is a set of 2^n sites of diameter at most Q^n/2
that splits into two disjoint level-(n-1) chunks; level-0 chunks are
single sites.  E_n collects the sites lying in some level-n chunk formed
inside E_{n-1}, and the residues F_n = E_n \\ E_{n+1} partition the
configuration by the scale at which it stops clustering.

Membership is computed exactly.  Distances are compared as doubled
integers so half-integer radii like Q/2 never touch floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
from mpmath import mp, mpf

Site = tuple[int, int, int]

# general-path enumeration refuses components larger than this
GENERAL_CAP = 16


class DecompositionOverflow(RuntimeError):
    """Raised when exact chunk enumeration would be intractable.

    Configurations dense enough to trigger this are far above the sparse
    regime the decomposition is meant for; callers treat it as a sample to
    skip and count, not as an error to repair.
    """


def distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Sup-norm distance between two sites."""
    return max(abs(int(a[i]) - int(b[i])) for i in range(len(a)))


def diameter(sites: Iterable[Site]) -> int:
    pts = list(sites)
    if len(pts) <= 1:
        return 0
    # axis-aligned boxes realise the sup-norm diameter
    return max(
        max(p[i] for p in pts) - min(p[i] for p in pts)
        for i in range(3)
    )


def separation(a: Iterable[Site], b: Iterable[Site]) -> int | None:
    """Smallest pairwise distance between two site sets; None if either empty."""
    pa, pb = list(a), list(b)
    if not pa or not pb:
        return None
    return min(distance(p, q) for p in pa for q in pb)


def components(sites: Iterable[Site], radius: float) -> list[frozenset]:
    """Connected components under `distance <= radius` adjacency."""
    return _components2(sites, int(2 * radius))


def _components2(sites: Iterable[Site], twice_radius: int) -> list[frozenset]:
    pts = sorted(set(sites))
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if 2 * distance(pts[i], pts[j]) <= twice_radius:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict[int, set] = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(pts[i])
    return [frozenset(g) for g in groups.values()]


# ---------------------------------------------------------------------------
# per-level membership


def _close_pair_graph(comp: Sequence[Site], Q: int) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(comp)
    for a, b in itertools.combinations(comp, 2):
        if 2 * distance(a, b) <= Q:
            g.add_edge(a, b)
    return g


def _matching_members(comp: frozenset, n: int, Q: int) -> frozenset:
    """Members by pairing: valid when every candidate super-chunk satisfies
    its diameter bound automatically, which holds for n == 1 always and for
    n >= 2 whenever diam(component) <= Q^2/2.

    A site belongs iff some matching of 2^(n-1) close pairs covers it.  Any
    covered site of a size-k matching stays covered while augmenting to a
    maximum matching, so membership reduces to: degree >= 1 and the maximum
    matching reaches the required size.
    """
    g = _close_pair_graph(sorted(comp), Q)
    need = 2 ** (n - 1)
    mstar = len(nx.max_weight_matching(g, maxcardinality=True))
    if mstar < need:
        return frozenset()
    return frozenset(v for v in g.nodes if g.degree[v] >= 1)


def _general_members(comp: frozenset, n: int, Q: int) -> frozenset:
    """Exact recursive enumeration for spread-out components (rarely hit)."""
    if len(comp) > GENERAL_CAP:
        raise DecompositionOverflow(
            f"component of {len(comp)} sites too spread out for exact "
            f"enumeration at level {n}")
    pts = sorted(comp)
    memo: dict[tuple[frozenset, int], bool] = {}

    def is_chunk(t: frozenset, j: int) -> bool:
        if len(t) != 2 ** j:
            return False
        if j == 0:
            return True
        key = (t, j)
        if key in memo:
            return memo[key]
        ok = False
        if 2 * diameter(t) <= Q ** j:
            items = sorted(t)
            anchor = items[0]
            rest = items[1:]
            half = 2 ** (j - 1)
            for extra in itertools.combinations(rest, half - 1):
                a = frozenset((anchor,) + extra)
                b = t - a
                if is_chunk(a, j - 1) and is_chunk(b, j - 1):
                    ok = True
                    break
        memo[key] = ok
        return ok

    hits: set = set()
    for sub in itertools.combinations(pts, 2 ** n):
        t = frozenset(sub)
        if t <= hits:
            continue
        if is_chunk(t, n):
            hits |= t
    return frozenset(hits)


def _level_members(universe: frozenset, n: int, Q: int) -> frozenset:
    """E_n from E_{n-1}: sites inside some level-n chunk."""
    out: set = set()
    for comp in _components2(universe, Q ** n):
        if len(comp) < 2 ** n:
            continue
        if 2 * diameter(comp) <= Q:
            # complete close-pair graph: any 2^n-subset is a chunk
            out |= comp
        elif n == 1 or 2 * diameter(comp) <= Q * Q:
            out |= _matching_members(comp, n, Q)
        else:
            out |= _general_members(comp, n, Q)
    return frozenset(out)


@dataclass(frozen=True)
class Decomposition:
    """Chunk decomposition of one site configuration."""

    Q: int
    sites: frozenset
    levels: tuple          # (E_0, ..., E_m)
    residues: tuple        # (F_0, ..., F_m) with F_j = E_j \ E_{j+1}

    @property
    def m(self) -> int | None:
        """Largest level with a nonempty chunk set; None for no faults."""
        if not self.sites:
            return None
        return len(self.levels) - 1

    def residue_components(self, j: int) -> list[frozenset]:
        """Q^j-connected components of F_j (the grouping used by the
        diameter and separation statements)."""
        return _components2(self.residues[j], 2 * self.Q ** j)

    def report(self) -> dict:
        """JSON-ready summary of the decomposition."""
        levels = []
        for j, (ej, fj) in enumerate(zip(self.levels, self.residues)):
            comps = []
            for comp in self.residue_components(j):
                pts = sorted(comp)
                comps.append({
                    "sites": [list(p) for p in pts],
                    "diameter": diameter(comp),
                })
            levels.append({
                "level": j,
                "chunked_sites": len(ej),
                "residue_sites": len(fj),
                "components": comps,
            })
        return {
            "Q": self.Q,
            "total_sites": len(self.sites),
            "max_level": self.m,
            "levels": levels,
        }


def decompose(sites: Iterable[Site], Q: int) -> Decomposition:
    """Compute the full chunk hierarchy of a fault configuration."""
    if Q < 2:
        raise ValueError("Q must be at least 2")
    base = frozenset(tuple(int(c) for c in s) for s in sites)
    levels = [base]
    n = 1
    while levels[-1]:
        nxt = _level_members(levels[-1], n, Q)
        if not nxt:
            break
        levels.append(nxt)
        n += 1
    residues = []
    for j, ej in enumerate(levels):
        upper = levels[j + 1] if j + 1 < len(levels) else frozenset()
        residues.append(frozenset(ej - upper))
    return Decomposition(Q=Q, sites=base, levels=tuple(levels),
                         residues=tuple(residues))


# ---------------------------------------------------------------------------
# structure checks


def verify_diameter_lemma(dec: Decomposition) -> list[dict]:
    """Check every residue component against the scale-separation bounds.

    For each Q^n-connected component M of F_n the component must satisfy
    diam(M) <= Q^n, and the rest of E_n must sit further than Q^(n+1)/3
    away.  Returns a list of violation records; empty means the bounds hold.
    """
    bad = []
    if dec.m is None:
        return bad
    for n in range(dec.m + 1):
        en = dec.levels[n]
        for comp in dec.residue_components(n):
            d = diameter(comp)
            if d > dec.Q ** n:
                bad.append({"level": n, "kind": "diameter",
                            "value": d, "bound": dec.Q ** n,
                            "component": sorted(comp)})
            rest = en - comp
            sep = separation(comp, rest)
            if sep is not None and 3 * sep <= dec.Q ** (n + 1):
                bad.append({"level": n, "kind": "separation",
                            "value": sep,
                            "bound": Fraction(dec.Q ** (n + 1), 3),
                            "component": sorted(comp)})
    return bad


# ---------------------------------------------------------------------------
# containers and tethering


@dataclass(frozen=True)
class Container:
    """Axis-aligned box around one residue component, padded to scale."""

    level: int
    lo: Site
    hi: Site
    sites: frozenset = field(compare=False, default=frozenset())

    def extent(self) -> tuple[int, int, int]:
        return tuple(self.hi[i] - self.lo[i] for i in range(3))

    def box_separation(self, other: "Container") -> int:
        gap = 0
        for i in range(3):
            gap = max(gap, self.lo[i] - other.hi[i], other.lo[i] - self.hi[i])
        return max(gap, 0)


def containers(dec: Decomposition, s: int) -> list[Container]:
    """Padded boxes, one per residue component.

    The box of a level-j component is its bounding box padded on every side
    by floor((s-1) Q^j / 2), so its width stays at most s Q^j per axis.
    """
    if dec.m is None:
        return []
    out = []
    for j in range(dec.m + 1):
        pad = ((s - 1) * dec.Q ** j) // 2
        for comp in dec.residue_components(j):
            pts = sorted(comp)
            lo = tuple(min(p[i] for p in pts) - pad for i in range(3))
            hi = tuple(max(p[i] for p in pts) + pad for i in range(3))
            out.append(Container(level=j, lo=lo, hi=hi, sites=comp))
    return out


def tethered(a: Container, b: Container, Q: int, r: int, s: int) -> bool:
    """Whether two containers are close enough to interact across scales.

    Two boxes are tethered when their separation is at most
    (r (s + 2) + 2) Q^j with j the smaller of the two levels.
    """
    j = min(a.level, b.level)
    return a.box_separation(b) <= (r * (s + 2) + 2) * Q ** j


# ---------------------------------------------------------------------------
# probability arithmetic


def chunk_probability_bound(L: int, Q: int, p0: float, m: int):
    """Upper bound on the probability that the top level reaches m.

    Evaluates L^3 (3Q)^(-6) (3Q p0)^(2^m) at high precision; the doubly
    exponential exponent underflows double floats almost immediately.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    with mp.workdps(60):
        base = mpf(3 * Q) * mpf(p0)
        return mpf(L) ** 3 * mpf(3 * Q) ** (-6) * base ** (2 ** m)


def threshold_condition(Q: int, p0: float) -> bool:
    """True when the fault rate is below the clustering threshold (3Q)^-6.

    Exact rational comparison; no rounding at rates near the threshold.
    """
    return Fraction(p0) < Fraction(1, (3 * Q) ** 6)


def threshold_rate(Q: int) -> Fraction:
    return Fraction(1, (3 * Q) ** 6)
