"""Experiment harness: configs, single trials, sweeps, resource estimates.

A trial simulates one gate volume end to end: decode the history slab
into flags, sample gate noise, stream defects through the just-in-time
decoder, rebuild the gauge with the deterministic sweep, cross-check the
streamed result against an offline decode of the same record, and score
the surviving state.  Only the terminal layer leaves the volume, so the
residual is restricted to it, handed to the receiving side's decoder,
and the trial fails when the decoded output carries a logical flip.
Sampled gauge frames drop out of every observable (corrections are
compared against the truth frame XOR itself), so trials skip sampling
them.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gaugefix import __version__
from gaugefix.chunks import DecompositionOverflow, decompose
from gaugefix.jit import (audit_spread, decisions_face_set, jit_decoder_for)
from gaugefix.lattice import BoundarySpec, Geometry, cached_lattice
from gaugefix.noise import (ErrorSet, error_sites, make_rng, sample_errors,
                            site_grid_for)
from gaugefix.prefix import apply_flags, run_prefix
from gaugefix.rg import (CellSectorRouter, fold_corrections, rg_decode)
from gaugefix.syndrome import (InternalFaultError, extract_defects,
                               defect_cells, fix_gauge, observed_pattern)

THREADS_ENV = "GAUGEFIX_THREADS"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Flat experiment description, loadable from TOML or JSON."""

    kind: str = "cubic"
    L: int = 6
    eps: float = 1e-3
    trials: int = 200
    seed: int = 7
    prefix_depth: int = 2
    Q: int = 6
    spread_s: int = 8
    spread_r: int = 2
    site_side: int = 1
    qubits_per_site: int = 120
    threads: int = 1
    L_grid: list = field(default_factory=list)
    eps_grid: list = field(default_factory=list)
    trials_grid: list = field(default_factory=list)
    out_dir: str = "out"
    figures: bool = True

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json":
            raw = json.loads(text)
        else:
            try:
                import tomllib  # py311+
            except ModuleNotFoundError:
                import tomli as tomllib
            raw = tomllib.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def resolve_threads(self) -> int:
        env = os.environ.get(THREADS_ENV)
        n = int(env) if env else self.threads
        if n <= 0:
            n = os.cpu_count() or 1
        return n


def gate_geometry(config: ExperimentConfig, L: int | None = None) -> Geometry:
    return cached_lattice(config.kind, L or config.L, BoundarySpec(2),
                          time_axis=0)


# ---------------------------------------------------------------------------
# single trial


@dataclass
class TrialRecord:
    seed: int
    trial: int
    L: int
    eps: float
    failed: bool
    discarded: bool
    jit_class: int
    offline_class: int
    n_handoff: int
    n_data: int
    n_meas: int
    n_flags: int
    n_carried: int
    n_defects: int
    n_decisions: int
    max_spread: float
    audit_overflow: bool

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self))


def _offline_router(geom: Geometry) -> CellSectorRouter:
    side = geom.side_axis
    return CellSectorRouter(
        extent=geom.extent,
        absorbers=((geom.time_axis, 1), (side, 0), (side, 1)))


@dataclass(frozen=True)
class SheetRouter:
    """Pairs flipped checks of the terminal layer's code sheet.

    Points are (u, v) anchors of the layer's time-normal faces, u along
    the side axis and v along the rough axis.  Dual paths terminate on
    the two side planes; correction elements are the edge tuples the
    path crosses, so they fold directly into edge sets.
    """

    geom: Geometry

    def domain_scale(self) -> int:
        return max(self.geom.extent)

    def boundary_distance(self, p) -> int:
        u = p[0]
        return min(u + 1, self.geom.extent[self.geom.side_axis] - u)

    def _edge(self, u: int, v: int, axis: int) -> tuple:
        g = self.geom
        pos = [0, 0, 0]
        pos[g.time_axis] = g.extent[g.time_axis]
        pos[g.side_axis] = u
        pos[g.rough_axis] = v
        return (pos[0], pos[1], pos[2], axis)

    def pair_path(self, a, b) -> list:
        (u1, v1), (u2, v2) = a, b
        g = self.geom
        out = [self._edge(k, v1, g.rough_axis)
               for k in range(min(u1, u2) + 1, max(u1, u2) + 1)]
        out.extend(self._edge(u2, k, g.side_axis)
                   for k in range(min(v1, v2) + 1, max(v1, v2) + 1))
        return out

    def boundary_exit(self, p) -> list:
        u, v = p
        g = self.geom
        width = g.extent[g.side_axis]
        if u + 1 <= width - u:
            span = range(0, u + 1)
        else:
            span = range(u + 1, width + 1)
        return [self._edge(k, v, g.rough_axis) for k in span]


def _sheet_checks(geom: Geometry, edges: set) -> set:
    """Flipped terminal-sheet checks (face anchors) of an output edge set."""
    a1, a2 = geom.side_axis, geom.rough_axis
    spans = geom.extent[a1], geom.extent[a2]
    flip: set = set()
    for e in edges:
        u, v = e[a1], e[a2]
        cand = ((u, v - 1), (u, v)) if e[3] == a1 else ((u - 1, v), (u, v))
        for p in cand:
            if 0 <= p[0] < spans[0] and 0 <= p[1] < spans[1]:
                flip ^= {p}
    return flip


def _handoff_outcome(geom: Geometry, residual: np.ndarray) -> tuple[int, int]:
    """Decode the residual's terminal layer as the receiving code sheet.

    Only the terminal layer leaves the volume; interior flips were
    measured away and acted through checks already consumed upstream.
    Returns the decoded logical class and the raw handoff flip count.
    """
    g = geom
    top = g.extent[g.time_axis]
    out_edges = set()
    for i in np.flatnonzero(residual):
        e = g.edges[i]
        if e[3] != g.time_axis and e[g.time_axis] == top:
            out_edges.add(e)
    dec = rg_decode(_sheet_checks(g, out_edges), SheetRouter(geom=g))
    if dec.leftover:
        raise InternalFaultError("handoff decode left defects")
    total = out_edges ^ fold_corrections(dec.corrections)
    if _sheet_checks(g, total):
        raise InternalFaultError("handoff correction left syndrome")
    mid = g.extent[g.side_axis] // 2
    string = [e for e in total if e[3] == g.rough_axis and e[g.side_axis] == mid]
    return len(string) % 2, len(out_edges)


def _score_pattern(geom: Geometry, data_mask: np.ndarray,
                   pattern: np.ndarray):
    """Decode one observed record both ways and score the output layer."""
    defects = extract_defects(geom, pattern)
    cells = defect_cells(geom, defects)

    decisions = jit_decoder_for(geom).run(cells)
    jit_mask = np.zeros(geom.n_plaquettes, dtype=bool)
    for f in decisions_face_set(decisions):
        jit_mask[geom.plaquette_index[f]] = True
    fixed = pattern ^ jit_mask
    if extract_defects(geom, fixed).any():
        raise InternalFaultError("streamed corrections left defects")

    # the sweep explains the record as data flips; whatever disagrees
    # with the rebuilt frame is its measurement-error attribution, so no
    # conservation constraint applies once measurement noise is present
    corr = fix_gauge(geom, fixed)
    jit_class, n_handoff = _handoff_outcome(geom, data_mask ^ corr)

    # offline re-decode of the same record for post-selection
    offline = rg_decode(cells, _offline_router(geom))
    if offline.leftover:
        raise InternalFaultError("offline decode left defects")
    off_mask = np.zeros(geom.n_plaquettes, dtype=bool)
    for f in fold_corrections(offline.corrections):
        off_mask[geom.plaquette_index[f]] = True
    corr_off = fix_gauge(geom, pattern ^ off_mask)
    offline_class, _ = _handoff_outcome(geom, data_mask ^ corr_off)
    return jit_class, offline_class, n_handoff, defects, cells, decisions


def _trial_spread(geom: Geometry, config: ExperimentConfig,
                  meas_errors: ErrorSet, decisions) -> tuple[dict | None, bool]:
    """Audit of the stream's responses around the measurement-fault
    clusters driving them; None when there is nothing to attribute."""
    if not decisions:
        return None, False
    grid = site_grid_for(geom, config.site_side)
    sites = error_sites(geom, meas_errors, grid)
    if not sites:
        return None, False
    try:
        dec = decompose(sites, config.Q)
    except DecompositionOverflow:
        return None, True
    comps = [c for j in range(dec.m + 1)
             for c in dec.residue_components(j)]
    return audit_spread(decisions, comps, geom.extent, geom.time_axis), False


def run_trial_detail(config: ExperimentConfig, trial: int,
                     L: int | None = None,
                     eps: float | None = None) -> tuple[TrialRecord, dict]:
    """One trial plus its intermediate artifacts (for audits and dumps)."""
    geom = gate_geometry(config, L)
    eps = config.eps if eps is None else eps
    rng_slab = make_rng(config.seed, trial, 0)
    rng_gate = make_rng(config.seed, trial, 1)

    pre = run_prefix(geom, config.prefix_depth, eps, rng_slab)
    # the first layer's in-plane qubits and check readouts belong to the
    # previous volume's output plane; the slab models that plane's noise
    # and feeds it in as flags, so gate noise starts with the next round
    errors = sample_errors(geom, eps, rng_gate,
                           data_support=~geom.initial_edge_mask,
                           meas_support=~geom.initial_face_mask)

    meas_mask = errors.meas_mask(geom)
    initial_mask = np.zeros(geom.n_plaquettes, dtype=bool)
    if pre.carried:
        initial_mask ^= apply_flags(geom, pre.carried)
    if pre.flags:
        initial_mask ^= apply_flags(geom, pre.flags)
    data_mask = errors.data_mask(geom)

    pattern = observed_pattern(geom, None, data_mask,
                               meas_mask ^ initial_mask)
    score = _score_pattern(geom, data_mask, pattern)
    jit_class, offline_class, n_handoff, defects, cells, decisions = score

    discarded = jit_class != offline_class
    failed = bool(jit_class)

    gate_meas_errors = ErrorSet(
        meas=errors.meas | frozenset((f, 0) for f in pre.carried))
    audit, overflow = _trial_spread(geom, config, gate_meas_errors,
                                    decisions)
    if overflow:
        spread = float("nan")
    elif audit is None:
        spread = 1.0
    else:
        spread = float(audit["max_spread"])
    record = TrialRecord(
        seed=config.seed, trial=trial, L=geom.L, eps=eps,
        failed=failed, discarded=discarded,
        jit_class=jit_class, offline_class=offline_class,
        n_handoff=n_handoff,
        n_data=len(errors.data), n_meas=len(errors.meas),
        n_flags=len(pre.flags), n_carried=len(pre.carried),
        n_defects=len(cells), n_decisions=len(decisions),
        max_spread=spread, audit_overflow=overflow)
    artifacts = {
        "geometry": geom, "errors": errors, "prefix": pre,
        "defects": defects, "defect_cells": cells,
        "decisions": decisions, "audit": audit,
    }
    return record, artifacts


def run_trial(config: ExperimentConfig, trial: int,
              L: int | None = None, eps: float | None = None) -> TrialRecord:
    return run_trial_detail(config, trial, L=L, eps=eps)[0]


# ---------------------------------------------------------------------------
# sweeps

CSV_COLUMNS = ["L", "eps", "trials", "failures", "ci_lo", "ci_hi",
               "discard_rate", "accepted_failures", "max_spread"]


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _trial_args(config: ExperimentConfig, L: int, eps: float, n: int):
    return [(config, t, L, eps) for t in range(n)]


def _run_one(args) -> TrialRecord:
    config, trial, L, eps = args
    return run_trial(config, trial, L=L, eps=eps)


def run_point(config: ExperimentConfig, L: int, eps: float,
              trials: int, threads: int = 1) -> tuple[dict, list[TrialRecord]]:
    """All trials of one (L, eps) grid point, aggregated to a CSV row."""
    args = _trial_args(config, L, eps, trials)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_one, args,
                                    chunksize=max(1, trials // (8 * threads))))
    else:
        records = [_run_one(a) for a in args]
    failures = sum(r.failed for r in records)
    discards = sum(r.discarded for r in records)
    accepted = [r for r in records if not r.discarded]
    acc_fail = sum(r.failed for r in accepted)
    lo, hi = wilson_interval(acc_fail, len(accepted))
    spreads = [r.max_spread for r in records
               if not np.isnan(r.max_spread)]
    row = {
        "L": L, "eps": eps, "trials": trials, "failures": failures,
        "ci_lo": lo, "ci_hi": hi,
        "discard_rate": discards / trials if trials else 0.0,
        "accepted_failures": acc_fail,
        "max_spread": max(spreads, default=1.0),
    }
    return row, records


def run_sweep(config: ExperimentConfig,
              out_dir: str | Path | None = None) -> dict:
    """Full grid sweep; writes CSV, manifest, and figures to out_dir."""
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    L_values = list(config.L_grid) or [config.L]
    eps_values = list(config.eps_grid) or [config.eps]
    # sparse low-noise points need far more shots than saturated ones
    counts = list(config.trials_grid) or [config.trials] * len(eps_values)
    if len(counts) != len(eps_values):
        raise ValueError("trials_grid must match eps_grid in length")
    threads = config.resolve_threads()
    started = _dt.datetime.now(_dt.timezone.utc)

    csv_path = out / "sweep.csv"
    rows = []
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for L in L_values:
            for eps, n in zip(eps_values, counts):
                row, _records = run_point(config, L, float(eps),
                                          int(n), threads)
                rows.append(row)
                writer.writerow(row)
                fh.flush()

    finished = _dt.datetime.now(_dt.timezone.utc)
    manifest = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "trial_streams": "(seed, trial, category) counter streams",
        "versions": {
            "package": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "threads": threads,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "rows": len(rows),
        "csv": csv_path.name,
    }
    figures = []
    if config.figures:
        from gaugefix.plots import render_sweep_figures
        figures = [p.name for p in render_sweep_figures(rows, out)]
    manifest["figures"] = figures
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return {"csv": str(csv_path), "manifest": str(out / "manifest.json"),
            "rows": rows, "figures": figures}


# ---------------------------------------------------------------------------
# resource estimates


@dataclass(frozen=True)
class ResourceEstimate:
    layout: str
    distance: int
    qubits: int
    depth: int
    spacetime_volume: int
    transit_depth: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_LAYOUTS = {
    # layout -> (qubit factor on d^2, depth factor on d, volume factor on d^3)
    "local": (10, 3, 30),
    "cylinder": (6, 3, 18),
}


def estimate_resources(distance: int, layout: str = "local") -> ResourceEstimate:
    """Footprint of one gate at code distance d.

    The interleaved local layout needs 10 d^2 qubits for 3 d rounds; the
    folded cylinder variant reuses qubits for 6 d^2.  Moving the state in
    and out costs 2 d extra rounds of transit either way.
    """
    if layout not in _LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}; "
                         f"choose from {sorted(_LAYOUTS)}")
    if distance < 1:
        raise ValueError("distance must be at least 1")
    q, t, v = _LAYOUTS[layout]
    return ResourceEstimate(layout=layout, distance=distance,
                            qubits=q * distance * distance,
                            depth=t * distance,
                            spacetime_volume=v * distance ** 3,
                            transit_depth=2 * distance)
