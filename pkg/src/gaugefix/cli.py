"""Command line front end.

Subcommands mirror the library's main entry points: geometry dumps,
single trials, grid sweeps, spread audits, cluster analysis of defect
records, and resource estimates.  All output is plain text or JSON on
stdout unless an output path is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from gaugefix.chunks import (chunk_probability_bound, decompose,
                             threshold_condition, verify_diameter_lemma)
from gaugefix.harness import (ExperimentConfig, estimate_resources,
                              run_sweep, run_trial_detail)
from gaugefix.jit import write_decision_log
from gaugefix.lattice import (AXIS_NAMES, BoundarySpec, LatticeError,
                              build_lattice)
from gaugefix.syndrome import write_defect_csv


def _axis(name: str) -> int:
    if name not in AXIS_NAMES:
        raise argparse.ArgumentTypeError(f"axis must be one of {AXIS_NAMES}")
    return AXIS_NAMES.index(name)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_lattice_dump(args) -> int:
    geom = build_lattice(args.kind, args.size,
                         boundary=BoundarySpec(args.rough_axis),
                         time_axis=args.time_axis)
    if args.out:
        with open(args.out, "w") as fh:
            geom.dump(fh)
    else:
        geom.dump(sys.stdout)
    return 0


def _cmd_trial_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    record, art = run_trial_detail(config, args.trial, L=args.size,
                                   eps=args.eps)
    if args.artifacts:
        out = Path(args.artifacts)
        out.mkdir(parents=True, exist_ok=True)
        (out / "record.json").write_text(record.to_json() + "\n")
        (out / "errors.json").write_text(art["errors"].to_json() + "\n")
        with open(out / "defects.csv", "w", newline="") as fh:
            write_defect_csv(art["geometry"], art["defects"], fh)
        with open(out / "decisions.jsonl", "w") as fh:
            write_decision_log(art["decisions"], fh)
        (out / "prefix_flags.json").write_text(
            art["prefix"].flags_json() + "\n")
    print(record.to_json())
    return 0


def _cmd_sweep_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    result = run_sweep(config, out_dir=args.out)
    print(json.dumps({"csv": result["csv"], "manifest": result["manifest"],
                      "figures": result["figures"],
                      "rows": len(result["rows"])}))
    return 0


def _cmd_spread_audit(args) -> int:
    config = ExperimentConfig.load(args.config)
    record, art = run_trial_detail(config, args.trial, L=args.size,
                                   eps=args.eps)
    audit = art["audit"]
    if record.audit_overflow:
        payload = {"overflow": True}
    elif audit is None:
        payload = {"components": [], "cross_pairings": [],
                   "max_spread": 1.0}
    else:
        payload = audit
    _write_or_print(json.dumps(payload, indent=2), args.json)
    return 0


def _read_defect_sites(path: str) -> list[tuple[int, int, int]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"cell_x", "cell_y", "cell_t"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(need)}")
        return [(int(r["cell_x"]), int(r["cell_y"]), int(r["cell_t"]))
                for r in reader]


def _cmd_chunk_analyze(args) -> int:
    sites = _read_defect_sites(args.sites)
    dec = decompose(sites, args.scale)
    report = dec.report()
    status = 0
    if args.verify:
        violations = verify_diameter_lemma(dec)
        report["violations"] = violations
        if violations:
            status = 1
    if args.rate is not None and dec.m is not None:
        report["failure_bound"] = float(chunk_probability_bound(
            args.size or max(max(s) for s in sites) + 1,
            args.scale, args.rate, dec.m))
        report["below_threshold"] = threshold_condition(args.scale,
                                                        args.rate)
    _write_or_print(json.dumps(report, indent=2), args.json)
    return status


def _cmd_resources(args) -> int:
    est = estimate_resources(args.distance, args.layout)
    out = est.to_dict()
    if args.compare_volume is not None:
        # side-by-side check against an externally costed alternative,
        # e.g. a distillation protocol's spacetime volume
        out["compare_volume"] = args.compare_volume
        out["volume_ratio"] = est.spacetime_volume / args.compare_volume
    if args.json:
        print(json.dumps(out))
    else:
        print(f"layout            {est.layout}")
        print(f"distance          {est.distance}")
        print(f"qubits            {est.qubits}")
        print(f"depth             {est.depth}")
        print(f"spacetime volume  {est.spacetime_volume}")
        print(f"transit depth     {est.transit_depth}")
        if args.compare_volume is not None:
            print(f"compare volume    {out['compare_volume']}")
            print(f"volume ratio      {out['volume_ratio']:g}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugefix",
        description="simulator and analysis tools for gauge-fixed "
                    "surface-code volumes")
    sub = parser.add_subparsers(dest="command", required=True)

    lattice = sub.add_parser("lattice", help="geometry inspection")
    lat_sub = lattice.add_subparsers(dest="subcommand", required=True)
    dump = lat_sub.add_parser("dump", help="list vertices, edges, faces "
                                           "and constraint cells")
    dump.add_argument("--kind", default="cubic",
                      choices=["cubic", "alternative"])
    dump.add_argument("--size", type=int, required=True)
    dump.add_argument("--rough-axis", type=_axis, default=2)
    dump.add_argument("--time-axis", type=_axis, default=0)
    dump.add_argument("-o", "--out")
    dump.set_defaults(func=_cmd_lattice_dump)

    trial = sub.add_parser("trial", help="single simulated volumes")
    trial_sub = trial.add_subparsers(dest="subcommand", required=True)
    trun = trial_sub.add_parser("run", help="simulate one volume")
    trun.add_argument("--config", required=True)
    trun.add_argument("--trial", type=int, default=0)
    trun.add_argument("--size", type=int)
    trun.add_argument("--eps", type=float)
    trun.add_argument("--artifacts", help="directory for per-trial dumps")
    trun.set_defaults(func=_cmd_trial_run)

    sweep = sub.add_parser("sweep", help="grid sweeps")
    sweep_sub = sweep.add_subparsers(dest="subcommand", required=True)
    srun = sweep_sub.add_parser("run", help="run the configured grid")
    srun.add_argument("--config", required=True)
    srun.add_argument("--out", help="output directory (default from config)")
    srun.set_defaults(func=_cmd_sweep_run)

    spread = sub.add_parser("spread", help="locality audits")
    spread_sub = spread.add_subparsers(dest="subcommand", required=True)
    saud = spread_sub.add_parser("audit", help="attribute streamed "
                                               "decisions to fault clusters")
    saud.add_argument("--config", required=True)
    saud.add_argument("--trial", type=int, default=0)
    saud.add_argument("--size", type=int)
    saud.add_argument("--eps", type=float)
    saud.add_argument("--json", help="write the audit to this file")
    saud.set_defaults(func=_cmd_spread_audit)

    chunk = sub.add_parser("chunk", help="cluster hierarchy analysis")
    chunk_sub = chunk.add_subparsers(dest="subcommand", required=True)
    cana = chunk_sub.add_parser("analyze", help="decompose a defect record")
    cana.add_argument("--sites", required=True,
                      help="defect CSV with cell_x,cell_y,cell_t columns")
    cana.add_argument("--scale", type=int, required=True,
                      help="base separation scale")
    cana.add_argument("--verify", action="store_true",
                      help="check diameter and separation bounds; "
                           "violations exit nonzero")
    cana.add_argument("--rate", type=float,
                      help="per-site fault rate for the failure bound")
    cana.add_argument("--size", type=int,
                      help="linear system size for the failure bound")
    cana.add_argument("--json", help="write the report to this file")
    cana.set_defaults(func=_cmd_chunk_analyze)

    res = sub.add_parser("resources", help="footprint of one gate")
    res.add_argument("--distance", type=int, required=True)
    res.add_argument("--layout", default="local",
                     choices=["local", "cylinder"])
    res.add_argument("--compare-volume", type=int, default=None,
                     help="spacetime volume of an alternative protocol "
                          "to report a ratio against")
    res.add_argument("--json", action="store_true")
    res.set_defaults(func=_cmd_resources)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LatticeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
