"""Command-line interface: experiment presets, CSV emission, manifests and
heatmap rendering.

Exit codes: 0 success, 2 invalid flags or malformed input, 3 runtime
failure, 4 resume-file conflict. ``GRANGER_LAB_THREADS`` caps the worker
count. Every experiment writes a flat key=value manifest next to its
outputs; ``granger-lab --from-manifest FILE`` re-runs it byte-identically
(timestamps aside).
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import time

import numpy as np

from . import __version__
from .core import TimeSeries, TopologyKind
from .criteria import Criterion, PRESET_CRITERIA
from .datagen import (GeneratorConfig, NoiseKind, TrivariateSample, generate)
from .experiments import (OffGrid, extract_plane, phase_space, snr_grid,
                          sweep_sample_size, sweep_significance)
from .granger import (BIV_XY, BIV_XZ, BIV_YZ, TRI_XZ, TRI_YZ, GrangerConfig,
                      infer_topology, link_outcomes, reverse_link_decisions)
from .ppm import render_plane, write_ppm
from .regress import RankDeficient

PHASE_HEADER = ("snr_x_db,snr_y_db,snr_z_db,topology,noise_kind,n,alpha,"
                "criterion,iterations,spurious_rate,unidentified_rate,rate_xz,rate_yz")


def fmt(value: float) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(value))


def parse_grid(spec: str) -> tuple[float, ...]:
    """Parse 'lo:hi:step' (inclusive) or a comma-separated value list."""
    if ":" in spec:
        lo, hi, step = (float(v) for v in spec.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid spec {spec!r}")
        count = int(round((hi - lo) / step)) + 1
        return tuple(round(lo + i * step, 12) for i in range(count))
    values = tuple(float(v) for v in spec.split(",") if v.strip())
    if not values:
        raise ValueError("empty grid")
    return values


def parse_criteria(spec: str) -> tuple[Criterion, ...]:
    return tuple(Criterion(name.strip().lower()) for name in spec.split(","))


def write_manifest(path: str, experiment: str, argv: list[str],
                   seed: int, outputs: list[str],
                   started: float, finished: float) -> None:
    lines = [
        f"experiment={experiment}",
        f"argv={shlex.join(argv)}",
        f"seed={seed}",
        f"version={__version__}",
        f"started={time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime(started))}",
        f"finished={time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime(finished))}",
    ]
    lines += [f"output={p}" for p in outputs]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            out.setdefault(key, []).append(value)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", choices=["driver", "indirect"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="granger-lab",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--from-manifest", metavar="FILE",
                        help="re-run the experiment recorded in a manifest")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("sweep-alpha", help="rates vs significance level")
    _add_common(p)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--alpha-grid", default="0.05:0.5:0.05")
    p.add_argument("--criteria", default="lr,wald,rao")
    p.add_argument("--iterations", type=int, default=1000)

    p = sub.add_parser("sweep-n", help="rates vs sample size")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sizes", required=True, help="lo:hi:step or comma list")
    p.add_argument("--criteria", default="lr,wald,rao")
    p.add_argument("--cases", type=int, default=1000)

    p = sub.add_parser("phase-space", help="rates over the 3-D SNR grid")
    _add_common(p)
    p.add_argument("--noise", choices=["intrinsic", "extrinsic"], required=True)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--criterion", default="wald")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--grid", default="-40:40:5", help="shared axis grid")
    p.add_argument("--grid-x"), p.add_argument("--grid-y"), p.add_argument("--grid-z")
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("render", help="render a phase-space plane to PPM")
    p.add_argument("--input", required=True, help="phase-space CSV")
    p.add_argument("--axis", choices=["x", "y", "z"], required=True)
    p.add_argument("--value", type=float, required=True, help="plane coordinate in dB")
    p.add_argument("--field", default="unidentified_rate",
                   choices=["spurious_rate", "unidentified_rate", "rate_xz", "rate_yz"])
    p.add_argument("--scale", type=int, default=16)
    p.add_argument("--out", required=True, help="output PPM path")

    p = sub.add_parser("analyze", help="two-step trivariate test on a CSV file")
    p.add_argument("--input", required=True, help="CSV with header t,x,y,z")
    p.add_argument("--lags", type=int, default=2)
    p.add_argument("--criterion", default="wald")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("generate", help="dump one synthetic sample to CSV")
    p.add_argument("--topology", choices=["driver", "indirect"], required=True)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--noise", choices=["fixed", "intrinsic", "extrinsic"], default="fixed")
    p.add_argument("--params", default="0,0.1,0.5",
                   help="sigma triple (fixed) or SNR dB triple (intrinsic/extrinsic)")
    p.add_argument("--ar", type=float, default=0.3)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    return parser


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_sweep_alpha(args, argv: list[str]) -> int:
    started = time.time()
    alphas = parse_grid(args.alpha_grid)
    criteria = parse_criteria(args.criteria)
    topology = TopologyKind(args.topology)
    result = sweep_significance(topology, alphas, n_points=args.n,
                                criteria=criteria, iterations=args.iterations,
                                seed=args.seed, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    lines = ["alpha,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified"]
    for crit in criteria:
        for alpha, est in zip(result.axis, result.rates[crit]):
            lines.append(",".join([
                fmt(alpha), crit.value, fmt(est.spurious_rate), fmt(est.unidentified_rate),
                fmt(est.standard_error(est.spurious_rate)),
                fmt(est.standard_error(est.unidentified_rate))]))
    csv_path = os.path.join(args.out, "sweep_alpha.csv")
    _write_lines(csv_path, lines)
    manifest = os.path.join(args.out, "manifest.txt")
    write_manifest(manifest, "sweep-alpha", argv, args.seed, [csv_path],
                   started, time.time())
    for crit in criteria:
        print(f"optimal alpha ({crit.value}): {fmt(result.optimal(crit))}")
    return 0


def cmd_sweep_n(args, argv: list[str]) -> int:
    started = time.time()
    sizes = tuple(int(v) for v in parse_grid(args.sizes))
    criteria = parse_criteria(args.criteria)
    topology = TopologyKind(args.topology)
    result = sweep_sample_size(topology, args.alpha, sizes, criteria=criteria,
                               cases=args.cases, seed=args.seed, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    lines = ["n,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified"]
    for crit in criteria:
        for n, est in zip(result.axis, result.rates[crit]):
            lines.append(",".join([
                str(int(n)), crit.value, fmt(est.spurious_rate), fmt(est.unidentified_rate),
                fmt(est.standard_error(est.spurious_rate)),
                fmt(est.standard_error(est.unidentified_rate))]))
    csv_path = os.path.join(args.out, "sweep_n.csv")
    _write_lines(csv_path, lines)
    cmp_lines = ["n,criterion_a,criterion_b,spurious_p,spurious_different,"
                 "unidentified_p,unidentified_different"]
    for (ca, cb), comps in result.comparisons.items():
        for n, comp in zip(result.axis, comps):
            cmp_lines.append(",".join([
                str(int(n)), ca.value, cb.value, fmt(comp.spurious_p),
                str(comp.spurious_different).lower(), fmt(comp.unidentified_p),
                str(comp.unidentified_different).lower()]))
    cmp_path = os.path.join(args.out, "sweep_n_compare.csv")
    _write_lines(cmp_path, cmp_lines)
    manifest = os.path.join(args.out, "manifest.txt")
    write_manifest(manifest, "sweep-n", argv, args.seed, [csv_path, cmp_path],
                   started, time.time())
    final = {crit.value: result.rates[crit][-1].unidentified_rate for crit in criteria}
    print(f"final unidentified rates at n={sizes[-1]}: {final}")
    return 0


def _phase_row(meta: dict, cell: dict) -> str:
    return ",".join([
        fmt(cell["snr_x_db"]), fmt(cell["snr_y_db"]), fmt(cell["snr_z_db"]),
        meta["topology"], meta["noise_kind"], str(meta["n"]), fmt(meta["alpha"]),
        meta["criterion"], str(meta["iterations"]), fmt(cell["spurious_rate"]),
        fmt(cell["unidentified_rate"]), fmt(cell["rate_xz"]), fmt(cell["rate_yz"])])


def load_phase_csv(path: str) -> tuple[dict, list[dict]]:
    """Parse a phase-space CSV into (metadata, cell rows)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != PHASE_HEADER:
            raise ValueError(f"unexpected header in {path}")
        meta: dict = {}
        cells = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            row_meta = {"topology": parts[3], "noise_kind": parts[4],
                        "n": int(parts[5]), "alpha": float(parts[6]),
                        "criterion": parts[7], "iterations": int(parts[8])}
            if not meta:
                meta = row_meta
            elif meta != row_meta:
                raise ValueError("inconsistent metadata across rows")
            cells.append({"snr_x_db": float(parts[0]), "snr_y_db": float(parts[1]),
                          "snr_z_db": float(parts[2]),
                          "spurious_rate": float(parts[9]),
                          "unidentified_rate": float(parts[10]),
                          "rate_xz": float(parts[11]), "rate_yz": float(parts[12])})
    return meta, cells


def cmd_phase_space(args, argv: list[str]) -> int:
    started = time.time()
    topology = TopologyKind(args.topology)
    noise = NoiseKind(args.noise)
    criterion = Criterion(args.criterion)
    shared = parse_grid(args.grid)
    grids = tuple(parse_grid(g) if g else shared
                  for g in (args.grid_x, args.grid_y, args.grid_z))
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "phase_space.csv")
    meta = {"topology": topology.value, "noise_kind": noise.value, "n": args.n,
            "alpha": args.alpha, "criterion": criterion.value,
            "iterations": args.iterations}

    done_cells: dict[tuple[float, float, float], dict] = {}
    if args.resume and os.path.exists(csv_path):
        try:
            old_meta, rows = load_phase_csv(csv_path)
        except ValueError as exc:
            print(f"resume conflict: {exc}", file=sys.stderr)
            return 4
        if old_meta and old_meta != meta:
            print("resume conflict: checkpoint metadata differs from flags",
                  file=sys.stderr)
            return 4
        from itertools import product
        expected = [(sx, sy, sz) for sx, sy, sz in product(*grids)]
        got = [(r["snr_x_db"], r["snr_y_db"], r["snr_z_db"]) for r in rows]
        if got != expected[:len(got)]:
            print("resume conflict: checkpoint cells do not match the grid",
                  file=sys.stderr)
            return 4
        done_cells = {(r["snr_x_db"], r["snr_y_db"], r["snr_z_db"]): r for r in rows}

    mode = "a" if done_cells else "w"
    with open(csv_path, mode, encoding="utf-8", newline="\n") as fh:
        if mode == "w":
            fh.write(PHASE_HEADER + "\n")

        def on_cell(cell: dict) -> None:
            fh.write(_phase_row(meta, cell) + "\n")
            fh.flush()

        phase_space(noise, topology, args.n, args.alpha, criterion=criterion,
                    iterations=args.iterations, grids=grids, seed=args.seed,
                    workers=args.workers, on_cell=on_cell, done_cells=done_cells)
    manifest = os.path.join(args.out, "manifest.txt")
    write_manifest(manifest, "phase-space", argv, args.seed, [csv_path],
                   started, time.time())
    print(f"wrote {csv_path}")
    return 0


def _grid_from_cells(cells: list[dict]) -> "object":
    """Rebuild a PhaseGrid from CSV rows (for rendering)."""
    from .experiments import PhaseGrid
    axes = tuple(tuple(sorted({c[k] for c in cells}))
                 for k in ("snr_x_db", "snr_y_db", "snr_z_db"))
    shape = tuple(len(a) for a in axes)
    index = {name: {v: i for i, v in enumerate(vals)}
             for name, vals in zip(("snr_x_db", "snr_y_db", "snr_z_db"), axes)}
    fields = {name: np.full(shape, np.nan) for name in
              ("spurious", "unidentified", "rate_xz", "rate_yz")}
    col = {"spurious": "spurious_rate", "unidentified": "unidentified_rate",
           "rate_xz": "rate_xz", "rate_yz": "rate_yz"}
    for c in cells:
        pos = (index["snr_x_db"][c["snr_x_db"]], index["snr_y_db"][c["snr_y_db"]],
               index["snr_z_db"][c["snr_z_db"]])
        for name in fields:
            fields[name][pos] = c[col[name]]
    return PhaseGrid(axes=axes, metadata={}, **fields)


def cmd_render(args) -> int:
    meta, cells = load_phase_csv(args.input)
    grid = _grid_from_cells(cells)
    field = {"spurious_rate": "spurious", "unidentified_rate": "unidentified",
             "rate_xz": "rate_xz", "rate_yz": "rate_yz"}[args.field]
    plane, _, _ = extract_plane(grid, args.axis, args.value, field)
    if np.any(np.isnan(plane)):
        raise ValueError("plane has missing cells (incomplete CSV)")
    write_ppm(args.out, render_plane(plane, scale=args.scale))
    print(f"wrote {args.out}")
    return 0


def _read_series_csv(path: str) -> TrivariateSample:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,x,y,z":
            raise _MalformedInput(f"{path}: expected header 't,x,y,z', got {header!r}")
        cols: list[list[float]] = [[], [], []]
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise _MalformedInput(f"{path}: row {lineno}: expected 4 fields")
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError:
                raise _MalformedInput(f"{path}: row {lineno}: non-numeric value")
            if not all(np.isfinite(v) for v in values):
                raise _MalformedInput(f"{path}: row {lineno}: non-finite value")
            for c, v in zip(cols, values):
                c.append(v)
    if len(cols[0]) < 3:
        raise _MalformedInput(f"{path}: too few rows")
    from .core import TopologyLabel
    return TrivariateSample(x=TimeSeries(np.array(cols[0])),
                            y=TimeSeries(np.array(cols[1])),
                            z=TimeSeries(np.array(cols[2])),
                            truth=TopologyLabel.null())


class _MalformedInput(ValueError):
    pass


def cmd_analyze(args) -> int:
    sample = _read_series_csv(args.input)
    config = GrangerConfig(lags=args.lags, criterion=Criterion(args.criterion),
                           significance=args.alpha)
    try:
        outcomes = link_outcomes(sample, config)
        label = infer_topology(sample, config)
        reverse = reverse_link_decisions(sample, config)
    except RankDeficient:
        print("rank-deficient design: a series is constant or duplicated; "
              "check the input columns", file=sys.stderr)
        return 3
    forward_p = {key: outcomes[key].p_value
                 for key in (BIV_XY, BIV_XZ, BIV_YZ, TRI_XZ, TRI_YZ)}
    reverse_p = {k: d.outcome.p_value for k, d in reverse.items()}
    report = {
        "topology": label.kind.value,
        "edges": sorted(e.value for e in label.edges),
        "forward_p_values": forward_p,
        "reverse_p_values": reverse_p,
        "criterion": config.criterion.value,
        "alpha": config.significance,
        "lags": config.lags,
    }
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(f"inferred topology: {report['topology']}")
        print(f"edges: {', '.join(report['edges']) or '(none)'}")
        for key, p in forward_p.items():
            print(f"  p[{key}] = {fmt(p)}")
        for key, p in reverse_p.items():
            print(f"  p[{key}] (reverse) = {fmt(p)}")
    return 0


def cmd_generate(args) -> int:
    params = tuple(float(v) for v in args.params.split(","))
    if len(params) != 3:
        raise ValueError("--params must be a comma-separated triple")
    config = GeneratorConfig(topology=TopologyKind(args.topology), length=args.n,
                             ar_coefficient=args.ar, noise_kind=NoiseKind(args.noise),
                             sigmas_or_snrs=params, burn_in=args.burn_in,
                             seed=args.seed)
    sample = generate(config)
    lines = ["t,x,y,z"]
    for t in range(len(sample.x)):
        lines.append(",".join([str(t), fmt(sample.x.values[t]),
                               fmt(sample.y.values[t]), fmt(sample.z.values[t])]))
    _write_lines(args.out, lines)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.from_manifest:
        manifest = read_manifest(args.from_manifest)
        stored = manifest.get("argv")
        if not stored:
            print("manifest has no argv entry", file=sys.stderr)
            return 2
        return main(shlex.split(stored[0]))
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "sweep-alpha":
            return cmd_sweep_alpha(args, argv)
        if args.command == "sweep-n":
            return cmd_sweep_n(args, argv)
        if args.command == "phase-space":
            return cmd_phase_space(args, argv)
        if args.command == "render":
            return cmd_render(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "generate":
            return cmd_generate(args)
        parser.print_usage(sys.stderr)
        return 2
    except (_MalformedInput, OffGrid) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
