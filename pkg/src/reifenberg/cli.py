"""Command line entry point: ``reifenberg <verb> ...`` (also ``python3 -m reifenberg``).

Exit codes: 0 success, 1 failed checks, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import generators as gen
from .flatness import DEFAULT_DELTA_GRID, PROPERTY_IDS, PROPERTY_NAMES, classify, flatness_profile
from .geometry import InputError, ScaleLadder
from .harness import TableConfig, run_pipeline, verify_table
from .io import dumps, read_cloud, write_cloud, write_json
from .measure import eta, measure_compare, minkowski_dims, slab_covering_constant

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs, raw_json):
    params = json.loads(raw_json) if raw_json else {}
    for item in pairs or ():
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = _value(value.strip())
    return params


def _floats(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}")


def _out_path(args, name: str) -> Path:
    path = Path(args.out) if getattr(args, "out", None) else Path(name)
    if args.out_dir and not path.is_absolute():
        path = Path(args.out_dir) / path
    return path


def _emit(args, payload, text: str) -> None:
    print(dumps(payload) if args.json else text, end="" if args.json else "\n")


def cmd_generate(args) -> int:
    spec = gen.GeneratorSpec(args.kind, _params(args.param, args.params))
    try:
        cloud = spec.build()
    except TypeError as exc:
        raise InputError(f"bad parameters for {args.kind}: {exc}") from exc
    path = write_cloud(cloud, _out_path(args, "cloud.csv"))
    write_json({"spec": spec, "points": len(cloud), "resolution": cloud.resolution, "label": cloud.label},
               path.with_name(path.name + ".json"))
    _emit(args, {"cloud": str(path), "points": len(cloud)}, f"wrote {len(cloud)} points to {path}")
    return EXIT_OK


def cmd_flatness(args) -> int:
    cloud = read_cloud(args.input)
    ladder = ScaleLadder.parse(args.ladder)
    grid = _floats(args.delta_grid) if args.delta_grid else DEFAULT_DELTA_GRID
    verdict = classify(cloud, args.j, grid, ladder, base_sample=args.base_sample, seed=args.seed,
                       threads=args.threads)
    profiles = [flatness_profile(cloud, y, ladder, args.j, args.sided) for y in verdict.base_points]
    report = {"ladder": ladder, "sided": args.sided, "profiles": profiles, "verdict": verdict}
    path = write_json(report, _out_path(args, "flatness.json"))
    lines = [f"{'(' + p + ') ' + PROPERTY_NAMES[p]:<12} critical {verdict.critical[p]:.4g}  "
             f"{'member' if verdict.member(p) else '-'}" for p in PROPERTY_IDS]
    lines.append(f"report: {path}")
    _emit(args, {"report": str(path), "verdict": verdict}, "\n".join(lines))
    return EXIT_OK


def cmd_dims(args) -> int:
    cloud = read_cloud(args.input)
    scales = ScaleLadder.parse(args.ladder).radii
    est = minkowski_dims(cloud, scales, window=args.window, shifts=args.shifts, seed=args.seed)
    path = write_json(est, _out_path(args, "dims.json"))
    if args.emit_loglog:
        np.savetxt(args.emit_loglog, est.loglog(), delimiter=",", header="log_inv_eps,log_count",
                   comments="", fmt="%.17g")
    _emit(args, est, f"slope {est.slope:.4f}  lower {est.lower_est:.4f}  upper {est.upper_est:.4f}\nreport: {path}")
    return EXIT_OK


def cmd_measure(args) -> int:
    cloud = read_cloud(args.input)
    rep = measure_compare(cloud, args.j, args.scale, packing_mode=args.mode)
    path = write_json(rep, _out_path(args, "measure.json"))
    _emit(args, rep, f"hausdorff {rep.hausdorff_pre:.5g}  packing {rep.packing_pre:.5g}  ratio {rep.ratio:.4f}\n"
                     f"report: {path}")
    return EXIT_OK


def cmd_eta(args) -> int:
    q, c = None, args.C
    if c is None and 0 < args.delta <= 1 / 8:
        q, c = slab_covering_constant(args.n, args.j, args.delta)
    # above 1/8 the constant plays no role
    value = eta(args.delta, 1.0 if c is None else c, args.n, args.j)
    payload = {"delta": args.delta, "n": args.n, "j": args.j, "Q": q, "C": c, "eta": value}
    shown = "n/a" if c is None else f"{c:.6g}"
    _emit(args, payload, f"eta({args.delta:g}) = {value:.6g}  (C = {shown})")
    return EXIT_OK


def cmd_verify_table(args) -> int:
    cfg = TableConfig.from_file(args.config) if args.config else TableConfig()
    cfg.seed = args.seed
    cfg.threads = args.threads
    out = Path(args.out_dir) if args.out_dir else Path("table_out")
    report = verify_table(cfg, out_dir=out)
    _emit(args, report, report.render() + f"\nreport: {out / 'table_report.json'}")
    return report.exit_code


def cmd_pipeline(args) -> int:
    out = Path(args.out_dir) if args.out_dir else Path("pipeline_out")
    try:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read pipeline spec: {exc}") from exc
    spec.setdefault("seed", args.seed)
    manifest = run_pipeline(spec, out)
    _emit(args, manifest, f"{json.dumps(manifest['summary'], sort_keys=True)}\nmanifest: {out / 'manifest.json'}")
    return EXIT_OK


def _global_flags(parser, suppress: bool) -> None:
    # after the verb the flags default to SUPPRESS so they do not clobber values given before it
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--out-dir", default=d(None), help="directory for outputs")
    parser.add_argument("--threads", type=int, default=d(1))
    parser.add_argument("--json", action="store_true", default=d(False), help="print the JSON report to stdout")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    parser = argparse.ArgumentParser(prog="reifenberg", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a generated point cloud")
    p.add_argument("--kind", required=True, choices=sorted(gen.GENERATORS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--params", help="JSON object of generator parameters")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("flatness", parents=[common], help="flatness profiles and the twelve verdicts")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--ladder", required=True, help="rho_max:ratio:count")
    p.add_argument("--sided", choices=("one", "two"), default="one")
    p.add_argument("--delta-grid", help="comma-separated deltas")
    p.add_argument("--base-sample", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_flatness)

    p = sub.add_parser("dims", parents=[common], help="box-counting dimension estimates")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ladder", required=True, help="eps_max:ratio:count")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--shifts", type=int, default=0)
    p.add_argument("--emit-loglog", metavar="CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("measure", parents=[common], help="Hausdorff and packing pre-measures at one scale")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--mode", choices=("fixed", "variable"), default="fixed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("eta", parents=[common], help="dimension excess bound for a flatness level")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--C", type=float, default=None, help="covering constant (default: slab cover)")
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("verify-table", parents=[common], help="grade the classification table")
    p.add_argument("--config", help="key=value or JSON config")
    p.set_defaults(func=cmd_verify_table)

    p = sub.add_parser("pipeline", parents=[common], help="generate, classify, measure from a spec file")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
