"""Command-line front end: ``wlra gen | solve | bench | check``.

Exit codes: 0 success, 2 bad input (parse or usage), 3 infeasible
generator spec, 4 solver failure.
"""
import argparse
import csv
import dataclasses
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from . import altmin, backend, datagen, diagnostics, mmio
from .errors import InfeasibleGamma, ParseError, SolverError, WlraError
from .instance import GroundTruth, WlraInstance
from .linalg import frobenius

SCHEMA = 1
SEED_POLICY = (
    "philox; random init: SeedSequence(seed, spawn_key=(0,)), redraws (0, attempt); "
    "row sketch: SeedSequence(seed, spawn_key=(1, iteration, side, row, attempt)); "
    "datagen: SeedSequence(seed)"
)
EXIT_PARSE, EXIT_INFEASIBLE, EXIT_SOLVER = 2, 3, 4
BENCH_COLUMNS = ("n", "k", "repeats", "iters", "backend", "mode", "median_ms_per_iter")


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _load_instance(args):
    """Read M and W (plus ground truth files when present) from the input."""
    src = Path(args.input) if args.input else None
    m_path = Path(args.m) if args.m else (src / "M.mtx" if src else None)
    w_path = Path(args.w) if args.w else (src / "W.mtx" if src else None)
    if m_path is None:
        raise ParseError("no input: give --input DIR or --m FILE")
    m = mmio.read_matrix(m_path)
    w = mmio.read_matrix(w_path) if w_path is not None and w_path.exists() else np.ones_like(m)
    if w.shape != m.shape:
        raise ParseError(f"W shape {w.shape} differs from M shape {m.shape}", str(w_path))
    if (w < 0).any():
        raise ParseError("W has negative entries", str(w_path))
    if m.shape[0] != m.shape[1]:
        raise ParseError(f"M must be square, got {m.shape}", str(m_path))
    k = args.k
    gt = None
    manifest = {}
    if src is not None:
        if (src / "manifest.json").exists():
            manifest = mmio.read_json(src / "manifest.json")
        names = ("U.mtx", "sigma.mtx", "V.mtx")
        if all((src / f).exists() for f in names):
            u, sigma, v = (mmio.read_matrix(src / f) for f in names)
            noise = mmio.read_matrix(src / "N.mtx") if (src / "N.mtx").exists() else None
            gt = GroundTruth(u, sigma.ravel(), v, noise)
    if k is None:
        k = manifest.get("spec", {}).get("k") or (gt.u.shape[1] if gt is not None else None)
    if k is None:
        raise ParseError("rank unknown: pass --k")
    return WlraInstance(m, w, int(k), gt), manifest


def _check_outputs(out_paths, in_paths):
    ins = {Path(p).resolve() for p in in_paths if p}
    outs = [Path(p).resolve() for p in out_paths]
    if len(set(outs)) != len(outs) or ins & set(outs):
        raise ValueError("input and output paths must be distinct")


def cmd_gen(args):
    spec = datagen.GenSpec(args.n, args.k, args.tau, args.gamma, args.noise, args.weights, args.seed)
    inst = datagen.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gt = inst.ground_truth
    mmio.write_matrix(out / "M.mtx", inst.m)
    mmio.write_matrix(out / "W.mtx", inst.w)
    mmio.write_matrix(out / "U.mtx", gt.u)
    mmio.write_matrix(out / "V.mtx", gt.v)
    mmio.write_matrix(out / "sigma.mtx", gt.sigma)
    mmio.write_matrix(out / "N.mtx", gt.n_noise)
    report = diagnostics.check_assumptions(inst)
    mmio.write_json(out / "manifest.json", {
        "schema": SCHEMA,
        "command": "gen",
        "spec": dataclasses.asdict(spec),
        "seed": args.seed,
        "seed_policy": SEED_POLICY,
        "report": report.to_dict(),
        "ground_truth_residual": frobenius(inst.m - gt.m_star()),
        "files": ["M.mtx", "W.mtx", "U.mtx", "V.mtx", "sigma.mtx", "N.mtx"],
    })
    return 0


def _solve_config(args, k):
    return altmin.SolveConfig(
        k=k, eps=args.eps, t_override=args.t, eps_sk=args.eps_sk, delta_sk=args.delta_sk,
        init=args.init, mu=args.mu, seed=args.seed, exact_mode=args.exact,
        early_stop_tol=args.early_stop, clip_policy=args.clip_policy,
        regression_mode=args.regression_mode,
    )


def _trace_dicts(trace, timing):
    return [
        {"iter": r.iteration, "residual_w": r.residual_w, "dist_x": r.dist_x,
         "dist_y": r.dist_y, "clipped_x": r.clipped_x, "clipped_y": r.clipped_y,
         "millis": r.millis if timing else 0.0}
        for r in trace
    ]


def cmd_solve(args):
    out = Path(args.out)
    inst, _ = _load_instance(args)
    cfg = _solve_config(args, inst.k)
    trace_name = "trace.csv" if args.format == "csv" else "trace.json"
    _check_outputs([out / trace_name, out / "M_tilde.mtx", out / "result.json"],
                   [args.m, args.w] + ([Path(args.input) / "M.mtx"] if args.input else []))
    res = altmin.solve(inst, cfg)
    out.mkdir(parents=True, exist_ok=True)
    timing = not args.no_timing
    if args.format == "csv":
        mmio.write_trace(out / trace_name, res.trace, timing=timing)
    else:
        mmio.write_json(out / trace_name, _trace_dicts(res.trace, timing))
    mmio.write_matrix(out / "M_tilde.mtx", res.m_tilde)
    resolved = cfg.resolved(inst.n)
    mmio.write_json(out / "result.json", {
        "schema": SCHEMA,
        "command": "solve",
        "seed": args.seed,
        "seed_policy": SEED_POLICY,
        "config": dataclasses.asdict(resolved),
        "iterations": len(res.trace),
        "final_residual_w": res.trace[-1].residual_w,
        "backend": backend.name() if timing else None,
    })
    return 0


def cmd_check(args):
    inst, _ = _load_instance(args)
    report = diagnostics.check_assumptions(inst)
    text = report.to_json() + "\n" if args.format == "json" else report.to_text()
    if args.out:
        _check_outputs([args.out], [args.m, args.w])
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def bench_cell(n, k, repeats, iters, exact=False, seed=0, gamma=1e-3, noise=1e-3):
    """Median per-iteration wall time (ms) of the alternating solve."""
    inst = datagen.generate(datagen.GenSpec(n, k, 2.0, gamma, noise, "gap_rank1", seed))
    # mu = n/k makes clipping a no-op and skips the SVD estimate of mu
    cfg = altmin.SolveConfig(k=k, t_override=iters, seed=seed, exact_mode=exact, mu=n / k)
    # one discarded iteration warms caches and allocators
    altmin.solve(inst, dataclasses.replace(cfg, t_override=1))
    samples = []
    for _ in range(repeats):
        res = altmin.solve(inst, cfg)
        samples.extend(r.millis for r in res.trace)
    return statistics.median(samples)


def cmd_bench(args):
    os.environ["WLRA_THREADS"] = str(args.threads)
    which = args.backend or backend.name()
    rows = []
    with backend.use(which):
        for n in args.n:
            for k in args.k:
                ms = bench_cell(n, k, args.repeats, args.iters, args.exact, args.seed)
                rows.append((n, k, args.repeats, args.iters, which,
                             "exact" if args.exact else "fast", format(ms, ".6g")))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(BENCH_COLUMNS)
        out.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def _add_input(p):
    p.add_argument("--input", help="directory holding M.mtx, W.mtx and optional ground truth")
    p.add_argument("--m", help="observed matrix file (overrides --input)")
    p.add_argument("--w", help="weight matrix file (default: all ones)")
    p.add_argument("--k", type=int, help="target rank (default: from the manifest)")


def build_parser():
    ap = argparse.ArgumentParser(prog="wlra", description="Weighted low-rank approximation.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--tau", type=float, default=1.0)
    g.add_argument("--gamma", type=float, default=0.0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--weights", choices=datagen.WEIGHT_MODELS, default="gap_rank1")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run the alternating minimization")
    _add_input(s)
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--t", type=int, help="iteration count override")
    s.add_argument("--eps-sk", type=float)
    s.add_argument("--delta-sk", type=float)
    s.add_argument("--init", choices=("random", "svd"), default="random")
    s.add_argument("--mu", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exact", action="store_true", help="exact per-row normal equations")
    s.add_argument("--early-stop", type=float, default=0.0)
    s.add_argument("--clip-policy", choices=altmin.CLIP_POLICIES, default="standard")
    s.add_argument("--regression-mode", choices=("high", "low"), default="high")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--no-timing", action="store_true",
                   help="write zero timings so output files are reproducible")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="time iterations over an (n, k) grid")
    b.add_argument("--n", type=_int_list, default=[128, 256, 512])
    b.add_argument("--k", type=_int_list, default=[4])
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--iters", type=int, default=3)
    b.add_argument("--backend", choices=backend.available())
    b.add_argument("--exact", action="store_true")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="CSV file (default: stdout)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check", help="report the weight and ground-truth assumptions")
    _add_input(c)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--out", help="report file (default: stdout)")
    c.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"wlra: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleGamma as exc:
        print(f"wlra: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"wlra: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (WlraError, ValueError) as exc:
        print(f"wlra: invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
