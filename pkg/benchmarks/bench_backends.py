"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_backends.py [--n 512] [--k 8] [--repeats 5] [--out FILE]

Prints one CSV row per (kernel, backend) with the median wall time and
the speedup of the compiled backend over the fallback.
"""
import argparse
import csv
import statistics
import sys
import time

import numpy as np

from wlra import backend, datagen
from wlra.altmin import SolveConfig, solve
from wlra.sketch import SrhtSketch, next_pow2


def _median_ms(fn, repeats):
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1e3)
    return statistics.median(times)


def cases(n, k, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, k))
    b = rng.standard_normal(n)
    x = rng.standard_normal((next_pow2(n), k + 1))
    sk = SrhtSketch.draw(n, n // 2, seed)
    sub = 64
    y = np.linalg.qr(rng.standard_normal((n, k)))[0]
    w = rng.random((sub, n)) + 0.1
    sw, swm = np.sqrt(w), np.sqrt(w) * rng.standard_normal((sub, n))
    rows = np.arange(sub, dtype=np.int64)
    inst = datagen.generate(datagen.GenSpec(min(n, 256), min(k, 4), 2.0, 1e-3, 1e-3, "gap_rank1", seed))
    cfg = SolveConfig(k=inst.k, t_override=2, mu=inst.n / inst.k)

    def fwht():
        backend.current().fwht_inplace(x.copy())

    def qr():
        backend.current().householder_qr(a)

    def hp_identity():
        backend.current().hp_solve(a, b, 1e-10, 80)

    def hp_sketched():
        backend.current().hp_solve(a, b, 1e-10, 80, sk.row_indices, sk.signs, sk.n_pad)

    def rows_identity():
        backend.current().solve_rows(swm, y, sw, rows, 1e-10, 80)

    def altmin_iteration():
        solve(inst, cfg)

    return {
        "fwht": fwht,
        "householder_qr": qr,
        "hp_solve_identity": hp_identity,
        "hp_solve_srht": hp_sketched,
        f"solve_rows_{sub}": rows_identity,
        "altmin_2_iters": altmin_iteration,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--out", help="CSV file (default: stdout)")
    args = ap.parse_args(argv)

    have = backend.available()
    if "compiled" not in have:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    table = cases(args.n, args.k)
    rows = []
    for name, fn in table.items():
        ms = {}
        for which in have:
            with backend.use(which):
                ms[which] = _median_ms(fn, args.repeats)
        speedup = ms["python"] / ms["compiled"] if "compiled" in ms else float("nan")
        for which in have:
            rows.append((name, which, args.n, args.k, f"{ms[which]:.4g}", f"{speedup:.3g}"))

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(("kernel", "backend", "n", "k", "median_ms", "compiled_speedup"))
        out.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
