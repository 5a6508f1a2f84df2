"""Compiled vs numpy kernels on desk-sized and larger conflict graphs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from leobeam import kernels


def instance(n_cells, n_sats, beams, T, dur, rng):
    sub = np.tile(np.arange(beams), n_sats)
    cell, beam, start = [], [], []
    sats = rng.integers(0, n_sats, n_cells)
    for c in range(n_cells):
        for b in range(beams):
            for s in range(1, T - dur + 2):
                cell.append(c)
                beam.append(sats[c] * beams + b)
                start.append(s)
    cell, beam, start = (np.asarray(x, dtype=np.int64) for x in (cell, beam, start))
    end = start + dur - 1
    sat = beam // beams
    cs = cell * n_sats + sat
    m = n_cells * n_sats
    upper = np.triu(rng.random((m, m)) < 0.2, 1)
    conflict = (upper | upper.T).astype(np.uint8)
    return cell, beam, sub[beam], sat, start, end, cs, conflict


def timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = [n for n in ("python", "compiled") if n in kernels.BACKENDS]
    print(f"backends: {', '.join(names)}")
    print(f"{'cells':>6} {'vertices':>9} {'stage':>10} " + " ".join(f"{n:>10}" for n in names) + "  speedup")
    for n_cells in (10, 20, 40, 80):
        args_ = instance(n_cells, 6, 4, 15, 4, rng)
        times, results = {}, {}
        for n in names:
            k = kernels.BACKENDS[n]
            times[n], results[n] = timed(lambda: k.build_adjacency(*args_), args.repeat)
        adj = results[names[0]]
        for n in names[1:]:
            assert np.array_equal(results[n], adj), "backends disagree on adjacency"
        nv = len(args_[0])
        _row(n_cells, nv, "adjacency", times, names)
        order = rng.permutation(nv).astype(np.int64)
        for n in names:
            k = kernels.BACKENDS[n]
            times[n], results[n] = timed(lambda: k.greedy_mis(order, adj), args.repeat)
        for n in names[1:]:
            assert np.array_equal(results[n], results[names[0]]), "backends disagree on independent set"
        _row(n_cells, nv, "greedy_mis", times, names)


def _row(n_cells, nv, stage, times, names):
    cols = " ".join(f"{times[n] * 1e3:>8.2f}ms" for n in names)
    speed = f"  {times['python'] / times['compiled']:.1f}x" if "compiled" in times else ""
    print(f"{n_cells:>6} {nv:>9} {stage:>10} {cols}{speed}")


if __name__ == "__main__":
    main()
