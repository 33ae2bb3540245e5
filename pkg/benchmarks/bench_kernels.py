"""Compare the compiled tape kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--points 64] [--repeat 5]

Workload: metric jets of tower-level-2(sphere(2)) (8 real dims, 36
components) and realify(heisenberg), evaluated at seeded sample points.
"""

import argparse
import time

import numpy as np

from akmetric import catalog, generator as gen, jets
from akmetric.geometry import _tape
from akmetric.verify import sample_points


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    workloads = {
        "tower-level-2(sphere(2))": gen.tower(catalog.catalog_get("sphere(2)"), 2)[2].manifest,
        "realify(heisenberg)": gen.realify(catalog.catalog_get("heisenberg")),
    }
    print(f"backends available: {sorted(jets.BACKENDS)}  (default {jets.DEFAULT_BACKEND})")
    for name, man in workloads.items():
        tape = _tape(man)
        pts = sample_points(man, args.points, 0).astype(complex)
        print(f"\n{name}: dim={man.dim} tape_ops={len(tape.ops)} points={args.points}")
        ref = None
        for backend in sorted(jets.BACKENDS):
            out = jets.run_tape(tape, pts, backend)
            if ref is None:
                ref = out
            else:
                diff = max(float(np.max(np.abs(a - b))) for a, b in zip(out[:3], ref[:3]))
                print(f"  max |{backend} - {sorted(jets.BACKENDS)[0]}| = {diff:.2e}")
            t = timeit(lambda: jets.run_tape(tape, pts, backend), args.repeat)
            print(f"  {backend:9s} {t * 1e3:9.2f} ms  ({t / args.points * 1e6:8.1f} us/point)")


if __name__ == "__main__":
    main()
