"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 3000] [--k 3] [--resolution 0.01] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from crossloss import _backend
from crossloss.blend import simplex_lattice


def problem(n, k, resolution, seed=7):
    rng = np.random.default_rng(seed)
    act = rng.uniform(100, 1e5, n)
    preds = np.ascontiguousarray(
        np.stack([np.abs(act * (1 + rng.normal(0, 0.1, n))) for _ in range(k)]))
    m = round(1 / resolution)
    weights = np.ascontiguousarray(simplex_lattice(k, m) / m)
    group = (np.arange(n) % 50).astype(np.intp)
    totals = np.array([act[group == g].sum() for g in range(50)])
    return preds, act, weights, group, totals


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3000)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--resolution", type=float, default=0.01)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    preds, act, weights, group, totals = problem(args.n, args.k, args.resolution)
    empty_g, empty_t = np.zeros(0, np.intp), np.zeros(0)
    cases = {
        "total_loss": lambda kern: kern.total_loss(preds[0], act, 2.0, -1.0),
        "blend_losses": lambda kern: kern.blend_losses(
            preds, act, weights, 2.0, -1.0, empty_g, empty_t, False, 1),
        "blend_losses+controls": lambda kern: kern.blend_losses(
            preds, act, weights, 2.0, -1.0, group, totals, True, 1),
        "blend_losses+controls (all threads)": lambda kern: kern.blend_losses(
            preds, act, weights, 2.0, -1.0, group, totals, True, 0),
    }
    backends = _backend.available()
    print(f"n={args.n} k={args.k} lattice points={len(weights)} backends={backends}")
    print(f"{'case':38s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for label, fn in cases.items():
        times, results = [], []
        for b in backends:
            kern = _backend.load(b)
            results.append(fn(kern))
            times.append(min(timeit.repeat(lambda: fn(kern), number=1, repeat=args.repeat)))
        if len(results) == 2:
            np.testing.assert_allclose(results[0], results[1], rtol=1e-12)
        speed = f"{times[-1] / times[0]:10.1f}x" if len(times) == 2 else ""
        print(f"{label:38s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
