"""Compiled vs numpy kernels, per kernel and end to end.

    python benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best of ``--repeat`` runs. The end-to-end row times one
table1.cfg cell (n = 10^4, 10^4 iterations) with the backend swapped in place.
"""

import argparse
import time

import numpy as np

from factorld import Deterministic, FactorModelSpec, kernels, pareto
from factorld import _rng
from factorld.cond_mc import estimate_tail_cmc


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(size):
    gen = _rng.stream(0, 0, _rng.IDIO)
    bits = _rng.raw_bits(gen, size)
    values = np.random.default_rng(0).standard_normal(size)
    fixed = np.arange(0, size + 1, 10_000, dtype=np.int64)
    counts = np.random.default_rng(1).poisson(100, size // 100)
    ragged = np.concatenate(([0], np.cumsum(counts)))
    ragged = ragged[ragged <= size].astype(np.int64)
    return [
        ("pareto_segment_stats p=1", "pareto_segment_stats", (bits, fixed, 3.0, 1.0, 1.0)),
        ("pareto_segment_stats p=0.4", "pareto_segment_stats", (bits, fixed, 3.0, 1.0, 0.4)),
        ("segment_stats fixed", "segment_stats", (values, fixed)),
        ("segment_stats ragged", "segment_stats", (values, ragged)),
        ("path_stats ragged", "path_stats", (values, ragged)),
    ]


def end_to_end(backend):
    spec = FactorModelSpec(10, pareto(5), pareto(3), Deterministic([1.0] * 10))
    saved = kernels._impl
    kernels._impl = kernels.get_backend(backend)
    try:
        return estimate_tail_cmc(spec, 10_000, 1e8, iters=10_000, seed=0).value
    finally:
        kernels._impl = saved


def main():
    ap = argparse.ArgumentParser(description="compare kernel backends")
    ap.add_argument("--size", type=int, default=10_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy backend is available")
    print(f"{'case':30s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, name, call_args in kernel_cases(args.size):
        ts = [best_of(lambda: getattr(kernels.get_backend(b), name)(*call_args), args.repeat) for b in backends]
        line = f"{label:30s}" + "".join(f"{t:11.4f}s" for t in ts)
        if len(ts) > 1:
            line += f"{ts[0] / ts[1]:11.2f}x"
        print(line)
    ts, vals = [], []
    for b in backends:
        t0 = time.perf_counter()
        vals.append(end_to_end(b))
        ts.append(time.perf_counter() - t0)
    line = f"{'cmc n=1e4 iters=1e4':30s}" + "".join(f"{t:11.4f}s" for t in ts)
    if len(ts) > 1:
        line += f"{ts[0] / ts[1]:11.2f}x"
    print(line)
    if len(vals) > 1:
        print(f"end-to-end estimates: {vals[0]:.10e} vs {vals[1]:.10e} (rel diff {abs(vals[0] / vals[1] - 1):.1e})")


if __name__ == "__main__":
    main()
