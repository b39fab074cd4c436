#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallbacks.

Runs every hot kernel on representative problem sizes with both backends and
prints a timing table. The numba kernels are warmed up first so compilation
is not measured.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from patchlr import kernels_numpy as knp

try:
    from patchlr import kernels_numba as knb
except ImportError:
    knb = None


def _best_of(repeat, fn, *args):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cases():
    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.normal(size=(4096, 49)))
    yield "knn_search 4096x49 K=20", ("knn_search", (pts, 20))
    blocks = rng.normal(size=(4096, 49, 21))
    yield "svt_batch 4096 blocks 49x21", ("svt_batch", (blocks, 3.0))
    yield "svd_values_batch 4096 blocks", ("svd_values_batch", (blocks,))
    ids = rng.integers(0, 4096, size=4096 * 21)
    contrib = rng.normal(size=(4096 * 21, 49))
    yield "scatter_stack 86k rows", ("scatter_stack", (ids, contrib, 4096))
    nnz = 400_000
    indptr = np.linspace(0, nnz, 3841).astype(np.int64)
    indices = rng.integers(0, 4096, size=nnz)
    data = rng.random(nnz)
    x = rng.random(4096)
    y = rng.random(3840)
    yield "spmv_csr 3840x4096 400k nnz", ("spmv_csr", (indptr, indices, data, x, 3840))
    yield "spmv_csr_t same", ("spmv_csr_t", (indptr, indices, data, y, 3840, 4096))

    def trace_many(mod):
        acc = 0
        for ang in np.linspace(0.0, 2 * np.pi, 256, endpoint=False):
            src = 128.0 * np.array([np.cos(ang), np.sin(ang)])
            det = -src
            pix, _ = mod.siddon_ray(src[0], src[1], det[0], det[1], 64)
            acc += pix.size
        return acc

    yield "siddon_ray 256 rays n=64", ("__siddon__", trace_many)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if knb is None:
        print("numba not importable: benchmarking the numpy backend only")
    print(f"{'kernel':<34}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for label, (name, payload) in _cases():
        if name == "__siddon__":
            t_np = _best_of(args.repeat, payload, knp)
            t_nb = _best_of(args.repeat, payload, knb) if knb else None
        else:
            fn_np = getattr(knp, name)
            t_np = _best_of(args.repeat, fn_np, *payload)
            t_nb = None
            if knb is not None:
                fn_nb = getattr(knb, name)
                fn_nb(*payload)  # warm-up / compile
                t_nb = _best_of(args.repeat, fn_nb, *payload)
        if t_nb is None:
            print(f"{label:<34}{t_np * 1e3:>10.1f}ms{'-':>12}{'-':>10}")
        else:
            print(
                f"{label:<34}{t_np * 1e3:>10.1f}ms{t_nb * 1e3:>10.1f}ms"
                f"{t_np / t_nb:>9.1f}x"
            )


if __name__ == "__main__":
    main()
