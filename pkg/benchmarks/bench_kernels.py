#!/usr/bin/env python3
"""Timing comparison of the numba and numpy batch-kernel paths.

Times the raw forward and loss/gradient kernels on representative shapes
and one short end-to-end training run per path. The numba path is
JIT-compiled on first use, so a warmup call precedes every measurement.

Run:
    python3 benchmarks/bench_kernels.py [--repeats 7] [--quick]

The active default path follows QUANTMEU_DISABLE_NUMBA; this script
bypasses the dispatcher and times both implementations directly.
"""

import argparse
import statistics
import time

import numpy as np

from quantmeu import _kernels as K
from quantmeu.net import DenseNet, TrainConfig, train


def time_call(fn, repeats):
    fn()  # warmup (JIT compile, cache touch)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def kernel_case(sizes, batch, seed=0):
    rng = np.random.default_rng(seed)
    sz = np.asarray(sizes, dtype=np.int64)
    w_offs, b_offs, n_params = K.layer_offsets(sz)
    params = rng.normal(size=n_params)
    X = rng.normal(size=(batch, int(sz[0])))
    y = rng.normal(size=batch)
    tau = rng.uniform(0.01, 0.99, size=batch)
    return sz, w_offs, b_offs, params, X, y, tau


def bench_kernels(repeats):
    shapes = [((2, 64, 64, 64, 1), 256),
              ((2, 64, 64, 64, 1), 4096),
              ((2, 32, 32, 1), 256)]
    print(f"{'kernel':<10} {'net':<18} {'batch':>6} "
          f"{'numpy':>10} {'numba':>10} {'speedup':>8}")
    for sizes, batch in shapes:
        sz, w_offs, b_offs, params, X, y, tau = kernel_case(sizes, batch)
        t_np = time_call(
            lambda: K.forward_batch_numpy(params, sz, w_offs, b_offs, X),
            repeats)
        t_nb = time_call(
            lambda: K.forward_batch_numba(params, sz, w_offs, b_offs, X),
            repeats)
        print(f"{'forward':<10} {str(sizes):<18} {batch:>6} "
              f"{t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms {t_np / t_nb:>7.2f}x")
        t_np = time_call(
            lambda: K.loss_grad_batch_numpy(params, sz, w_offs, b_offs,
                                            X, y, tau), repeats)
        t_nb = time_call(
            lambda: K.loss_grad_batch_numba(params, sz, w_offs, b_offs,
                                            X, y, tau), repeats)
        print(f"{'loss_grad':<10} {str(sizes):<18} {batch:>6} "
              f"{t_np * 1e3:>8.3f}ms {t_nb * 1e3:>8.3f}ms {t_np / t_nb:>7.2f}x")


def bench_training(rows, epochs):
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=rows)
    tau = rng.uniform(0.01, 0.99, size=rows)
    y = 2.0 * x + rng.normal(scale=0.2, size=rows)
    X = np.column_stack([x, tau])
    cfg = TrainConfig(max_epochs=epochs, patience=epochs, seed=0)

    results = {}
    saved = (K.forward_batch, K.loss_grad_batch)
    try:
        for label, fwd, lgb in (
                ("numpy", K.forward_batch_numpy, K.loss_grad_batch_numpy),
                ("numba", K.forward_batch_numba, K.loss_grad_batch_numba)):
            K.forward_batch, K.loss_grad_batch = fwd, lgb
            net = DenseNet.initialized((2, 64, 64, 64, 1), seed=1)
            train(net, X[:512], y[:512], tau[:512],
                  TrainConfig(max_epochs=1, patience=1, seed=0))  # warmup
            t0 = time.perf_counter()
            trained, hist = train(DenseNet.initialized((2, 64, 64, 64, 1),
                                                       seed=1),
                                  X, y, tau, cfg)
            results[label] = (time.perf_counter() - t0, trained)
    finally:
        K.forward_batch, K.loss_grad_batch = saved

    t_np, net_np = results["numpy"]
    t_nb, net_nb = results["numba"]
    agree = np.max(np.abs(net_np.params - net_nb.params))
    print(f"\ntrain {rows} rows x {epochs} epochs, net (2,64,64,64,1):")
    print(f"  numpy  {t_np:8.2f}s")
    print(f"  numba  {t_nb:8.2f}s   speedup {t_np / t_nb:.2f}x")
    print(f"  max |param difference| between paths: {agree:.3g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7,
                    help="timing repetitions per case (median reported)")
    ap.add_argument("--quick", action="store_true",
                    help="smaller end-to-end training benchmark")
    args = ap.parse_args()

    if not K.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    print(f"active dispatch path: {K.backend()}")
    bench_kernels(args.repeats)
    if args.quick:
        bench_training(rows=20000, epochs=3)
    else:
        bench_training(rows=50000, epochs=10)


if __name__ == "__main__":
    main()
