"""Throughput comparison: compiled int8 kernel vs the NumPy fallback.

Builds a random default-architecture quantized model, runs batched
inference through both backends, verifies the outputs are bit-identical,
and reports clips/second for each.

Usage: python benchmarks/bench_int_kernel.py [--clips N] [--repeats K]
"""

import argparse
import time

import numpy as np

from esad.features import NormStats
from esad.network import init_model
from esad.quant import calibrate, quantize_weights, quantize_input


def build_model(seed=0):
    model = init_model(seed)
    model.norm_stats = NormStats(np.zeros(416), np.ones(416))
    rng = np.random.default_rng(seed)
    rep = rng.normal(size=(500, 416))
    return quantize_weights(model, calibrate(model, rep)), rep


def run_backend(impl, qmodel, q_in, repeats):
    best = np.inf
    codes = None
    for _ in range(repeats):
        start = time.perf_counter()
        q = q_in
        for layer in qmodel.layers:
            q = impl.quantized_linear(
                q, layer.weights, layer.bias, layer.in_zp,
                layer.mantissa, layer.shift, layer.out_zp, layer.relu,
            )
        best = min(best, time.perf_counter() - start)
        codes = q[:, 0]
    return best, codes


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--clips", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    from esad.kernels import py_fallback

    backends = [("python ", py_fallback)]
    try:
        from esad.kernels import _intcore

        backends.insert(0, ("compiled", _intcore))
    except ImportError:
        print("compiled kernel not built; benchmarking the fallback only")

    qmodel, _ = build_model()
    rng = np.random.default_rng(1)
    x = rng.normal(size=(args.clips, 416))
    q_in = quantize_input(qmodel, x)

    macs_per_clip = sum(l.weights.size for l in qmodel.layers)
    print(f"batch of {args.clips} clips, {macs_per_clip} MACs per clip, "
          f"best of {args.repeats} runs\n")
    print(f"{'backend':<10}{'seconds':>10}{'clips/s':>14}{'MMAC/s':>12}")
    results = {}
    for name, impl in backends:
        seconds, codes = run_backend(impl, qmodel, q_in, args.repeats)
        results[name] = codes
        print(f"{name:<10}{seconds:>10.4f}{args.clips / seconds:>14.0f}"
              f"{args.clips * macs_per_clip / seconds / 1e6:>12.1f}")

    if len(results) == 2:
        a, b = results.values()
        match = "bit-identical" if np.array_equal(a, b) else "MISMATCH"
        print(f"\nbackend outputs: {match}")


if __name__ == "__main__":
    main()
