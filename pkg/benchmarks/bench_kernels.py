"""Compare the pure-Python and compiled kernel backends.

Times the four hot kernels (softmax and layer norm, forward and backward)
on transformer-shaped inputs, then a full training step, and checks that
both backends agree to float64 roundoff.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import importlib
import os
import sys
import time

import numpy as np


def load_backend(name):
    os.environ["SCVAD_BACKEND"] = name
    for mod in [m for m in sys.modules if m.startswith("scvad")]:
        del sys.modules[mod]
    backend = importlib.import_module("scvad.backend")
    assert backend.BACKEND == name, f"{name} backend unavailable"
    return backend


def time_call(fn, repeats=200):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def kernel_cases(backend, rng):
    # shapes typical of one attention head / one layer at T=10, d=512
    x = rng.standard_normal((10, 10))
    h = rng.standard_normal((10, 512))
    gain = rng.standard_normal((1, 512))
    bias = rng.standard_normal((1, 512))
    dy = rng.standard_normal((10, 512))
    dy_small = rng.standard_normal((10, 10))

    y = backend.softmax_rows(x)
    out, xhat, invstd = backend.layer_norm_rows(h, gain, bias, 1e-5)
    return {
        "softmax_rows (10x10)": lambda: backend.softmax_rows(x),
        "softmax_backward (10x10)": lambda: backend.softmax_rows_backward(y, dy_small),
        "layer_norm_rows (10x512)": lambda: backend.layer_norm_rows(h, gain, bias, 1e-5),
        "layer_norm_backward (10x512)": lambda: backend.layer_norm_rows_backward(
            dy, xhat, invstd, gain
        ),
    }


def training_step_seconds(repeats=3):
    from scvad.feature_io import SynthConfig, generate_synthetic
    from scvad.trainer import TrainConfig, train_few_shot
    from scvad.transformer import ModelConfig

    stream = generate_synthetic(SynthConfig(dim=16, length=40, seed=0))
    mcfg = ModelConfig(feature_dim=16, model_dim=64, heads=2, layers=2, window=5, seed=0)
    tcfg = TrainConfig(n_shots=30, window=5, epochs=1, lr=0.001, seed=0)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        train_few_shot(stream, mcfg, tcfg)
        best = min(best, time.perf_counter() - start)
    return best / 25  # 25 windows per epoch


def check_agreement(py, cy, rng):
    x = rng.standard_normal((10, 10))
    h = rng.standard_normal((10, 512))
    gain = rng.standard_normal((1, 512))
    bias = rng.standard_normal((1, 512))
    np.testing.assert_allclose(py.softmax_rows(x), cy.softmax_rows(x), rtol=1e-13)
    a = py.layer_norm_rows(h, gain, bias, 1e-5)
    b = cy.layer_norm_rows(h, gain, bias, 1e-5)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-14)


def main():
    rng = np.random.default_rng(0)
    results = {}
    step_times = {}
    backends = {}
    for name in ("python", "compiled"):
        try:
            backends[name] = load_backend(name)
        except (AssertionError, ImportError) as exc:
            print(f"skipping {name} backend: {exc}")
            continue
        results[name] = {
            label: time_call(fn) for label, fn in kernel_cases(backends[name], rng).items()
        }
        step_times[name] = training_step_seconds()

    if len(backends) == 2:
        check_agreement(backends["python"], backends["compiled"], rng)
        print("backend agreement: OK (float64 roundoff)\n")

    labels = list(next(iter(results.values())))
    width = max(len(s) for s in labels + ["full training step (per window)"])
    header = f"{'kernel':<{width}}  " + "  ".join(f"{n:>12}" for n in results)
    if len(results) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label in labels:
        row = f"{label:<{width}}  " + "  ".join(
            f"{results[n][label] * 1e6:>10.2f}us" for n in results
        )
        if len(results) == 2:
            row += f"  {results['python'][label] / results['compiled'][label]:>7.2f}x"
        print(row)
    row = f"{'full training step (per window)':<{width}}  " + "  ".join(
        f"{step_times[n] * 1e3:>10.2f}ms" for n in step_times
    )
    if len(step_times) == 2:
        row += f"  {step_times['python'] / step_times['compiled']:>7.2f}x"
    print(row)


if __name__ == "__main__":
    sys.exit(main())
