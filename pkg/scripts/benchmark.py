#!/usr/bin/env python3
"""Compare the compiled and numpy kernel backends on ResNet-18 shapes.

The package picks the numpy/BLAS path by default; this script is the
receipt.  Run it on a new host to decide whether DEEPCHEMO_BACKEND=compiled
is worth forcing there.
"""

import argparse
import time

import numpy as np

from deepchemo import _kernels_np

try:
    from deepchemo import _kernels_cy
except ImportError:
    _kernels_cy = None

# (c_in, h, w, c_out, k, stride, pad) -- one row per distinct conv shape
# in the ResNet-18 forward pass
CONV_SHAPES = [
    (3, 224, 224, 64, 7, 2, 3),
    (64, 56, 56, 64, 3, 1, 1),
    (64, 56, 56, 128, 3, 2, 1),
    (128, 28, 28, 128, 3, 1, 1),
    (128, 28, 28, 256, 3, 2, 1),
    (256, 14, 14, 256, 3, 1, 1),
    (256, 14, 14, 512, 3, 2, 1),
    (512, 7, 7, 512, 3, 1, 1),
]


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conv(repeats):
    r = np.random.default_rng(0)
    print(f"{'conv shape':<28} {'numpy':>10} {'compiled':>10} {'ratio':>7}")
    totals = [0.0, 0.0]
    for c_in, h, w, c_out, k, s, p in CONV_SHAPES:
        inp = r.normal(size=(c_in, h, w)).astype(np.float32)
        wts = r.normal(size=(c_out, c_in, k, k)).astype(np.float32)
        bias = np.zeros(c_out, dtype=np.float32)
        t_np = time_call(lambda: _kernels_np.conv2d(inp, wts, bias, s, s, p, p),
                         repeats)
        label = f"{c_in}x{h}x{w} -> {c_out} k{k}s{s}"
        totals[0] += t_np
        if _kernels_cy is None:
            print(f"{label:<28} {t_np * 1e3:>8.2f}ms {'n/a':>10}")
            continue
        t_cy = time_call(lambda: _kernels_cy.conv2d(inp, wts, bias, s, s, p, p),
                         repeats)
        totals[1] += t_cy
        print(f"{label:<28} {t_np * 1e3:>8.2f}ms {t_cy * 1e3:>8.2f}ms "
              f"{t_cy / t_np:>6.1f}x")
    if _kernels_cy is not None:
        print(f"{'total':<28} {totals[0] * 1e3:>8.2f}ms "
              f"{totals[1] * 1e3:>8.2f}ms {totals[1] / totals[0]:>6.1f}x")


def bench_forward(repeats):
    import os
    import subprocess
    import sys
    code = (
        "import sys, time, numpy as np\n"
        "import deepchemo\n"
        "from deepchemo.archive import load_archive_file\n"
        "from deepchemo.netgraph import build_resnet18, forward\n"
        "from deepchemo.tensor import Tensor\n"
        "graph = build_resnet18(load_archive_file(sys.argv[1]))\n"
        "t = Tensor(np.random.default_rng(0).normal(size=(3, 224, 224))"
        ".astype(np.float32))\n"
        "forward(graph, t)  # warm up\n"
        f"best = min(__import__('timeit').repeat("
        f"lambda: forward(graph, t), number=1, repeat={repeats}))\n"
        "print(f'{deepchemo.BACKEND}: {best:.3f}s per 224x224 forward')\n"
    )
    archive = os.path.join(os.path.dirname(__file__), "..", "tests",
                           "fixtures", "resnet18.nnw")
    backends = ["numpy"] + (["compiled"] if _kernels_cy is not None else [])
    sys.stdout.flush()
    for backend in backends:
        env = dict(os.environ, DEEPCHEMO_BACKEND=backend)
        subprocess.run([sys.executable, "-c", code, archive], env=env,
                       check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--skip-forward", action="store_true",
                        help="kernel micro-benchmarks only")
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled backend not built; timing numpy only")
    bench_conv(args.repeats)
    if not args.skip_forward:
        print()
        bench_forward(args.repeats)


if __name__ == "__main__":
    main()
