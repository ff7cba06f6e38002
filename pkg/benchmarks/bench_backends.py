#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against its pure-Python twin.

The two backends are bit-identical by construction, so this is purely a
speed comparison on the hot paths: per-pixel image kernels, the synthetic
degradation stages, and MLP batch gradients.

    python3 benchmarks/bench_backends.py [--size 128] [--repeat 3]
"""

import argparse
import math
import random
import time
from array import array

from pinf._backend import available_backends, get_backend


def timeit(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(backend, size):
    rng = random.Random(1)
    w = h = size
    pix = array("d", [rng.random() for _ in range(3 * w * h)])
    gray = array("d", bytes(8 * w * h))
    backend.luminance(pix, w, h, gray)
    out_img = array("d", bytes(8 * 3 * w * h))
    sob = array("d", bytes(8 * 13))
    means = array("d", bytes(8 * 64))
    variances = array("d", bytes(8 * 64))

    sigma = 3.2
    radius = int(math.ceil(3.0 * sigma))
    raw = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-radius, radius + 1)]
    total = sum(raw)
    wts = array("d", [v / total for v in raw])
    ca, sa = math.cos(math.radians(25.0)), math.sin(math.radians(25.0))

    nin, nh, nout, nb = 29, 64, 7, 128
    w1 = array("d", [rng.gauss(0, 0.3) for _ in range(nin * nh)])
    b1 = array("d", bytes(8 * nh))
    w2 = array("d", [rng.gauss(0, 0.3) for _ in range(nh * nout)])
    b2 = array("d", bytes(8 * nout))
    xs = array("d", [rng.gauss(0, 1) for _ in range(nb * nin)])
    ys = array("d", [rng.gauss(0, 1) for _ in range(nb * nout)])
    tw = array("d", [1.0 / nout] * nout)
    grads = [array("d", bytes(8 * nin * nh)), array("d", bytes(8 * nh)),
             array("d", bytes(8 * nh * nout)), array("d", bytes(8 * nout))]
    scratch = [array("d", bytes(8 * nh)), array("d", bytes(8 * nout)),
               array("d", bytes(8 * nout)), array("d", bytes(8 * nh))]

    def zero_grads():
        for g in grads:
            for i in range(len(g)):
                g[i] = 0.0

    def loss_grad():
        zero_grads()
        backend.mlp_loss_grad(w1, b1, w2, b2, nin, nh, nout, xs, ys, nb, tw,
                              *grads, *scratch)

    return {
        "luminance": lambda: backend.luminance(pix, w, h, gray),
        "laplacian_variance": lambda: backend.laplacian_variance(gray, w, h),
        "sobel_stats": lambda: backend.sobel_stats(gray, w, h, 19, 19, sob),
        "block_stats_8x8": lambda: backend.block_stats(gray, w, h, 8, means, variances),
        "gaussian_blur(s=3.2)": lambda: (
            backend.blur_h(pix, w, h, wts, radius, out_img),
            backend.blur_v(out_img, w, h, wts, radius, out_img),
        ),
        "rotate_bilinear": lambda: backend.rotate_bilinear(pix, w, h, ca, sa, out_img),
        "mlp_loss_grad(b=128)": loss_grad,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=128, help="image side length")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)} (image {args.size}x{args.size})\n")
    timings = {}
    for name in backends:
        backend = get_backend(name)
        for case, fn in build_cases(backend, args.size).items():
            timings.setdefault(case, {})[name] = timeit(fn, args.repeat)

    width = max(len(c) for c in timings)
    header = f"{'kernel':{width}s}" + "".join(f" {b:>12s}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9s}"
    print(header)
    for case, by_backend in timings.items():
        row = f"{case:{width}s}"
        for b in backends:
            row += f" {by_backend[b] * 1e3:10.3f}ms"
        if len(backends) == 2:
            row += f" {by_backend['pure'] / by_backend['compiled']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
