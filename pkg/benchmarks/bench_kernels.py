"""Time the compiled and pure-numpy kernel backends on representative inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from nwckit._backend import available_backends


def cases(rng):
    x = rng.normal(size=(1, 80, 16, 16))
    w7 = rng.normal(size=(80, 7, 7))
    big = rng.normal(size=(140, 140))
    prev = big[6:134, 6:134]
    cur = big[4:132, 3:131]
    starts = np.arange(0, 128, 32, dtype=np.int64)
    frame = rng.uniform(size=(256, 256))
    vh, vw = rng.uniform(-3, 3, (2, 256, 256))
    return {
        "depthwise_conv2d 80x16x16 k=7": lambda m: m.depthwise_conv2d(x, w7),
        "block_match 128x128 B=32 d=10": lambda m: m.block_match(prev, cur, starts, starts, 32, 32, 10,
                                                                 1e-12, 1e-12),
        "advect_bilinear 256x256 x10": lambda m: m.advect_bilinear(frame, vh, vw, 10),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    names = sorted(backends)
    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        times = {}
        for n in names:
            mod = backends[n]
            times[n] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:34s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
