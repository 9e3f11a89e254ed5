"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Shapes follow one training step on a 10-metric, 1000-sample frame: each
shared MLP sees n*m rows of width 1 with 64 hidden units.
"""
import argparse
import timeit

import numpy as np

from dagrca import kernels


def cases(rng):
    rows = 10 * 1000
    x = rng.normal(size=(rows, 1))
    W1, b1 = rng.normal(size=(1, 64)), rng.normal(size=64)
    W2, b2 = rng.normal(size=(64, 2)), rng.normal(size=2)
    g = rng.normal(size=(rows, 2))
    A = rng.normal(size=(10, 10)) * 0.3
    M = np.eye(10) - A.T
    W = np.abs(rng.normal(size=(10, 10))) * (rng.random((10, 10)) < 0.3)
    s = W.sum(1, keepdims=True)
    P = np.divide(W, s, out=np.zeros_like(W), where=s > 0)
    return {
        "mlp_forward  (10000x1 -> 64 -> 2)": lambda K: K.mlp_forward(x, W1, b1, W2, b2),
        "mlp_backward (10000x1 -> 64 -> 2)": lambda K: K.mlp_backward(x, W1, b1, W2, g),
        "acyclicity   (10x10)": lambda K: K.acyclicity(A, 0.1),
        "lu_inverse   (10x10)": lambda K: K.lu_inverse(M),
        "pagerank     (10 nodes, tol 1e-10)": lambda K: K.pagerank_power(P, 0.85, 1e-10, 10000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20, help="timed calls per kernel")
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(sorted(backends))} (default: {kernels.BACKEND})")
    if "cython" not in backends:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
    names = sorted(backends, key=lambda b: b != "python")
    header = f"{'kernel':<36}" + "".join(f"{b + ' (us)':>14}" for b in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, fn in cases(np.random.default_rng(0)).items():
        times = []
        for b in names:
            K = backends[b]
            fn(K)  # warm-up
            best = min(timeit.repeat(lambda: fn(K), number=1, repeat=args.repeat))
            times.append(best * 1e6)
        line = f"{label:<36}" + "".join(f"{t:>14.1f}" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
