"""Time the compiled and numpy kernel backends at default problem sizes (K=6, L=5).

Usage::

    python benchmarks/bench_kernels.py [--repeat N] [--pols 1|2]

Prints one line per kernel with the per-call time of each backend and the
speedup of the compiled one. The outputs of both backends are compared first.
"""
import argparse
import timeit

import numpy as np

from sixdma import _pykernels, kernels


def inputs(rng, K=6, L=5, R=1, lam=0.125):
    dirs = rng.standard_normal((K, L, 3))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    fields = np.cross(dirs, rng.standard_normal(3))
    fields /= np.linalg.norm(fields, axis=2, keepdims=True)
    prv = rng.standard_normal((K, L)) + 1j * rng.standard_normal((K, L))
    dist = rng.uniform(10, 50, K)
    c = 1e3 * (rng.standard_normal((K, R)) + 1j * rng.standard_normal((K, R)))
    X = rng.standard_normal((K, R, R)) + 1j * rng.standard_normal((K, R, R))
    P = 1e6 * X @ np.conj(np.swapaxes(X, 1, 2))
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    A = np.ascontiguousarray(Q[:, :1 + R])
    As = np.stack([np.linalg.qr(rng.standard_normal((3, 3)))[0][:, :1 + R] for _ in range(64)])
    q = rng.uniform(0, 2 * lam, 3)
    Qs = rng.uniform(0, 2 * lam, (512, 3))
    amp, ang = np.abs(prv), np.angle(prv)
    return {
        "ap_channel": (dirs, fields, prv, dist, q, A, lam),
        "ap_channel_positions": (dirs, fields, prv, dist, Qs, A, lam),
        "ap_channel_orientations": (dirs, fields, prv, dist, q, As, lam),
        "local_objective": (dirs, fields, prv, dist, c, P, q, A, lam),
        "fd_gradient": (dirs, fields, prv, dist, c, P, q, A, lam, 1e-6),
        "surrogate_eval": (dirs, amp, ang, q, lam),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--pols", type=int, choices=(1, 2), default=1)
    args = ap.parse_args(argv)
    if "compiled" not in kernels.available_backends():
        raise SystemExit("compiled extension not built; run `pip install -e . "
                         "--no-build-isolation` with Cython available")
    from sixdma import _kernels
    cases = inputs(np.random.default_rng(0), R=args.pols)
    print(f"{'kernel':<26}{'numpy us':>12}{'compiled us':>14}{'speedup':>10}")
    for name, call_args in cases.items():
        py, cy = getattr(_pykernels, name), getattr(_kernels, name)
        a, b = py(*call_args), cy(*call_args)
        for x, y in zip(a, b) if isinstance(a, tuple) else [(a, b)]:
            np.testing.assert_allclose(y, x, rtol=1e-6, atol=1e-12)
        t_py = min(timeit.repeat(lambda: py(*call_args), number=args.repeat, repeat=3))
        t_cy = min(timeit.repeat(lambda: cy(*call_args), number=args.repeat, repeat=3))
        us = 1e6 / args.repeat
        print(f"{name:<26}{t_py * us:>12.2f}{t_cy * us:>14.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
