"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N] [--steps N]

Both versions of each kernel are called directly, so the comparison does
not depend on GEOPHASE_NO_NUMBA. Compilation happens in a warm-up call that
is not timed.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from geophase import kernels
from geophase.models import LaserModel


def jacobi_case(batch: int, n: int):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
    mats = np.ascontiguousarray(0.5 * (a + np.conj(np.swapaxes(a, 1, 2))))
    thresh = 1e-14 * np.linalg.norm(mats, axis=(1, 2))
    return (mats, thresh, 100)


def transport_case(points: int, n: int):
    t = np.linspace(0.0, 2 * np.pi, points)
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    phases = np.exp(1j * np.outer(t, np.arange(1, n + 1)))
    return (np.ascontiguousarray(q[None, :, :] * phases[:, None, :]),)


def rk4_case(steps: int):
    m = LaserModel(0.5, 1.0, 500.0, rate=0.005, p=0.5)
    h = m.T / steps
    ts = np.arange(2 * steps + 1) * (0.5 * h)
    hs, ds = m.lab_generator().sample(ts)
    hs, ds = np.ascontiguousarray(hs), np.ascontiguousarray(ds)
    rec = np.array([steps], dtype=np.int64)
    return (hs, ds, np.asarray(m.rho0(), dtype=np.complex128), h, steps, rec, 1e-8)


def bench(name, nb, np_fn, args, repeat):
    nb(*args)  # compile
    t_nb = min(timeit.repeat(lambda: nb(*args), number=1, repeat=repeat))
    t_np = min(timeit.repeat(lambda: np_fn(*args), number=1, repeat=repeat))
    print(f"{name:<28} numba {t_nb * 1e3:10.2f} ms   numpy {t_np * 1e3:10.2f} ms   speedup {t_np / t_nb:7.1f}x")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--steps", type=int, default=20_000, help="RK4 steps")
    args = p.parse_args(argv)
    bench("jacobi_batch 2000 x 2x2", kernels.jacobi_batch_nb, kernels.jacobi_batch_np, jacobi_case(2000, 2),
          args.repeat)
    bench("jacobi_batch 200 x 8x8", kernels.jacobi_batch_nb, kernels.jacobi_batch_np, jacobi_case(200, 8),
          args.repeat)
    bench("transport_abelian 10^4 x 3", kernels.transport_abelian_nb, kernels.transport_abelian_np,
          transport_case(10_000, 3), args.repeat)
    bench(f"rk4_sampled {args.steps} steps", kernels.rk4_sampled_nb, kernels.rk4_sampled_np, rk4_case(args.steps),
          args.repeat)


if __name__ == "__main__":
    main()
