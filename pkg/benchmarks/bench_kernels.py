"""Time the numba and numpy Crank-Nicolson kernels on a reference-sized grid.

    python benchmarks/bench_kernels.py --points 16384 --steps 200
"""
import argparse
import time

import numpy as np

from squid_tip import _kernels, model, spectral


def problem(n_points):
    sc = model.nondimensionalize(model.SquidParams.reference())
    op = spectral.discretize(sc, 0.01, spectral.GridSpec(n_points=n_points))
    es = spectral.eigensolve(spectral.discretize(sc, 0.0, op.grid), 2)
    psi = (es.states[:, 0] + es.states[:, 1]) * np.sqrt(es.spacing / 2)
    e_ref = es.energies.mean()
    return psi.astype(complex), op.diag - e_ref, op.off


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=16384)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--dt", type=float, default=0.3, help="scaled time step")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    psi, d, e = problem(args.points)
    impls = {"numpy": _kernels.cn_propagate_numpy}
    if _kernels.HAVE_NUMBA:
        _kernels.cn_propagate_numba(psi, d, e, args.dt, 1)  # compile outside the timing
        impls["numba"] = _kernels.cn_propagate_numba

    results = {}
    for name, fn in impls.items():
        t, out = best_of(lambda: fn(psi, d, e, args.dt, args.steps), args.repeats)
        results[name] = out
        print(f"{name:6s} {t * 1e3:9.2f} ms total  {t / args.steps * 1e6:8.1f} us/step")
    if len(results) == 2:
        diff = np.max(np.abs(results["numpy"] - results["numba"]))
        t_np = best_of(lambda: impls["numpy"](psi, d, e, args.dt, args.steps), 1)[0]
        t_nb = best_of(lambda: impls["numba"](psi, d, e, args.dt, args.steps), 1)[0]
        print(f"max |numpy - numba| = {diff:.2e}; speed-up {t_np / t_nb:.2f}x")


if __name__ == "__main__":
    main()
