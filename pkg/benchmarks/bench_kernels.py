"""Time the numba and numpy step-count kernels on the same workloads.

    python3 benchmarks/bench_kernels.py [--n 5000] [--repeat 3]

Each workload is run once per backend to warm up (numba compiles on first
call), then timed; step counts from both backends must agree exactly.
"""

import argparse
import time

import numpy as np

from bbsearch import kernels
from bbsearch.density import Exponential, GaussianMixture, Normal, fit_kde
from bbsearch.experiments import draw_targets, make_bounds


def workloads():
    rng = np.random.default_rng(0)
    normal = Normal(0.0, 10000.0)
    yield "normal", normal, normal
    yield "exponential", Exponential(10000.0), Exponential(10000.0)
    mix = GaussianMixture.bimodal(0.0, 1000.0, 4000.0, 1000.0, 0.5)
    yield "bimodal", mix, mix
    yield "kde-100", normal, fit_kde(rng.normal(0.0, 10000.0, 100), "auto")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000, help="targets per workload")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--eps", type=int, default=8)
    args = ap.parse_args()

    print(f"{'workload':<12} {'kernel':<8} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for name, dist, prior in workloads():
        lo, hi = make_bounds(dist, tail_mass=1e-5)
        targets, _ = draw_targets(dist, args.n, 1, (lo, hi))
        for kernel in ("classic", "bbs"):
            if kernel == "classic":
                calls = {b: (lambda b=b: kernels.classic_steps(lo, hi, targets, args.eps, backend=b)) for b in ("numba", "numpy")}
            else:
                calls = {b: (lambda b=b: kernels.bbs_steps(lo, hi, targets, args.eps, prior, backend=b)[0]) for b in ("numba", "numpy")}
            for fn in calls.values():
                fn()  # warm up / compile
            t_nb, s_nb = best_of(calls["numba"], args.repeat)
            t_np, s_np = best_of(calls["numpy"], args.repeat)
            if not np.array_equal(s_nb, s_np):
                raise SystemExit(f"{name}/{kernel}: backends disagree on {int(np.sum(s_nb != s_np))} targets")
            print(f"{name:<12} {kernel:<8} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
