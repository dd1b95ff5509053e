"""Time the numba and numpy implementation of every hot kernel.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once untimed (JIT compile, cache warm-up), then the best of
``--repeat`` runs is reported together with the speedup of numba over numpy.
Outputs of the two backends are compared before anything is timed.
"""

import argparse
import time

import numpy as np

from accel_eval import _kernels
from accel_eval.classifier import design_grid
from accel_eval.scenarios import AvControllerParams, lane_change_scenario


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def lane_change_case():
    sc = lane_change_scenario()
    g = design_grid(sc.lower, sc.upper, [28, 28, 26])
    p = AvControllerParams()
    cols = [np.ascontiguousarray(g[:, i]) for i in range(3)]
    args = (*cols, p.time_headway, p.range_offset, p.gain_range, p.gain_rate, p.accel_min,
            p.accel_max, p.ttc_aeb, p.brake_decel, p.dt, p.n_steps)
    return "lane_change (20384 states)", args


def em_case(rng, n=20_000, k=20, m=5):
    X = rng.normal(size=(n, m))
    means = rng.normal(size=(k, m))
    chols = np.stack([np.linalg.cholesky(np.eye(m) * (1 + j / k)) for j in range(k)])
    log_dets = 2 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
    log_w = np.full(k, -np.log(k))
    penalty = np.zeros(k)
    return f"em_estep (N={n}, K={k}, m={m})", (X, means, chols, log_dets, log_w, penalty)


def moments_case(rng, n=20_000, k=20, m=5):
    X = rng.normal(size=(n, m))
    resp = rng.dirichlet(np.ones(k), size=n)
    return f"weighted_moments (N={n}, K={k}, m={m})", (X, resp)


def svm_case(rng, n=2000, m=6):
    X = np.ascontiguousarray(rng.normal(size=(n, m)))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    order = rng.permutation(n)
    qdiag = np.einsum("ij,ij->i", X, X)

    def run(impl):
        alpha = np.zeros(n)
        w = np.zeros(m)
        for _ in range(20):
            impl(X, y, alpha, w, order, 10.0, qdiag)
        return w

    return f"svm_epoch x20 (n={n}, m={m})", run


def _same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=1e-9, atol=1e-12) for x, y in zip(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    cases = []
    for name, (label, a) in (("lane_change", lane_change_case()),
                             ("em_estep", em_case(rng)),
                             ("weighted_moments", moments_case(rng))):
        np_fn = getattr(_kernels, f"{name}_numpy")
        nb_fn = getattr(_kernels, f"{name}_numba")
        cases.append((label, lambda f=np_fn, a=a: f(*a), lambda f=nb_fn, a=a: f(*a)))
    label, run = svm_case(rng)
    cases.append((label, lambda: run(_kernels.svm_epoch_numpy), lambda: run(_kernels.svm_epoch_numba)))

    print(f"{'kernel':<40} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}")
    for label, np_run, nb_run in cases:
        if not _same(np_run(), nb_run()):
            raise SystemExit(f"{label}: backends disagree")
        t_np = best_of(np_run, args.repeat)
        t_nb = best_of(nb_run, args.repeat)
        print(f"{label:<40} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
