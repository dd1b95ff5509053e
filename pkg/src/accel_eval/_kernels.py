"""Hot inner loops, each with a numba and a pure-numpy implementation.

The backend is picked once at import from ``ACCEL_EVAL_BACKEND``
(``numba`` or ``numpy``). When unset, numba is used if it imports.
Both implementations of every kernel stay importable by name so the
benchmark and the tests can compare them directly.
"""

import os

import numpy as np
from scipy.linalg import solve_triangular

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_requested = os.environ.get("ACCEL_EVAL_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"ACCEL_EVAL_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
if _requested == "numba" and not HAVE_NUMBA:
    raise ImportError("ACCEL_EVAL_BACKEND=numba but numba is not installed")

BACKEND = "numpy" if (_requested == "numpy" or not HAVE_NUMBA) else "numba"


# ---------------------------------------------------------------------------
# Linear SVM: one epoch of dual coordinate descent (hinge loss, box [0, C]).
# ``w`` and ``alpha`` are updated in place; returns the max and min projected
# gradient seen during the epoch.


def svm_epoch_numpy(X, y, alpha, w, order, C, qdiag):
    pg_max = -np.inf
    pg_min = np.inf
    for i in order:
        xi = X[i]
        g = y[i] * np.dot(w, xi) - 1.0
        a = alpha[i]
        if a == 0.0:
            pg = min(g, 0.0)
        elif a == C:
            pg = max(g, 0.0)
        else:
            pg = g
        pg_max = max(pg_max, pg)
        pg_min = min(pg_min, pg)
        if pg != 0.0:
            a_new = min(max(a - g / qdiag[i], 0.0), C)
            alpha[i] = a_new
            w += ((a_new - a) * y[i]) * xi
    return pg_max, pg_min


# ---------------------------------------------------------------------------
# Lane-change cut-in: fixed-step ACC/AEB follower behind a constant-speed
# leader. Returns 1 for states that end in a collision.


def lane_change_numpy(v, rdot, rinv, time_headway, range_offset, gain_range,
                      gain_rate, accel_min, accel_max, ttc_aeb, brake_decel,
                      dt, n_steps):
    v = np.asarray(v, dtype=np.float64)
    rinv = np.asarray(rinv, dtype=np.float64)
    valid = rinv > 0.0
    R = np.where(valid, 1.0 / np.where(valid, rinv, 1.0), 1.0)
    v_av = v - np.asarray(rdot, dtype=np.float64)
    hit = np.zeros(v.shape, dtype=bool)
    for _ in range(n_steps):
        rd = v - v_av
        closing = rd < 0.0
        ttc = np.where(closing, R / np.where(closing, -rd, 1.0), np.inf)
        aeb = closing & (ttc <= ttc_aeb)
        acc = gain_range * (R - time_headway * v_av - range_offset) + gain_rate * rd
        acc = np.minimum(np.maximum(acc, accel_min), accel_max)
        a = np.where(aeb, brake_decel, acc)
        R = R + dt * rd
        v_av = np.maximum(v_av + dt * a, 0.0)
        hit |= R <= 0.0
    return (hit & valid).astype(np.int8)


# ---------------------------------------------------------------------------
# EM for full-covariance mixtures.
#
# em_estep: responsibilities and per-point log normalizers for the terms
# log p_j + log phi_j(x_i) - penalty_j, given lower Cholesky factors.
# weighted_moments: responsibility-weighted counts, means and (two-pass)
# scatter matrices.

_LOG_2PI = float(np.log(2.0 * np.pi))


def em_estep_numpy(X, means, chols, log_dets, log_w, penalty):
    N, m = X.shape
    terms = np.empty((N, means.shape[0]))
    for j in range(means.shape[0]):
        white = solve_triangular(chols[j], (X - means[j]).T, lower=True, check_finite=False)
        maha = np.einsum("ij,ij->j", white, white)
        terms[:, j] = log_w[j] - 0.5 * (m * _LOG_2PI + log_dets[j] + maha) - penalty[j]
    top = terms.max(axis=1)
    top = np.where(np.isfinite(top), top, 0.0)
    resp = np.exp(terms - top[:, None])
    total = resp.sum(axis=1)
    resp /= total[:, None]
    return resp, top + np.log(total)


def weighted_moments_numpy(X, resp):
    k = resp.shape[1]
    m = X.shape[1]
    nk = resp.sum(axis=0)
    means = np.zeros((k, m))
    scatter = np.zeros((k, m, m))
    for j in range(k):
        if nk[j] <= 0.0:
            continue
        means[j] = resp[:, j] @ X / nk[j]
        d = X - means[j]
        scatter[j] = (d * resp[:, j, None]).T @ d / nk[j]
    return nk, means, scatter


if HAVE_NUMBA:

    @njit(cache=True)
    def svm_epoch_numba(X, y, alpha, w, order, C, qdiag):
        m = X.shape[1]
        pg_max = -np.inf
        pg_min = np.inf
        for idx in range(order.shape[0]):
            i = order[idx]
            s = 0.0
            for j in range(m):
                s += w[j] * X[i, j]
            g = y[i] * s - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if pg != 0.0:
                a_new = min(max(a - g / qdiag[i], 0.0), C)
                alpha[i] = a_new
                step = (a_new - a) * y[i]
                for j in range(m):
                    w[j] += step * X[i, j]
        return pg_max, pg_min

    @njit(cache=True)
    def _lane_change_one(v, rdot, rinv, time_headway, range_offset, gain_range,
                         gain_rate, accel_min, accel_max, ttc_aeb, brake_decel,
                         dt, n_steps):
        if not rinv > 0.0:
            return 0
        R = 1.0 / rinv
        v_av = v - rdot
        for _ in range(n_steps):
            rd = v - v_av
            if rd < 0.0 and R / (-rd) <= ttc_aeb:
                a = brake_decel
            else:
                a = gain_range * (R - time_headway * v_av - range_offset) + gain_rate * rd
                a = min(max(a, accel_min), accel_max)
            R = R + dt * rd
            v_av = max(v_av + dt * a, 0.0)
            if R <= 0.0:
                return 1
        return 0

    @njit(cache=True)
    def lane_change_numba(v, rdot, rinv, time_headway, range_offset, gain_range,
                          gain_rate, accel_min, accel_max, ttc_aeb, brake_decel,
                          dt, n_steps):
        out = np.empty(v.shape[0], dtype=np.int8)
        for k in range(v.shape[0]):
            out[k] = _lane_change_one(
                v[k], rdot[k], rinv[k], time_headway, range_offset, gain_range,
                gain_rate, accel_min, accel_max, ttc_aeb, brake_decel, dt, n_steps,
            )
        return out

    @njit(cache=True)
    def em_estep_numba(X, means, chols, log_dets, log_w, penalty):
        N, m = X.shape
        k = means.shape[0]
        resp = np.empty((N, k))
        per_point = np.empty(N)
        w = np.empty(m)
        for i in range(N):
            top = -np.inf
            for j in range(k):
                maha = 0.0
                for r in range(m):
                    acc = X[i, r] - means[j, r]
                    for c in range(r):
                        acc -= chols[j, r, c] * w[c]
                    w[r] = acc / chols[j, r, r]
                    maha += w[r] * w[r]
                t = log_w[j] - 0.5 * (m * _LOG_2PI + log_dets[j] + maha) - penalty[j]
                resp[i, j] = t
                if t > top:
                    top = t
            if not np.isfinite(top):
                top = 0.0
            total = 0.0
            for j in range(k):
                e = np.exp(resp[i, j] - top)
                resp[i, j] = e
                total += e
            for j in range(k):
                resp[i, j] /= total
            per_point[i] = top + np.log(total)
        return resp, per_point

    @njit(cache=True)
    def weighted_moments_numba(X, resp):
        N, m = X.shape
        k = resp.shape[1]
        nk = np.zeros(k)
        means = np.zeros((k, m))
        scatter = np.zeros((k, m, m))
        for i in range(N):
            for j in range(k):
                r = resp[i, j]
                nk[j] += r
                for a in range(m):
                    means[j, a] += r * X[i, a]
        for j in range(k):
            if nk[j] > 0.0:
                for a in range(m):
                    means[j, a] /= nk[j]
        d = np.empty(m)
        for i in range(N):
            for j in range(k):
                r = resp[i, j]
                if r == 0.0:
                    continue
                for a in range(m):
                    d[a] = X[i, a] - means[j, a]
                for a in range(m):
                    ra = r * d[a]
                    for b in range(a + 1):
                        scatter[j, a, b] += ra * d[b]
        for j in range(k):
            if nk[j] > 0.0:
                for a in range(m):
                    for b in range(a + 1):
                        scatter[j, a, b] /= nk[j]
                        scatter[j, b, a] = scatter[j, a, b]
        return nk, means, scatter

if BACKEND == "numba":
    svm_epoch = svm_epoch_numba
    lane_change = lane_change_numba
    em_estep = em_estep_numba
    weighted_moments = weighted_moments_numba
else:
    svm_epoch = svm_epoch_numpy
    lane_change = lane_change_numpy
    em_estep = em_estep_numpy
    weighted_moments = weighted_moments_numpy
