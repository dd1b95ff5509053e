"""Crude Monte Carlo and importance-sampling estimators with running traces."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import gmm
from .exceptions import EstimationError

NONFINITE_LIMIT = 1e-3


def z_value(confidence):
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return float(norm.ppf(0.5 + confidence / 2.0))


def rel_half_width(p_hat, sigma_hat, n, confidence=0.95):
    """``z * sigma / (sqrt(n) * p)``; infinite when ``p_hat == 0``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if p_hat < 0:
        raise ValueError("p_hat must be non-negative")
    if sigma_hat == 0.0:
        return 0.0 if p_hat > 0 else math.inf
    if p_hat == 0.0:
        return math.inf
    return z_value(confidence) * sigma_hat / (math.sqrt(n) * p_hat)


def required_samples_crude(p, target_w, confidence=0.95):
    """Crude MC sample count giving relative half-width ``target_w``."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if not target_w > 0.0:
        raise ValueError("target_w must be positive")
    z = z_value(confidence)
    return int(math.ceil((z / target_w) ** 2 * (1.0 - p) / p))


def default_checkpoints(n):
    step = max(1, n // 200)
    cps = list(range(step, n + 1, step))
    if not cps or cps[-1] != n:
        cps.append(n)
    return cps


@dataclass
class EstimationResult:
    p_hat: float
    sigma_hat: float
    n_samples: int
    rel_half_width: float
    hit_count: int
    confidence: float
    trace_n: np.ndarray = field(repr=False)
    trace_p: np.ndarray = field(repr=False)
    trace_w: np.ndarray = field(repr=False)
    nonfinite: int = 0
    method: str = ""

    @property
    def std_error(self):
        return self.sigma_hat / math.sqrt(self.n_samples)

    @property
    def trace(self):
        return list(zip(self.trace_n.tolist(), self.trace_p.tolist(), self.trace_w.tolist()))


def summarize(values, hits, checkpoints=None, confidence=0.95, nonfinite=0, method=""):
    """Running mean / sd / half-width of per-sample estimator values.

    Everything is read off sequential cumulative sums, so the statistics at a
    checkpoint ``c`` are exactly those of the first ``c`` values alone.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    cps = default_checkpoints(n) if checkpoints is None else sorted({int(c) for c in checkpoints})
    if cps and (cps[0] < 1 or cps[-1] > n):
        raise ValueError("checkpoints must lie in [1, n]")
    if not cps or cps[-1] != n:
        cps = list(cps) + [n]
    s1 = np.cumsum(values)
    s2 = np.cumsum(values * values)
    idx = np.asarray(cps) - 1
    c = np.asarray(cps, dtype=np.float64)
    mean = s1[idx] / c
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(c > 1, np.maximum(s2[idx] - s1[idx] * mean, 0.0) / np.maximum(c - 1, 1), 0.0)
    sd = np.sqrt(var)
    w = np.array([rel_half_width(p, s, int(k), confidence) for p, s, k in zip(mean, sd, cps)])
    return EstimationResult(
        p_hat=float(mean[-1]),
        sigma_hat=float(sd[-1]),
        n_samples=n,
        rel_half_width=float(w[-1]),
        hit_count=int(np.sum(hits)),
        confidence=confidence,
        trace_n=np.asarray(cps, dtype=np.int64),
        trace_p=mean,
        trace_w=w,
        nonfinite=int(nonfinite),
        method=method,
    )


def crude_mc(scenario, n, checkpoints=None, rng=None, confidence=0.95):
    """Sample mean of the indicator under the scenario's own distribution."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    x = gmm.sample_mixture(scenario.distribution, int(n), rng)
    hits = scenario.indicator(x).astype(np.float64)
    return summarize(hits, hits, checkpoints, confidence, method="crude")


def likelihood_ratio(f, f_star, x):
    return np.exp(gmm.log_density(f, x) - gmm.log_density(f_star, x))


def importance_sampling(scenario, f_star, n, checkpoints=None, rng=None, confidence=0.95,
                        return_samples=False):
    """Unbiased IS estimate ``mean(I(X) f(X)/f*(X))`` with ``X ~ f*``.

    The true scenario indicator is used, never a learned surrogate. Samples
    whose likelihood ratio is not finite contribute zero and are counted;
    more than 0.1% of them aborts the run.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if f_star.dim != scenario.dimension:
        raise ValueError(
            f"sampling mixture dimension {f_star.dim} does not match scenario dimension {scenario.dimension}"
        )
    rng = np.random.default_rng() if rng is None else rng
    x = gmm.sample_mixture(f_star, int(n), rng)
    hits = scenario.indicator(x)
    values = np.zeros(x.shape[0])
    bad = 0
    if np.any(hits):
        with np.errstate(over="ignore", invalid="ignore"):
            lr = likelihood_ratio(scenario.distribution, f_star, x[hits == 1])
        finite = np.isfinite(lr)
        bad = int(np.count_nonzero(~finite))
        if bad > NONFINITE_LIMIT * n:
            raise EstimationError(f"{bad} of {n} likelihood ratios are not finite")
        values[hits == 1] = np.where(finite, lr, 0.0)
    result = summarize(values, hits, checkpoints, confidence, nonfinite=bad, method="is")
    if return_samples:
        return result, x, hits
    return result


def sequential_update(train_x, train_y, new_x, new_y):
    """Append labeled points, skipping exact duplicates of existing coordinates."""
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y).reshape(-1)
    new_x = np.asarray(new_x, dtype=np.float64).reshape(-1, train_x.shape[1])
    new_y = np.asarray(new_y).reshape(-1)
    if new_x.shape[0] != new_y.shape[0]:
        raise ValueError("new points and labels differ in length")
    # + 0.0 folds -0.0 into 0.0 so byte keys match numeric equality
    seen = {(row + 0.0).tobytes() for row in train_x}
    keep = []
    for i, row in enumerate(new_x):
        key = (row + 0.0).tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    if not keep:
        return train_x, train_y
    return (np.concatenate([train_x, new_x[keep]]),
            np.concatenate([train_y, new_y[keep].astype(train_y.dtype)]))
