"""Gaussian mixtures: density, sampling and ridge-regularized EM."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from . import _kernels
from .exceptions import FittingError
from .gaussmath import LOG_2PI, MultivariateGaussian

SAMPLE_BLOCK = 4096
COLLAPSE_WEIGHT = 1e-8


@dataclass
class FitInfo:
    """Diagnostics from ``fit_em``.

    ``objective`` is the penalized per-sample log-likelihood evaluated at the
    start of every iteration; ``segments`` lists the iteration indices where a
    collapsed component was re-seeded, which restarts the monotone run.
    """

    ridge: np.ndarray  # per-coordinate covariance shift
    iterations: int = 0
    converged: bool = False
    objective: list = field(default_factory=list)
    reseeds: int = 0
    segments: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    components: tuple
    info: FitInfo = field(default=None, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        comps = tuple(self.components)
        if len(comps) == 0 or len(comps) != w.size:
            raise ValueError("need one weight per component and at least one component")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 (got {w.sum():.12g})")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError("all components must share one dimension")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    @property
    def k(self):
        return len(self.components)

    @property
    def means(self):
        return np.array([c.mean for c in self.components])

    @property
    def covariances(self):
        return np.array([c.covariance for c in self.components])


def component_log_densities(mix, x):
    """``(N, k)`` matrix of ``log p_j + log phi_j(x_i)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mix.dim:
        raise ValueError(f"expected points of dimension {mix.dim}, got shape {x.shape}")
    out = np.empty((x.shape[0], mix.k))
    with np.errstate(divide="ignore"):
        logw = np.log(mix.weights)
    for j, c in enumerate(mix.components):
        white = solve_triangular(c.chol, (x - c.mean).T, lower=True, check_finite=False)
        out[:, j] = logw[j] - 0.5 * (c.dim * LOG_2PI + c.log_det + np.einsum("ij,ij->j", white, white))
    return out


def log_density(mix, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.ndim != 2 or pts.shape[1] != mix.dim:
        raise ValueError(f"expected points of dimension {mix.dim}, got shape {x.shape}")
    out = logsumexp(component_log_densities(mix, pts), axis=1)
    return float(out[0]) if single else out


def density(mix, x):
    return np.exp(log_density(mix, x))


def sample_mixture(mix, count, rng, return_labels=False):
    """Draw ``count`` points: pick a component by weight, then sample it.

    Draws are produced in fixed blocks of ``SAMPLE_BLOCK`` so that the first
    ``c`` points do not depend on ``count``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cum = np.cumsum(mix.weights)
    means = mix.means
    chols = np.array([c.chol for c in mix.components])
    n_blocks = -(-int(count) // SAMPLE_BLOCK)
    xs, labels = [], []
    for _ in range(n_blocks):
        u = rng.random(SAMPLE_BLOCK) * cum[-1]
        lab = np.minimum(np.searchsorted(cum, u, side="right"), mix.k - 1)
        z = rng.standard_normal((SAMPLE_BLOCK, mix.dim))
        xs.append(means[lab] + np.einsum("bij,bj->bi", chols[lab], z))
        labels.append(lab)
    x = np.concatenate(xs)[:count]
    if return_labels:
        return x, np.concatenate(labels)[:count]
    return x


# ---------------------------------------------------------------------------
# EM


def _kmeans_init(X, k, rng, lloyd_iters=10):
    """k-means++ style D^2 seeding followed by a few Lloyd steps.

    Distances are taken on standardized coordinates. Seeds are drawn by
    inverse CDF over the data order, so repeating every point in place gives
    the same seeds for the same stream.
    """
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    Y = X / scale
    N = Y.shape[0]
    cum = np.arange(1, N + 1, dtype=np.float64)
    first = int(np.searchsorted(cum, rng.random() * N, side="right"))
    centers = [Y[min(first, N - 1)]]
    d2 = np.sum((Y - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        cum = np.cumsum(d2)
        if cum[-1] <= 0.0:
            idx = int(rng.integers(N))
        else:
            idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        idx = min(idx, N - 1)
        centers.append(Y[idx])
        d2 = np.minimum(d2, np.sum((Y - Y[idx]) ** 2, axis=1))
    centers = np.array(centers)
    for _ in range(lloyd_iters):
        dist = ((Y[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        lab = np.argmin(dist, axis=1)
        new = centers.copy()
        for j in range(k):
            members = Y[lab == j]
            if members.shape[0]:
                new[j] = members.mean(axis=0)
        if np.array_equal(new, centers):
            break
        centers = new
    dist = ((Y[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    lab = np.argmin(dist, axis=1)
    resp = np.zeros((N, k))
    resp[np.arange(N), lab] = 1.0
    return resp


def _m_step(X, resp, ridge):
    nk, means, scatter = _kernels.weighted_moments(X, np.ascontiguousarray(resp))
    covs = scatter + np.diag(ridge)
    return nk / X.shape[0], means, covs


def _e_step(X, weights, chols, log_dets, means, ridge):
    """Responsibilities and per-point penalized log-likelihood.

    The per-component penalty is ``tr(D Sigma_j^-1)/2 = |L_j^-1 D^(1/2)|_F^2 / 2``.
    """
    m = X.shape[1]
    penalty = np.zeros(weights.size)
    if np.any(ridge > 0.0):
        root = np.diag(np.sqrt(ridge))
        for j in range(weights.size):
            a = solve_triangular(chols[j], root, lower=True, check_finite=False)
            penalty[j] = 0.5 * float(np.sum(a * a))
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return _kernels.em_estep(X, means, chols, log_dets, log_w, penalty)


def fit_em(data, k, ridge=None, tol=1e-7, max_iter=500, rng=None, max_reseeds=10):
    """Fit a ``k``-component full-covariance mixture by EM.

    Every covariance update adds the diagonal ``D = diag(ridge)``; ``ridge``
    may be a scalar or one value per coordinate, and ``None`` means ``1e-6``
    times each coordinate's variance in ``data``, which keeps the fit
    equivariant under per-coordinate rescaling. The iteration maximizes the
    penalized log-likelihood
    ``sum_i log sum_j p_j phi_j(x_i) exp(-tr(D Sigma_j^-1)/2)``, for which the
    shifted covariance ``S_j + D`` is the exact M-step, so the objective is
    non-decreasing between re-seeds. Components whose weight falls below
    ``1e-8`` are re-seeded at the worst-explained data point.
    """
    X = np.ascontiguousarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("data must be a 2-D array of points")
    N, m = X.shape
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > N:
        raise ValueError(f"k={k} exceeds the number of data points ({N})")
    if not np.all(np.isfinite(X)):
        raise ValueError("data must be finite")
    if ridge is None:
        ridge = 1e-6 * X.var(axis=0)
        # constant coordinates still need a floor to stay positive definite
        ridge[ridge == 0.0] = 1e-12
    ridge = np.broadcast_to(np.asarray(ridge, dtype=np.float64), (m,)).copy()
    if np.any(ridge < 0.0) or not np.all(np.isfinite(ridge)):
        raise ValueError("ridge must be finite and non-negative")
    rng = np.random.default_rng() if rng is None else rng

    info = FitInfo(ridge=ridge)
    global_cov = np.cov(X, rowvar=False).reshape(m, m) + np.diag(ridge)

    weights, means, covs = _m_step(X, _kmeans_init(X, k, rng), ridge)
    for j in range(k):
        if weights[j] <= 0.0:
            covs[j] = global_cov
    prev = -np.inf
    for it in range(int(max_iter)):
        try:
            chols = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            raise FittingError("component covariance lost positive definiteness; increase ridge") from None
        log_dets = 2.0 * np.sum(np.log(np.diagonal(chols, axis1=1, axis2=2)), axis=1)
        resp, per_point = _e_step(X, weights, chols, log_dets, means, ridge)
        obj = float(np.mean(per_point))
        info.objective.append(obj)
        info.iterations = it + 1
        if obj - prev < tol:
            info.converged = True
            break
        prev = obj
        weights, means, covs = _m_step(X, resp, ridge)

        collapsed = np.flatnonzero(weights < COLLAPSE_WEIGHT)
        if collapsed.size:
            worst = np.argsort(per_point, kind="stable")
            for r, j in enumerate(collapsed):
                info.reseeds += 1
                if info.reseeds > max_reseeds:
                    raise FittingError(f"component collapse persisted after {max_reseeds} re-seeds")
                means[j] = X[worst[r]]
                covs[j] = global_cov
                weights[j] = 1.0 / N
            weights = weights / weights.sum()
            info.segments.append(it + 1)
            prev = -np.inf

    weights = weights / weights.sum()
    comps = tuple(MultivariateGaussian(means[j], covs[j]) for j in range(k))
    return GaussianMixture(weights, comps, info)
