"""Dense multivariate normal primitives built on a Cholesky factor."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

LOG_2PI = np.log(2.0 * np.pi)

SYMMETRY_ATOL = 1e-10
SYMMETRIZE_LIMIT = 1e-8


@dataclass(frozen=True, eq=False)
class MultivariateGaussian:
    """N(mean, covariance) with the lower Cholesky factor cached.

    Covariances whose asymmetry is below ``SYMMETRIZE_LIMIT`` are replaced by
    their symmetric part; anything more asymmetric, or not positive definite,
    raises ``ValueError``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    log_det: float = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        cov = np.array(self.covariance, dtype=np.float64)
        n = mean.shape[0]
        if n == 0:
            raise ValueError("mean must be non-empty")
        if cov.ndim == 0 and n == 1:
            cov = cov.reshape(1, 1)
        if cov.shape != (n, n):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {n}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        asym = np.max(np.abs(cov - cov.T))
        if asym > SYMMETRIZE_LIMIT:
            raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3g})")
        cov = 0.5 * (cov + cov.T)
        assert np.max(np.abs(cov - cov.T)) <= SYMMETRY_ATOL
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance is not positive definite") from None
        mean.setflags(write=False)
        cov.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "log_det", 2.0 * float(np.sum(np.log(np.diag(chol)))))

    @property
    def dim(self):
        return self.mean.shape[0]


def _as_points(g, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.ndim != 2 or pts.shape[1] != g.dim:
        raise ValueError(f"expected points of dimension {g.dim}, got shape {x.shape}")
    return pts, single


def log_density(g, x):
    """Log of the normal density at ``x``.

    ``x`` may be a single vector (returns a float) or an ``(N, n)`` array
    (returns an ``(N,)`` array).
    """
    pts, single = _as_points(g, x)
    white = solve_triangular(g.chol, (pts - g.mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", white, white)
    out = -0.5 * (g.dim * LOG_2PI + g.log_det + maha)
    return float(out[0]) if single else out


def sample(g, count, rng):
    """Draw ``count`` points as ``mean + L z`` with ``z`` standard normal."""
    if count < 1:
        raise ValueError("count must be >= 1")
    z = rng.standard_normal((count, g.dim))
    return g.mean + z @ g.chol.T


def marginal_block(g, indices):
    """Marginal over the coordinates in ``indices`` (order preserved)."""
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size == 0:
        raise ValueError("indices must be non-empty")
    if np.any(idx < 0) or np.any(idx >= g.dim):
        raise ValueError(f"indices {idx.tolist()} out of range for dimension {g.dim}")
    if np.unique(idx).size != idx.size:
        raise ValueError("indices must be distinct")
    return MultivariateGaussian(g.mean[idx], g.covariance[np.ix_(idx, idx)])
