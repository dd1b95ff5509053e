"""Training designs and a soft-margin linear classifier for feature space."""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import TrainingError


def _check_box(lower, upper):
    lower = np.asarray(lower, dtype=np.float64).reshape(-1)
    upper = np.asarray(upper, dtype=np.float64).reshape(-1)
    if lower.shape != upper.shape:
        raise ValueError("lower and upper bounds differ in length")
    if np.any(~(lower < upper)):
        raise ValueError("empty domain: every lower bound must be below its upper bound")
    return lower, upper


def design_grid(lower, upper, counts):
    """Full Cartesian grid with ``counts[i]`` evenly spaced values per axis,
    endpoints included. Returns an array of shape ``(prod(counts), n)``."""
    lower, upper = _check_box(lower, upper)
    counts = [int(c) for c in np.atleast_1d(counts)]
    if len(counts) != lower.size:
        raise ValueError("need one count per axis")
    if min(counts) < 2:
        raise ValueError("grid counts must be >= 2 per axis")
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lower, upper, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def design_uniform(lower, upper, count, rng):
    lower, upper = _check_box(lower, upper)
    if count < 1:
        raise ValueError("count must be >= 1")
    return lower + (upper - lower) * rng.random((int(count), lower.size))


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Oriented boundary ``beta'z + b = 0``; the critical side is ``>= 0``.

    ``objective`` holds the per-epoch training objective of the best iterate
    so far when the plane came out of ``train_linear``.
    """

    beta: np.ndarray
    b: float
    objective: tuple = field(default=(), repr=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(beta)) or not np.isfinite(self.b):
            raise ValueError("hyperplane coefficients must be finite")
        if not np.linalg.norm(beta) > 0.0:
            raise ValueError("hyperplane normal must be non-zero")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return self.beta.shape[0]

    def scaled(self, c):
        return Hyperplane(self.beta * c, self.b * c)


def decision_function(h, z):
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != h.dim:
        raise ValueError(f"expected feature dimension {h.dim}, got shape {z.shape}")
    return z @ h.beta + h.b


def predict(h, z):
    """+1 on the critical side (ties included), -1 otherwise."""
    d = decision_function(h, z)
    return np.where(d >= 0.0, 1, -1) if np.ndim(d) else (1 if d >= 0.0 else -1)


def _objective(w, X, y, C):
    margins = 1.0 - y * (X @ w)
    return 0.5 * float(w @ w) + C * float(np.sum(np.maximum(margins, 0.0)))


def train_linear(z, labels, penalty=10.0, max_epochs=500, tolerance=1e-6, rng=None,
                 bias_scale=1.0):
    """Fit a soft-margin linear SVM by dual coordinate descent.

    Features are standardized on the training set, the offset is learned as
    the weight of a constant column of value ``bias_scale``, and the result is
    mapped back to the raw feature coordinates. Training stops once an epoch
    improves the primal objective by less than ``tolerance`` relative to its
    magnitude, or after ``max_epochs``. The best iterate seen is returned.
    """
    Z = np.asarray(z, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
        raise ValueError("z must be (N, m) with one label per row")
    if not np.all(np.isfinite(Z)):
        raise ValueError("features must be finite")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("labels must be +1 or -1")
    if np.all(y == 1.0) or np.all(y == -1.0):
        raise TrainingError("training set contains a single class; no boundary defined")
    if not penalty > 0:
        raise ValueError("penalty must be positive")
    rng = np.random.default_rng() if rng is None else rng

    mu = Z.mean(axis=0)
    sd = Z.std(axis=0)
    sd[sd == 0.0] = 1.0
    X = np.empty((Z.shape[0], Z.shape[1] + 1))
    X[:, :-1] = (Z - mu) / sd
    X[:, -1] = bias_scale
    X = np.ascontiguousarray(X)

    C = float(penalty)
    qdiag = np.einsum("ij,ij->i", X, X)
    alpha = np.zeros(X.shape[0])
    w = np.zeros(X.shape[1])
    best_w = w.copy()
    best = _objective(w, X, y, C)
    history = []
    for _ in range(int(max_epochs)):
        order = rng.permutation(X.shape[0])
        pg_max, pg_min = _kernels.svm_epoch(X, y, alpha, w, order, C, qdiag)
        obj = _objective(w, X, y, C)
        improvement = best - obj
        if obj < best:
            best = obj
            best_w = w.copy()
        history.append(best)
        if pg_max - pg_min < 1e-12:
            break
        if 0.0 <= improvement < tolerance * max(1.0, abs(best)):
            break

    beta = best_w[:-1] / sd
    b = best_w[-1] * bias_scale - float(beta @ mu)
    if not np.linalg.norm(beta) > 0.0:
        raise TrainingError("classifier collapsed to a constant decision")
    return Hyperplane(beta, b, tuple(history))
