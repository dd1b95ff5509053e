"""Explicit polynomial feature maps.

Monomials are listed from total degree ``d`` down to 1. Within a degree the
pure powers come first in coordinate order, followed by the mixed terms in
``combinations_with_replacement`` order, which gives the familiar
``(x^2, y^2, xy, x, y)`` layout. The degree-1 block always closes the vector
in coordinate order, so marginalizing back to the input space means taking
the trailing ``n`` coordinates.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np


def _degree_exponents(n, k):
    """Exponent vectors of total degree ``k``: pure powers first, then mixed."""
    rows = []
    for combo in combinations_with_replacement(range(n), k):
        e = np.zeros(n, dtype=np.int64)
        for i in combo:
            e[i] += 1
        rows.append(e)
    # pure powers x_i^k in coordinate order, then the rest in the
    # combinations order (x1x2, x1x3, ..., x2x3, ...)
    pure = [e for e in rows if np.count_nonzero(e) == 1]
    pure.sort(key=lambda e: int(np.flatnonzero(e)[0]))
    mixed = [e for e in rows if np.count_nonzero(e) > 1]
    return pure + mixed


@dataclass(frozen=True, eq=False)
class PolynomialFeatureMap:
    input_dim: int
    degree: int
    exponents: np.ndarray  # (m, input_dim) integer

    @property
    def output_dim(self):
        return self.exponents.shape[0]

    def __call__(self, x):
        return apply(self, x)


def build_map(input_dim, degree):
    if int(input_dim) != input_dim or input_dim < 1:
        raise ValueError(f"input_dim must be a positive integer, got {input_dim!r}")
    if int(degree) != degree or degree < 1:
        raise ValueError(f"degree must be a positive integer, got {degree!r}")
    n, d = int(input_dim), int(degree)
    rows = []
    for k in range(d, 0, -1):
        rows.extend(_degree_exponents(n, k))
    exps = np.array(rows, dtype=np.int64)
    assert exps.shape[0] == comb(n + d, d) - 1
    exps.setflags(write=False)
    return PolynomialFeatureMap(n, d, exps)


def apply(fmap, x):
    """Evaluate the monomials at ``x`` (a vector or an ``(N, n)`` array)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.ndim != 2 or pts.shape[1] != fmap.input_dim:
        raise ValueError(f"expected points of dimension {fmap.input_dim}, got shape {x.shape}")
    out = np.ones((pts.shape[0], fmap.output_dim))
    for j, e in enumerate(fmap.exponents):
        for i in np.flatnonzero(e):
            p = int(e[i])
            out[:, j] *= pts[:, i] if p == 1 else pts[:, i] ** p
    # exact copy for the linear block, no multiplication by 1.0 round trip
    out[:, -fmap.input_dim:] = pts
    return out[0] if single else out


def linear_block_indices(fmap):
    m, n = fmap.output_dim, fmap.input_dim
    return tuple(range(m - n, m))
