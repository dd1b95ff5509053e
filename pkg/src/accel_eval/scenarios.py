"""Evaluation problems: a union-of-disks toy and an ACC/AEB cut-in scenario."""

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import _kernels
from .exceptions import ConfigError, OracleError
from .gaussmath import MultivariateGaussian, log_density
from .gmm import GaussianMixture


@dataclass(frozen=True, eq=False)
class Scenario:
    """A box domain, an original distribution and a black-box indicator.

    ``raw_indicator`` maps an ``(N, n)`` array to 0/1 values; ``indicator``
    adds the rule that points outside the domain box never count.
    """

    name: str
    lower: np.ndarray
    upper: np.ndarray
    distribution: GaussianMixture
    raw_indicator: Callable

    @property
    def dimension(self):
        return self.lower.shape[0]

    def in_domain(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)

    def indicator(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[1] != self.dimension:
            raise ValueError(f"expected points of dimension {self.dimension}, got shape {x.shape}")
        out = np.zeros(pts.shape[0], dtype=np.int8)
        inside = self.in_domain(pts)
        if np.any(inside):
            out[inside] = np.asarray(self.raw_indicator(pts[inside]), dtype=np.int8)
        return int(out[0]) if single else out


# ---------------------------------------------------------------------------
# toy problem

TOY_DISKS = ((0.0, 0.0, 0.2), (5.0, 5.0, 1.5), (3.0, 5.0, 0.7), (5.0, 3.0, 0.5))
TOY_LOWER = (0.0, 0.0)
TOY_UPPER = (5.0, 5.0)
TOY_MEAN = (1.0, 1.0)


def _scaled_disks(radius_scale, disks=None):
    disks = TOY_DISKS if disks is None else disks
    return tuple((cx, cy, r * radius_scale) for cx, cy, r in disks)


def disk_union_indicator(x, disks):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    hit = np.zeros(pts.shape[0], dtype=bool)
    for cx, cy, r in disks:
        hit |= (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 <= r * r
    return int(hit[0]) if single else hit.astype(np.int8)


def toy_indicator(x, radius_scale=1.0):
    """1 inside the union of the four critical disks (boundary included)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    lo, hi = np.array(TOY_LOWER), np.array(TOY_UPPER)
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    out = disk_union_indicator(pts, _scaled_disks(radius_scale)) * inside
    return int(out[0]) if single else out.astype(np.int8)


def toy_distribution():
    return GaussianMixture([1.0], [MultivariateGaussian(TOY_MEAN, np.eye(2))])


def toy_scenario(radius_scale=1.0):
    disks = _scaled_disks(radius_scale)
    name = "toy" if radius_scale == 1.0 else f"toy-x{radius_scale:g}"
    return Scenario(
        name=name,
        lower=np.array(TOY_LOWER),
        upper=np.array(TOY_UPPER),
        distribution=toy_distribution(),
        raw_indicator=lambda x: disk_union_indicator(x, disks),
    )


def _midpoint_mass(g, disks, lower, upper, cells, chunk=512):
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    hx, hy = (upper - lower) / cells
    xs = lower[0] + hx * (np.arange(cells) + 0.5)
    ys = lower[1] + hy * (np.arange(cells) + 0.5)
    total = 0.0
    for start in range(0, cells, chunk):
        gx, gy = np.meshgrid(xs[start:start + chunk], ys, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        hit = disk_union_indicator(pts, disks).astype(bool)
        if np.any(hit):
            total += float(np.sum(np.exp(log_density(g, pts[hit]))))
    return total * hx * hy


def toy_oracle_probability(cells_per_axis=100, radius_scale=1.0, disks=None, rtol=0.01,
                           max_doublings=5):
    """Midpoint-rule value of P(X in critical set) for the toy problem.

    The grid is doubled until two successive doublings each change the value
    by at most ``rtol`` (relative); a single agreement is not trusted because
    coarse grids can coincide by accident on small disks. After
    ``max_doublings`` without settling ``OracleError`` is raised.
    """
    if cells_per_axis < 100:
        raise ValueError("cells_per_axis must be >= 100")
    disks = _scaled_disks(radius_scale, disks)
    g = MultivariateGaussian(TOY_MEAN, np.eye(2))
    cells = int(cells_per_axis)
    prev = _midpoint_mass(g, disks, TOY_LOWER, TOY_UPPER, cells)
    agreed = 0
    for _ in range(max_doublings):
        cells *= 2
        cur = _midpoint_mass(g, disks, TOY_LOWER, TOY_UPPER, cells)
        agreed = agreed + 1 if abs(cur - prev) <= rtol * abs(cur) else 0
        if agreed == 2:
            return cur
        prev = cur
    raise OracleError(f"quadrature did not settle within {rtol:.0%} after {max_doublings} doublings")


# ---------------------------------------------------------------------------
# lane change


@dataclass(frozen=True)
class AvControllerParams:
    """Follower model: headway-feedback ACC with a TTC-triggered AEB override.

    Units: s, m, 1/s^2, 1/s, m/s^2.
    """

    time_headway: float = 1.4
    range_offset: float = 2.0
    gain_range: float = 0.23
    gain_rate: float = 0.07
    accel_min: float = -3.0
    accel_max: float = 3.0
    ttc_aeb: float = 1.0
    brake_decel: float = -6.0
    dt: float = 0.05
    horizon: float = 15.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("controller.dt", "must be positive")
        if not self.horizon >= self.dt:
            raise ConfigError("controller.horizon", "must be at least dt")
        if not self.accel_min < 0 < self.accel_max:
            raise ConfigError("controller.accel_min", "need accel_min < 0 < accel_max")
        if not self.brake_decel < self.accel_min:
            raise ConfigError("controller.brake_decel", "must be below accel_min")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))

    @classmethod
    def from_dict(cls, d, prefix="controller"):
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, val in d.items():
            if key not in known:
                raise ConfigError(f"{prefix}.{key}", "unknown field")
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{prefix}.{key}", "must be a number")
            kwargs[key] = float(val)
        return cls(**kwargs)


def simulate_lane_change(x, params=None):
    """Collision indicator for cut-in states ``(v, Rdot, Rinv)``.

    The leader holds speed ``v``; the follower starts at ``v - Rdot`` a range
    ``1/Rinv`` behind and is integrated by explicit Euler until the horizon.
    Accepts one state or an ``(N, 3)`` array.
    """
    params = AvControllerParams() if params is None else params
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.ascontiguousarray(x.reshape(1, -1) if single else x)
    if pts.shape[1] != 3:
        raise ValueError(f"lane-change states are (v, Rdot, Rinv); got shape {x.shape}")
    out = _kernels.lane_change(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
        np.ascontiguousarray(pts[:, 2]),
        params.time_headway, params.range_offset, params.gain_range, params.gain_rate,
        params.accel_min, params.accel_max, params.ttc_aeb, params.brake_decel,
        params.dt, params.n_steps,
    )
    return int(out[0]) if single else out


def lane_change_scenario(config=None):
    """Build the cut-in scenario from a parsed config (defaults when ``None``)."""
    from .config import load_scenario_config

    cfg = load_scenario_config(config, default="lane-change")
    params = cfg.controller
    return Scenario(
        name=cfg.name,
        lower=cfg.lower,
        upper=cfg.upper,
        distribution=cfg.distribution,
        raw_indicator=lambda x: simulate_lane_change(x, params),
    )
