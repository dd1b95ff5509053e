"""Accelerated sampling distributions from a feature-space mixture fit.

Each component of the feature-space mixture has its mean moved to the most
likely point of the learned critical halfspace; the trailing (linear) block of
the shifted mixture is then the sampling mixture in the original coordinates.
"""

from dataclasses import dataclass

import numpy as np

from . import featuremap, gaussmath, gmm
from .classifier import Hyperplane, decision_function
from .gmm import GaussianMixture

FEASIBILITY_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class AcceleratedModel:
    feature_mixture: GaussianMixture
    original_mixture: GaussianMixture
    dominating_points: np.ndarray  # (k, m)
    hyperplane: Hyperplane
    feature_fit: GaussianMixture = None  # unshifted fit, kept for diagnostics


def dominating_point(component, h):
    """Maximizer of the component density over ``{z : beta'z + b >= 0}``.

    Outside the halfspace this is the projection of the mean onto the
    boundary in the metric of the component covariance.
    """
    if component.dim != h.dim:
        raise ValueError(f"hyperplane dimension {h.dim} does not match component dimension {component.dim}")
    mu = component.mean
    gap = float(h.beta @ mu) + h.b
    if gap >= 0.0:
        return mu.copy()
    s_beta = component.covariance @ h.beta
    curvature = float(h.beta @ s_beta)
    if not curvature > 0.0:
        raise ValueError("degenerate direction: beta' Sigma beta must be positive")
    a = mu + (-gap / curvature) * s_beta
    # a single correction step absorbs cancellation when |beta'mu| >> |b|
    resid = float(h.beta @ a) + h.b
    if resid < 0.0:
        a = a + (-resid / curvature) * s_beta
    return a


def shift_means(feature_fit, h):
    points = np.array([dominating_point(c, h) for c in feature_fit.components])
    comps = tuple(
        c if np.array_equal(p, c.mean) else gaussmath.MultivariateGaussian(p, c.covariance)
        for c, p in zip(feature_fit.components, points)
    )
    return GaussianMixture(feature_fit.weights, comps), points


def marginalize_to_original(feature_mix, fmap):
    if feature_mix.dim != fmap.output_dim:
        raise ValueError(
            f"mixture dimension {feature_mix.dim} does not match feature dimension {fmap.output_dim}"
        )
    idx = featuremap.linear_block_indices(fmap)
    comps = tuple(gaussmath.marginal_block(c, idx) for c in feature_mix.components)
    return GaussianMixture(feature_mix.weights, comps)


def build_accelerated(f, fmap, h, K, fit_count=20_000, rng=None, em_settings=None):
    """Sample ``f``, lift to feature space, fit ``K`` components, shift, marginalize.

    ``em_settings`` is forwarded to ``gmm.fit_em`` (``ridge``, ``tol``,
    ``max_iter``, ``max_reseeds``).
    """
    if f.dim != fmap.input_dim:
        raise ValueError(f"distribution dimension {f.dim} does not match feature map input {fmap.input_dim}")
    if h.dim != fmap.output_dim:
        raise ValueError(f"hyperplane dimension {h.dim} does not match feature map output {fmap.output_dim}")
    rng = np.random.default_rng() if rng is None else rng
    x = gmm.sample_mixture(f, int(fit_count), rng)
    fit = gmm.fit_em(featuremap.apply(fmap, x), K, rng=rng, **(em_settings or {}))
    shifted, points = shift_means(fit, h)
    assert np.all(decision_function(h, points) >= -FEASIBILITY_SLACK)
    return AcceleratedModel(
        feature_mixture=shifted,
        original_mixture=marginalize_to_original(shifted, fmap),
        dominating_points=points,
        hyperplane=h,
        feature_fit=fit,
    )
