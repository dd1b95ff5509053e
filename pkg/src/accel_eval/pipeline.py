"""End-to-end accelerated evaluation: design, label, train, fit, estimate.

Randomness comes from one integer seed. Each stage draws from its own child
stream of ``SeedSequence([seed, round])`` so that changing, say, the mixture
count leaves the training design and the classifier untouched.
"""

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import accelerate, classifier, estimate, featuremap
from .config import RunConfig, mixture_from_settings
from .exceptions import PipelineError
from .scenarios import AvControllerParams, Scenario, simulate_lane_change, toy_scenario

STREAMS = ("design", "train", "fit", "estimate", "crude")


@contextmanager
def stage(name):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def seed_streams(seed, round_index=0):
    children = np.random.SeedSequence([int(seed), int(round_index)]).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def build_scenario(cfg):
    sc = cfg.scenario
    if sc.kind == "toy":
        scen = toy_scenario(sc.radius_scale)
        return Scenario(sc.name, scen.lower, scen.upper, scen.distribution, scen.raw_indicator)
    params = AvControllerParams(**sc.controller)
    return Scenario(
        name=sc.name,
        lower=np.array(sc.lower),
        upper=np.array(sc.upper),
        distribution=mixture_from_settings(sc),
        raw_indicator=lambda x: simulate_lane_change(x, params),
    )


@dataclass(eq=False)
class RunResult:
    config: RunConfig
    round_index: int
    fmap: featuremap.PolynomialFeatureMap
    hyperplane: classifier.Hyperplane
    model: accelerate.AcceleratedModel
    estimate: estimate.EstimationResult
    train_x: np.ndarray
    train_y: np.ndarray
    train_recall: float
    samples: np.ndarray = None
    sample_hits: np.ndarray = None


def training_design(cfg, scenario, rng):
    p = cfg.pipeline
    if p.design == "grid":
        return classifier.design_grid(scenario.lower, scenario.upper, p.design_counts)
    return classifier.design_uniform(scenario.lower, scenario.upper, p.design_count, rng)


def recall(h, fmap, x, y):
    pos = y == 1
    if not np.any(pos):
        return float("nan")
    return float(np.mean(classifier.predict(h, featuremap.apply(fmap, x[pos])) == 1))


def run_pipeline(cfg, round_index=0, train=None, checkpoints=None, keep_samples=False):
    """One pass of the accelerated-evaluation procedure.

    ``train`` optionally supplies an already labeled ``(x, y)`` training set
    (sequential rounds); otherwise the configured design is drawn and labeled.
    """
    p = cfg.pipeline
    rngs = seed_streams(p.seed, round_index)
    with stage("scenario"):
        scenario = build_scenario(cfg)
    if train is None:
        with stage("design"):
            x = training_design(cfg, scenario, rngs["design"])
        with stage("label"):
            y = np.where(scenario.indicator(x) == 1, 1, -1).astype(np.int8)
    else:
        x, y = train
    with stage("features"):
        fmap = featuremap.build_map(scenario.dimension, p.degree)
        z = featuremap.apply(fmap, x)
    with stage("train"):
        h = classifier.train_linear(z, y, penalty=p.penalty, max_epochs=p.max_epochs,
                                    tolerance=p.svm_tolerance, rng=rngs["train"])
    with stage("fit"):
        model = accelerate.build_accelerated(
            scenario.distribution, fmap, h, p.components, fit_count=p.fit_count,
            rng=rngs["fit"], em_settings=p.em_settings,
        )
    with stage("estimate"):
        out = estimate.importance_sampling(
            scenario, model.original_mixture, p.samples, checkpoints=checkpoints,
            rng=rngs["estimate"], confidence=p.confidence, return_samples=keep_samples,
        )
    samples = hits = None
    if keep_samples:
        out, samples, hits = out
    return RunResult(
        config=cfg, round_index=round_index, fmap=fmap, hyperplane=h, model=model,
        estimate=out, train_x=x, train_y=y, train_recall=recall(h, fmap, x, y),
        samples=samples, sample_hits=hits,
    )


def run_crude(cfg, n=None, checkpoints=None):
    p = cfg.pipeline
    n = n or p.crude_samples or p.samples
    with stage("scenario"):
        scenario = build_scenario(cfg)
    with stage("crude"):
        return estimate.crude_mc(scenario, n, checkpoints=checkpoints,
                                 rng=seed_streams(p.seed)["crude"], confidence=p.confidence)


def run_sequential(cfg, rounds=None):
    """Initial run plus ``rounds`` refinement rounds, each reported on its own.

    After every round the in-domain importance samples, labeled by the true
    indicator, join the training set (exact duplicates skipped) before the
    classifier and sampling mixture are rebuilt.
    """
    rounds = cfg.pipeline.rounds if rounds is None else rounds
    results = [run_pipeline(cfg, 0, keep_samples=rounds > 0)]
    with stage("scenario"):
        scenario = build_scenario(cfg)
    for r in range(1, rounds + 1):
        prev = results[-1]
        with stage("update"):
            inside = scenario.in_domain(prev.samples)
            labels = np.where(prev.sample_hits[inside] == 1, 1, -1).astype(np.int8)
            train = estimate.sequential_update(prev.train_x, prev.train_y, prev.samples[inside], labels)
        results.append(run_pipeline(cfg, r, train=train, keep_samples=r < rounds))
    return results
