"""Scenario and run configuration: TOML files, built-in presets, validation.

A config file has up to five tables::

    [scenario]      kind = "toy" | "lane-change"; name; radius_scale (toy only)
    [distribution]  weights, means, covariances          (lane-change only)
    [domain]        lower, upper                          (lane-change only)
    [controller]    AvControllerParams fields             (lane-change only)
    [pipeline]      degree, components, design, ...       (all kinds)

Every problem is reported as ``ConfigError`` with the dotted field path.
"""

import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError
from .gaussmath import MultivariateGaussian
from .gmm import GaussianMixture

BUILTIN = {
    "toy": "toy.toml",
    "toy-inflated": "toy_inflated.toml",
    "lane-change": "lane_change.toml",
}
KINDS = ("toy", "lane-change")
DESIGNS = ("uniform", "grid")


@dataclass(frozen=True)
class PipelineSettings:
    """Numeric knobs of one accelerated-evaluation run.

    ``design`` picks the training design: ``uniform`` draws ``design_count``
    points, ``grid`` uses ``design_counts`` points per axis. ``crude_samples``
    of 0 means "same as ``samples``". ``rounds`` > 0 enables sequential
    refinement.
    """

    degree: int = 2
    components: int = 3
    fit_count: int = 20_000
    penalty: float = 10.0
    max_epochs: int = 500
    svm_tolerance: float = 1e-6
    design: str = "uniform"
    design_count: int = 1000
    design_counts: tuple = ()
    samples: int = 2000
    confidence: float = 0.95
    seed: int = 0
    rounds: int = 0
    crude_samples: int = 0
    em_tol: float = 1e-7
    em_max_iter: int = 500
    em_ridge: float = -1.0  # negative: data-scaled default

    @property
    def em_settings(self):
        out = {"tol": self.em_tol, "max_iter": self.em_max_iter}
        if self.em_ridge >= 0.0:
            out["ridge"] = self.em_ridge
        return out


@dataclass(frozen=True)
class ScenarioSettings:
    kind: str
    name: str
    radius_scale: float = 1.0
    lower: tuple = ()
    upper: tuple = ()
    weights: tuple = ()
    means: tuple = ()
    covariances: tuple = ()
    controller: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSettings
    pipeline: PipelineSettings
    source: str = ""

    def with_overrides(self, **kw):
        """Copy with pipeline fields replaced; ``None`` values are ignored."""
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        merged = asdict(self.pipeline)
        merged.update(kw)
        return replace(self, pipeline=_parse_pipeline(merged, self.scenario))

    def to_dict(self):
        """Plain-data echo; ``from_dict`` rebuilds an equal config from it."""
        sc = self.scenario
        out = {"scenario": {"kind": sc.kind, "name": sc.name}}
        if sc.kind == "toy":
            out["scenario"]["radius_scale"] = sc.radius_scale
        else:
            out["distribution"] = {
                "weights": list(sc.weights),
                "means": [list(m) for m in sc.means],
                "covariances": [[list(r) for r in c] for c in sc.covariances],
            }
            out["domain"] = {"lower": list(sc.lower), "upper": list(sc.upper)}
            out["controller"] = dict(sc.controller)
        pipe = asdict(self.pipeline)
        pipe["design_counts"] = list(pipe["design_counts"])
        out["pipeline"] = pipe
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# field checks


def _number(val, path):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"must be a number, got {type(val).__name__}")
    if not math.isfinite(val):
        raise ConfigError(path, "must be finite")
    return float(val)


def _integer(val, path, minimum=None):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or val != int(val):
        raise ConfigError(path, "must be an integer")
    val = int(val)
    if minimum is not None and val < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {val}")
    return val


def _vector(val, path, length=None):
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(path, "must be a non-empty list of numbers")
    out = tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(val))
    if length is not None and len(out) != length:
        raise ConfigError(path, f"must have length {length}, got {len(out)}")
    return out


def _table(doc, key, required=False):
    val = doc.get(key)
    if val is None:
        if required:
            raise ConfigError(key, "missing table")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(key, "must be a table")
    return val


def _reject_unknown(table, known, prefix):
    for key in table:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")


def _parse_pipeline(table, scenario):
    known = PipelineSettings.__dataclass_fields__
    _reject_unknown(table, known, "pipeline")
    d = asdict(PipelineSettings())
    d.update(table)
    p = "pipeline"
    out = dict(
        degree=_integer(d["degree"], f"{p}.degree", 1),
        components=_integer(d["components"], f"{p}.components", 1),
        fit_count=_integer(d["fit_count"], f"{p}.fit_count", 1),
        penalty=_number(d["penalty"], f"{p}.penalty"),
        max_epochs=_integer(d["max_epochs"], f"{p}.max_epochs", 1),
        svm_tolerance=_number(d["svm_tolerance"], f"{p}.svm_tolerance"),
        design=d["design"],
        design_count=_integer(d["design_count"], f"{p}.design_count", 1),
        samples=_integer(d["samples"], f"{p}.samples", 1),
        confidence=_number(d["confidence"], f"{p}.confidence"),
        seed=_integer(d["seed"], f"{p}.seed", 0),
        rounds=_integer(d["rounds"], f"{p}.rounds", 0),
        crude_samples=_integer(d["crude_samples"], f"{p}.crude_samples", 0),
        em_tol=_number(d["em_tol"], f"{p}.em_tol"),
        em_max_iter=_integer(d["em_max_iter"], f"{p}.em_max_iter", 1),
        em_ridge=_number(d["em_ridge"], f"{p}.em_ridge"),
    )
    if out["penalty"] <= 0:
        raise ConfigError(f"{p}.penalty", "must be positive")
    if out["svm_tolerance"] <= 0:
        raise ConfigError(f"{p}.svm_tolerance", "must be positive")
    if out["em_tol"] <= 0:
        raise ConfigError(f"{p}.em_tol", "must be positive")
    if not 0.0 < out["confidence"] < 1.0:
        raise ConfigError(f"{p}.confidence", "must lie strictly between 0 and 1")
    if out["components"] > out["fit_count"]:
        raise ConfigError(f"{p}.components", "cannot exceed fit_count")
    if out["design"] not in DESIGNS:
        raise ConfigError(f"{p}.design", f"must be one of {', '.join(DESIGNS)}")
    counts = d["design_counts"]
    if out["design"] == "grid":
        if not isinstance(counts, (list, tuple)) or not counts:
            raise ConfigError(f"{p}.design_counts", "grid design needs per-axis counts")
        counts = tuple(_integer(c, f"{p}.design_counts[{i}]", 2) for i, c in enumerate(counts))
        dim = 2 if scenario.kind == "toy" else len(scenario.lower)
        if len(counts) != dim:
            raise ConfigError(f"{p}.design_counts", f"must have one count per axis ({dim})")
    else:
        counts = tuple(_integer(c, f"{p}.design_counts[{i}]", 2) for i, c in enumerate(counts or ()))
    out["design_counts"] = counts
    return PipelineSettings(**out)


def _parse_gmm_tables(dist, dom):
    lower = _vector(dom.get("lower"), "domain.lower")
    n = len(lower)
    upper = _vector(dom.get("upper"), "domain.upper", n)
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        if not lo < hi:
            raise ConfigError(f"domain.upper[{i}]", "must exceed the lower bound")
    weights = _vector(dist.get("weights"), "distribution.weights")
    k = len(weights)
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ConfigError("distribution.weights", "must be non-negative and sum to 1")
    means = dist.get("means")
    if not isinstance(means, list) or len(means) != k:
        raise ConfigError("distribution.means", f"must list {k} mean vectors")
    means = tuple(_vector(m, f"distribution.means[{j}]", n) for j, m in enumerate(means))
    covs = dist.get("covariances")
    if not isinstance(covs, list) or len(covs) != k:
        raise ConfigError("distribution.covariances", f"must list {k} matrices")
    parsed = []
    for j, c in enumerate(covs):
        path = f"distribution.covariances[{j}]"
        if not isinstance(c, list) or len(c) != n:
            raise ConfigError(path, f"must be a {n}x{n} matrix")
        rows = tuple(_vector(r, f"{path}[{i}]", n) for i, r in enumerate(c))
        try:
            MultivariateGaussian(means[j], np.array(rows))
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
        parsed.append(rows)
    return lower, upper, weights, means, tuple(parsed)


def parse_config(doc, source=""):
    """Validate a parsed TOML/JSON document into a ``RunConfig``."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a table")
    _reject_unknown(doc, ("scenario", "distribution", "domain", "controller", "pipeline"), "<root>")
    sc = _table(doc, "scenario", required=True)
    _reject_unknown(sc, ("kind", "name", "radius_scale"), "scenario")
    kind = sc.get("kind")
    if kind not in KINDS:
        raise ConfigError("scenario.kind", f"must be one of {', '.join(KINDS)}")
    name = sc.get("name", kind)
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario.name", "must be a non-empty string")

    if kind == "toy":
        for key in ("distribution", "domain", "controller"):
            if key in doc:
                raise ConfigError(key, "not configurable for the toy scenario")
        scale = _number(sc.get("radius_scale", 1.0), "scenario.radius_scale")
        if scale < 0:
            raise ConfigError("scenario.radius_scale", "must be non-negative")
        scenario = ScenarioSettings(kind=kind, name=name, radius_scale=scale)
    else:
        if "radius_scale" in sc:
            raise ConfigError("scenario.radius_scale", "only applies to the toy scenario")
        lower, upper, weights, means, covs = _parse_gmm_tables(
            _table(doc, "distribution", required=True), _table(doc, "domain", required=True)
        )
        if len(lower) != 3:
            raise ConfigError("domain.lower", "lane-change states are 3-dimensional (v, Rdot, Rinv)")
        if not lower[2] > 0:
            raise ConfigError("domain.lower[2]", "inverse range must be positive")
        ctrl = _table(doc, "controller")
        from .scenarios import AvControllerParams

        params = AvControllerParams.from_dict(ctrl)
        scenario = ScenarioSettings(
            kind=kind, name=name, lower=lower, upper=upper, weights=weights, means=means,
            covariances=covs, controller=asdict(params),
        )
    pipeline = _parse_pipeline(_table(doc, "pipeline"), scenario)
    return RunConfig(scenario=scenario, pipeline=pipeline, source=source)


def load_config(name=None):
    """Load a built-in preset name, a TOML file, or a JSON manifest.

    A manifest (as written next to run artifacts) carries its config under
    the ``config`` key, so any run can be replayed from it.
    """
    name = "toy" if name is None else str(name)
    if name in BUILTIN:
        text = resources.files("accel_eval").joinpath("data", BUILTIN[name]).read_text()
        source = name
        suffix = ".toml"
    else:
        path = Path(name)
        if not path.is_file():
            raise ConfigError("--config", f"no built-in preset or file named {name!r}")
        text = path.read_text()
        source = str(path)
        suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from None
        if isinstance(doc, dict) and "config" in doc:
            doc = doc["config"]
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<root>", f"invalid TOML: {exc}") from None
    return parse_config(doc, source)


def load_scenario_config(config=None, default="lane-change"):
    """Resolve ``config`` (``RunConfig``, name, path, or ``None``) to scenario settings
    exposing ``name``, ``lower``, ``upper``, ``distribution`` and ``controller``."""
    from .scenarios import AvControllerParams

    cfg = config if isinstance(config, RunConfig) else load_config(default if config is None else config)
    sc = cfg.scenario
    if sc.kind != "lane-change":
        raise ConfigError("scenario.kind", "expected a lane-change config")
    return _LaneChangeSettings(
        name=sc.name,
        lower=np.array(sc.lower),
        upper=np.array(sc.upper),
        distribution=mixture_from_settings(sc),
        controller=AvControllerParams(**sc.controller),
    )


@dataclass(frozen=True, eq=False)
class _LaneChangeSettings:
    name: str
    lower: np.ndarray
    upper: np.ndarray
    distribution: GaussianMixture
    controller: object


def mixture_from_settings(sc):
    comps = [MultivariateGaussian(m, np.array(c)) for m, c in zip(sc.means, sc.covariances)]
    return GaussianMixture(np.array(sc.weights), comps)
