import json

import pytest

from accel_eval.config import BUILTIN, load_config, parse_config
from accel_eval.exceptions import ConfigError
from accel_eval.scenarios import lane_change_scenario


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_builtins_load(name):
    cfg = load_config(name)
    assert cfg.scenario.name == name
    assert cfg.pipeline.seed == 0


def test_inflated_preset():
    assert load_config("toy-inflated").scenario.radius_scale == 3.0


def test_lane_change_preset():
    cfg = load_config("lane-change")
    p = cfg.pipeline
    assert p.design == "grid" and p.design_counts == (28, 28, 26)
    assert p.samples == 200_000
    assert lane_change_scenario(cfg).dimension == 3


def test_round_trip_through_dict():
    for name in BUILTIN:
        cfg = load_config(name)
        again = parse_config(json.loads(cfg.to_json()))
        assert again.to_dict() == cfg.to_dict()


def test_overrides():
    cfg = load_config("toy").with_overrides(seed=7, samples=None)
    assert cfg.pipeline.seed == 7 and cfg.pipeline.samples == 2000


@pytest.mark.parametrize("patch, field", [
    ({"pipeline": {"components": 0}}, "pipeline.components"),
    ({"pipeline": {"confidence": 1.0}}, "pipeline.confidence"),
    ({"pipeline": {"samples": -5}}, "pipeline.samples"),
    ({"pipeline": {"degree": 1.5}}, "pipeline.degree"),
    ({"pipeline": {"penalty": "big"}}, "pipeline.penalty"),
    ({"pipeline": {"design": "sobol"}}, "pipeline.design"),
    ({"pipeline": {"design": "grid", "design_counts": [10]}}, "pipeline.design_counts"),
    ({"pipeline": {"mixtures": 3}}, "pipeline.mixtures"),
    ({"scenario": {"kind": "toy", "radius_scale": -1}}, "scenario.radius_scale"),
    ({"scenario": {"kind": "bike"}}, "scenario.kind"),
    ({"extra": {}}, "<root>.extra"),
])
def test_invalid_toy_fields(patch, field):
    doc = {"scenario": {"kind": "toy"}}
    doc.update(patch)
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert err.value.field == field


def _lane_doc():
    return load_config("lane-change").to_dict()


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["distribution"].update(weights=[0.5, 0.6]), "distribution.weights"),
    (lambda d: d["distribution"]["means"].pop(), "distribution.means"),
    (lambda d: d["distribution"]["covariances"][0][0].__setitem__(0, -1.0), "distribution.covariances[0]"),
    (lambda d: d["domain"]["lower"].__setitem__(2, 0.0), "domain.lower[2]"),
    (lambda d: d["domain"]["upper"].__setitem__(0, 5.0), "domain.upper[0]"),
    (lambda d: d["controller"].update(dt=-1.0), "controller.dt"),
    (lambda d: d["controller"].update(gain=1.0), "controller.gain"),
    (lambda d: d["scenario"].update(radius_scale=2.0), "scenario.radius_scale"),
])
def test_invalid_lane_change_fields(mutate, field):
    doc = _lane_doc()
    mutate(doc)
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert err.value.field == field


def test_bad_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[pipeline\ncomponents = 3\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_manifest_json_accepted(tmp_path):
    cfg = load_config("toy").with_overrides(seed=3)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"seed": 3, "config": cfg.to_dict()}))
    assert load_config(path).to_dict() == cfg.to_dict()
