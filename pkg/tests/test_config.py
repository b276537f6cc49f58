import json

import pytest

from trajnas.config import DEFAULTS, RunConfig
from trajnas.energy import EnergyWeights
from trajnas.exceptions import InvalidParams
from trajnas.search import SearchConfig


def test_defaults():
    cfg = RunConfig()
    assert cfg.search_config() == SearchConfig()
    assert cfg.weights() == EnergyWeights()
    assert cfg.space().name == "desk"
    assert cfg["evaluator"]["kind"] == "trained"


def test_json_round_trip():
    cfg = RunConfig({"search": {"iterations": 12, "algorithm": "local"}, "space": "compact"})
    back = RunConfig.from_json(cfg.to_json())
    assert back.data == cfg.data
    assert back.search_config().iterations == 12 and back.space().name == "compact"
    assert json.loads(cfg.to_json())["search"]["t_max"] == 2500.0


def test_ints_promoted_to_floats():
    cfg = RunConfig({"search": {"t_max": 100}})
    assert isinstance(cfg["search"]["t_max"], float)


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"search": {"speed": 3}},
    {"search": {"iterations": "ten"}},
    {"search": {"iterations": 1.5}},
    {"search": {"algorithm": "genetic"}},
    {"search": {"t_min": 0}},
    {"space": "huge"},
    {"evaluator": {"deterministic": 1}},
    {"energy": "fast"},
    {"search": {"iterations": True}},
])
def test_rejected(doc):
    with pytest.raises(InvalidParams):
        RunConfig(doc)


def test_bad_json():
    with pytest.raises(InvalidParams):
        RunConfig.from_json("{not json")
    with pytest.raises(InvalidParams):
        RunConfig.from_json("[1, 2]")


def test_override_and_nullables():
    cfg = RunConfig().override({"search.seed": 4, "dataset.path": "x.json", "search.delta_scale": None})
    assert cfg.search_config().seed == 4 and cfg.search_config().delta_scale is None
    assert cfg["dataset"]["path"] == "x.json"
    assert "path" not in cfg.dataset_kwargs()
    assert RunConfig()["search"]["seed"] == DEFAULTS["search"]["seed"]  # defaults untouched


def test_eval_config_view():
    cfg = RunConfig({"evaluator": {"training": {"epochs": 2}, "deterministic": False}})
    ec = cfg.eval_config(full=True)
    assert ec.epochs == 2 and ec.full and not ec.deterministic
    assert cfg.eval_config(deterministic=True).deterministic


def test_surrogate_spec_view():
    cfg = RunConfig({"space": "compact", "evaluator": {"surrogate": {"seed": 9, "ruggedness": 0.0}}})
    spec = cfg.surrogate_spec()
    assert spec.seed == 9 and spec.ruggedness == 0.0 and spec.space.name == "compact"
