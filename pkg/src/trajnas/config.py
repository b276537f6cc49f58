"""Declarative run configuration: one JSON document, defaults merged, unknown keys rejected."""
from __future__ import annotations

import copy
import json

from .energy import EnergyWeights
from .exceptions import InvalidParams
from .search import SearchConfig

DEFAULTS = {
    "run_id": "run",
    "output_dir": "runs",
    "space": "desk",
    "energy": {"alpha": -1.0, "beta": 0.5, "gamma": 0.5},
    "search": {
        "algorithm": "mosa",
        "iterations": 108,
        "t_max": 2500.0,
        "t_min": 2.5,
        "seed": 0,
        "local_restart_patience": 10,
        "delta_scale": 30000.0,
    },
    "dataset": {
        "path": None,
        "seed": 0,
        "n_train_scenes": 40,
        "n_val_scenes": 20,
        "agents_per_scene": 20,
        "history": 4,
        "horizon": 6,
        "noise_sigma_m": 0.2,
        "dt": 0.5,
        "clutter_per_scene": 6,
        "clutter_min_distance_m": 3.0,
    },
    "evaluator": {
        "kind": "trained",
        "deterministic": True,
        "surrogate": {"seed": 0, "ruggedness": 0.5, "latency_scale": 1.0},
        "training": {
            "epochs": 5,
            "full_epochs": 20,
            "learning_rate": 5e-4,
            "batch_size": 4,
            "seed": 0,
            "k_hypotheses": 1,
            "input_dim": 32,
        },
        "latency": {"repetitions": 20, "warmup": 3},
        "dist_threshold_m": 2.0,
    },
}

# keys whose value may be null as well as the default's type
_NULLABLE = {"dataset.path", "search.delta_scale"}
_CHOICES = {
    "search.algorithm": ("mosa", "random", "local"),
    "evaluator.kind": ("surrogate", "trained"),
    "space": ("desk", "compact"),
}


def _type_ok(value, default):
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str) or default is None:
        return isinstance(value, str)
    return False


def _merge(base, override, prefix=""):
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise InvalidParams(f"unknown config key {path!r}")
        default = base[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise InvalidParams(f"config key {path!r} must be an object")
            _merge(default, value, path + ".")
            continue
        if value is None and path in _NULLABLE:
            base[key] = None
            continue
        reference = DEFAULTS_FLAT.get(path, default)
        if not _type_ok(value, reference):
            raise InvalidParams(f"config key {path!r} has the wrong type: {value!r}")
        if path in _CHOICES and value not in _CHOICES[path]:
            raise InvalidParams(f"config key {path!r} must be one of {_CHOICES[path]}, got {value!r}")
        base[key] = float(value) if isinstance(reference, float) else value


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, f"{prefix}{k}."))
        else:
            out[f"{prefix}{k}"] = v
    return out


DEFAULTS_FLAT = _flatten(DEFAULTS)


class RunConfig:
    """Validated configuration document with typed views for each subsystem."""

    def __init__(self, data=None):
        self.data = copy.deepcopy(DEFAULTS)
        if data:
            _merge(self.data, data)
        # validate eagerly so bad values surface at load time
        self.search_config()
        self.weights()

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidParams("config must be a JSON object")
        return cls(data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def override(self, dotted: dict):
        """Apply ``{"search.seed": 3, ...}`` overrides; returns a new config."""
        nested = {}
        for path, value in dotted.items():
            node = nested
            *parents, leaf = path.split(".")
            for p in parents:
                node = node.setdefault(p, {})
            node[leaf] = value
        merged = copy.deepcopy(self.data)
        _merge(merged, nested)
        return RunConfig(merged)

    def __getitem__(self, key):
        return self.data[key]

    def search_config(self, **changes):
        s = dict(self.data["search"], **changes)
        return SearchConfig(**s)

    def weights(self):
        try:
            return EnergyWeights(**self.data["energy"])
        except ValueError as exc:
            raise InvalidParams(str(exc)) from exc

    def space(self):
        from .genome import default_space

        return default_space(self.data["space"])

    def dataset_kwargs(self):
        return {k: v for k, v in self.data["dataset"].items() if k != "path"}

    def surrogate_spec(self):
        from .surrogate import SurrogateSpec

        s = self.data["evaluator"]["surrogate"]
        return SurrogateSpec(s["seed"], self.space(), s["ruggedness"], s["latency_scale"])

    def eval_config(self, full=False, deterministic=None):
        from .forecaster.evaluate import EvalConfig

        ev = self.data["evaluator"]
        det = ev["deterministic"] if deterministic is None else deterministic
        return EvalConfig(deterministic=det, dist_threshold_m=ev["dist_threshold_m"],
                          latency_repetitions=ev["latency"]["repetitions"],
                          latency_warmup=ev["latency"]["warmup"], full=full, **ev["training"])
