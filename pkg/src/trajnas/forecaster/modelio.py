"""``.tnmodel`` files: one JSON header line, then raw little-endian float64 parameters."""
from __future__ import annotations

import json

import numpy as np

from ..exceptions import FormatError
from ..genome import deserialize, serialize, space_from_dict, space_to_dict
from .network import instantiate

MAGIC = "tnmodel"
VERSION = 1


def dumps_model(model) -> bytes:
    header = {
        "format": MAGIC,
        "version": VERSION,
        "genome": serialize(model.genome),
        "space": space_to_dict(model.space),
        "input_dim": model.input_dim,
        "k_hypotheses": model.k_hypotheses,
        "history": model.history,
        "horizon": model.horizon,
        "dt": model.dt,
        "init_seed": model.init_seed,
        "n_params": int(model.parameters.size),
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n"
    return head + np.asarray(model.parameters, dtype="<f8").tobytes()


def loads_model(blob: bytes):
    head, sep, body = blob.partition(b"\n")
    if not sep:
        raise FormatError("model file has no header line")
    try:
        h = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable model header: {exc}") from exc
    if h.get("format") != MAGIC:
        raise FormatError("not a tnmodel file")
    if h.get("version") != VERSION:
        raise FormatError(f"unsupported tnmodel version {h.get('version')!r}")
    try:
        space = space_from_dict(h["space"])
        genome = deserialize(h["genome"], space)
        model = instantiate(genome, space, init_seed=h["init_seed"], input_dim=h["input_dim"],
                            k_hypotheses=h["k_hypotheses"], history=h["history"], horizon=h["horizon"],
                            dt=h["dt"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid model header: {exc}") from exc
    if len(body) != 8 * h["n_params"] or h["n_params"] != model.parameters.size:
        raise FormatError(f"parameter block holds {len(body) // 8} values, architecture needs "
                          f"{model.parameters.size}")
    return model.with_parameters(np.frombuffer(body, dtype="<f8").astype(np.float64))


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, "rb") as fh:
        return loads_model(fh.read())
