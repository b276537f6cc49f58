import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ctrv_cv_deviation
from trajnas.exceptions import FormatError, InvalidParams
from trajnas.synthdata import (
    MOTIONS,
    dumps_dataset,
    generate_dataset,
    load_dataset,
    loads_dataset,
    observation_candidates,
    serialize_dataset,
    subclass_counts,
)


def _tracks(d):
    return [t for s in list(d.train) + list(d.val) for t in s.tracks]


def test_same_seed_byte_identical():
    a = dumps_dataset(generate_dataset(seed=4, n_train_scenes=3, n_val_scenes=2))
    b = dumps_dataset(generate_dataset(seed=4, n_train_scenes=3, n_val_scenes=2))
    assert a == b
    assert a != dumps_dataset(generate_dataset(seed=5, n_train_scenes=3, n_val_scenes=2))


def test_noiseless_linear_past_is_collinear_and_evenly_spaced():
    d = generate_dataset(seed=1, n_train_scenes=5, n_val_scenes=1, noise_sigma_m=0.0)
    lin = [t for t in _tracks(d) if t.motion == "linear"]
    assert lin
    for t in lin:
        p = t.past_array()[:, :2]
        steps = np.diff(p, axis=0)
        assert np.allclose(steps, steps[0], atol=1e-9)


@settings(max_examples=10)
@given(st.integers(0, 2**32), st.integers(2, 8), st.integers(1, 8))
def test_motion_invariants(seed, history, horizon):
    d = generate_dataset(seed=seed, n_train_scenes=2, n_val_scenes=1, history=history, horizon=horizon,
                         agents_per_scene=8)
    for s in list(d.train) + list(d.val):
        assert len({t.agent_id for t in s.tracks}) == len(s.tracks)
        centers = [t.center_t0 for t in s.tracks]
        for c in s.clutter:
            assert min(math.hypot(c[0] - x, c[1] - y) for x, y in centers) >= 1.0
        for t in s.tracks:
            assert t.history == history and t.horizon == horizon
            gt = np.concatenate([t.past_array(ground_truth=True), t.future_array()])
            steps = np.linalg.norm(np.diff(gt[:, :2], axis=0), axis=1)
            if t.motion == "static":
                assert steps.max() < 0.05
            elif t.motion == "linear":
                v = gt[1, :2] - gt[0, :2]
                pred = gt[0, :2] + np.arange(len(gt))[:, None] * v
                assert np.abs(pred - gt[:, :2]).max() < 1e-6
            else:
                turn = np.diff(gt[:, 2]) / t.dt_s
                assert np.allclose(turn, turn[0]) and abs(turn[0]) >= 0.1 - 1e-12
            # futures are exact; observations differ from ground truth only by the noise
            assert np.array_equal(t.past_array()[:, 2:], t.past_array(ground_truth=True)[:, 2:])


def test_linear_future_equals_constant_velocity_extrapolation():
    d = generate_dataset(seed=2, n_train_scenes=4, n_val_scenes=1)
    for t in _tracks(d):
        if t.motion != "linear":
            continue
        past = t.past_array(ground_truth=True)[:, :2]
        v = past[-1] - past[-2]
        expected = past[-1] + np.arange(1, t.horizon + 1)[:, None] * v
        assert np.abs(expected - t.future_array()[:, :2]).max() < 1e-9


def test_subclass_mix_monte_carlo():
    d = generate_dataset(seed=0, n_train_scenes=150, n_val_scenes=50, agents_per_scene=10)
    counts = subclass_counts(list(d.train) + list(d.val))
    n = sum(counts.values())
    assert n == 2000
    for m, target in zip(MOTIONS, (0.30, 0.40, 0.30)):
        assert abs(counts[m] / n - target) <= 0.03


@pytest.mark.parametrize("history", [2, 4, 8])
def test_nonlinear_deviation_exceeds_threshold(history):
    # slowest, gentlest nonlinear agents over the shortest horizon checked (F = 4)
    for speed, rate in [(4.0, 0.1), (1.2, 0.4)]:
        assert ctrv_cv_deviation(speed, rate, 0.5, history, 4) > 0.5


def test_nonlinear_agents_classified_at_zero_noise():
    from trajnas.metrics import classify_motion

    d = generate_dataset(seed=8, n_train_scenes=10, n_val_scenes=5, noise_sigma_m=0.0)
    tracks = _tracks(d)
    assert all(classify_motion(t) == t.motion for t in tracks)


def test_mini_splits():
    d = generate_dataset(seed=0, n_train_scenes=12, n_val_scenes=4)
    assert [s.scene_id for s in d.mini_train] == [s.scene_id for s in d.train[:10]]
    assert d.mini_val == d.val
    assert {s.scene_id for s in d.train}.isdisjoint(s.scene_id for s in d.val)


@pytest.mark.parametrize("kw,name", [
    (dict(n_train_scenes=0), "n_train_scenes"),
    (dict(agents_per_scene=0), "agents_per_scene"),
    (dict(history=1), "history"),
    (dict(horizon=0), "horizon"),
    (dict(noise_sigma_m=-1), "noise_sigma_m"),
])
def test_invalid_params_name_the_field(kw, name):
    with pytest.raises(InvalidParams, match=name):
        generate_dataset(**kw)


def test_round_trip(tmp_path, small_data):
    p = tmp_path / "d.json"
    serialize_dataset(small_data, p)
    back = load_dataset(p)
    assert back == small_data
    assert dumps_dataset(back) == dumps_dataset(small_data)


def test_truncated_file(tmp_path, small_data):
    p = tmp_path / "d.json"
    p.write_text(dumps_dataset(small_data)[:500])
    with pytest.raises(FormatError):
        load_dataset(p)


def test_unknown_version_named(small_data):
    doc = json.loads(dumps_dataset(small_data))
    doc["version"] = 7
    with pytest.raises(FormatError, match="7"):
        loads_dataset(json.dumps(doc))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_dataset(tmp_path / "nope.json")


def test_observation_candidates(small_data):
    s = small_data.train[0]
    cands = observation_candidates(s)
    assert len(cands) == len(s.tracks) + len(s.clutter)
    assert sum(c.is_agent for c in cands) == len(s.tracks)
    for c in cands:
        assert c.past.shape == (4, 4) and np.all(np.isfinite(c.past))
        if not c.is_agent:
            assert any(np.allclose(c.past[-1, :2], xy) for xy in s.clutter)
    # deterministic order
    again = observation_candidates(s)
    assert [c.is_agent for c in cands] == [c.is_agent for c in again]
    assert all(np.array_equal(a.past, b.past) for a, b in zip(cands, again))
