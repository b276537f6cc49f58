"""Seeded synthetic bird's-eye-view scenes.

Each agent follows one of three motion models over ``H`` past and ``F``
future frames spaced ``dt`` seconds apart:

* ``static``     creeps at under 0.04 m/s
* ``linear``     constant velocity
* ``nonlinear``  constant speed and constant turn rate, ``|omega| >= 0.1`` rad/s

Observed past positions carry isotropic Gaussian noise; futures are exact.
Each scene also holds clutter points: spurious t=0 observations that a
detector should learn to reject.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import FormatError, InvalidParams
from .genome import make_rng

FORMAT_VERSION = 1
MOTIONS = ("static", "linear", "nonlinear")
MOTION_MIX = (0.30, 0.40, 0.30)
CLASS_MIX = {"car": 0.8, "pedestrian": 0.2}
MINI_SCENES = 10

# speed (m/s) and |turn rate| (rad/s) ranges per class and motion
_SPEEDS = {
    ("car", "linear"): (2.0, 12.0),
    ("car", "nonlinear"): (4.0, 12.0),
    ("pedestrian", "linear"): (0.8, 2.0),
    ("pedestrian", "nonlinear"): (1.2, 2.0),
}
_TURN_RATES = {"car": (0.1, 0.5), "pedestrian": (0.4, 0.8)}
_STATIC_CREEP = 0.04
_DIMS = {
    "car": ((3.8, 5.0), (1.7, 2.0), (1.4, 1.9)),
    "pedestrian": ((0.5, 0.8), (0.5, 0.8), (1.5, 1.9)),
}
_SCENE_HALF_EXTENT = 50.0
_MIN_AGENT_SEPARATION = 4.0


@dataclass(frozen=True)
class AgentTrack:
    agent_id: int
    class_label: str
    motion: str
    past_poses: tuple  # observed (noisy) (x, y, heading, z), times -H+1 .. 0
    future_poses: tuple  # ground truth, times 1 .. F
    dims: tuple  # (length, width, height)
    dt_s: float = 0.5
    past_poses_gt: tuple = ()  # noiseless past; empty when unknown

    def __post_init__(self):
        for name in ("past_poses", "future_poses", "past_poses_gt"):
            object.__setattr__(self, name, tuple(tuple(float(v) for v in p) for p in getattr(self, name)))
        object.__setattr__(self, "dims", tuple(float(v) for v in self.dims))

    @property
    def history(self):
        return len(self.past_poses)

    @property
    def horizon(self):
        return len(self.future_poses)

    def past_array(self, ground_truth=False):
        poses = self.past_poses_gt if ground_truth and self.past_poses_gt else self.past_poses
        return np.array(poses, dtype=np.float64)

    def future_array(self):
        return np.array(self.future_poses, dtype=np.float64)

    @property
    def center_t0(self):
        """Ground-truth center at t=0 (falls back to the observation)."""
        pose = (self.past_poses_gt or self.past_poses)[-1]
        return pose[0], pose[1]


@dataclass(frozen=True)
class Scene:
    scene_id: int
    tracks: tuple
    clutter: tuple = ()
    noise_sigma_m: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "clutter", tuple((float(x), float(y)) for x, y in self.clutter))


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    mini_train: tuple
    mini_val: tuple
    config: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True, eq=False)
class Candidate:
    """One detector input: an observed history plus, for real agents, its track."""

    scene_id: int
    past: np.ndarray  # (H, 4) observed poses
    track: AgentTrack | None

    @property
    def is_agent(self):
        return self.track is not None


def ctrv_positions(times, x0, y0, heading0, speed, turn_rate):
    """Positions and headings under constant speed and turn rate (straight line if rate is 0)."""
    times = np.asarray(times, dtype=np.float64)
    heading = heading0 + turn_rate * times
    if turn_rate == 0.0:
        x = x0 + speed * times * math.cos(heading0)
        y = y0 + speed * times * math.sin(heading0)
    else:
        r = speed / turn_rate
        x = x0 + r * (np.sin(heading) - math.sin(heading0))
        y = y0 - r * (np.cos(heading) - math.cos(heading0))
    return x, y, heading


def _sample_agent(rng, agent_id, x0, y0, history, horizon, dt, noise_sigma):
    class_label = "car" if rng.random() < CLASS_MIX["car"] else "pedestrian"
    motion = MOTIONS[int(np.searchsorted(np.cumsum(MOTION_MIX), rng.random(), side="right"))]
    heading0 = rng.uniform(-math.pi, math.pi)
    dims = tuple(rng.uniform(lo, hi) for lo, hi in _DIMS[class_label])
    turn_rate = 0.0
    if motion == "static":
        speed = rng.uniform(0.0, _STATIC_CREEP)
    else:
        speed = rng.uniform(*_SPEEDS[(class_label, motion)])
        if motion == "nonlinear":
            turn_rate = rng.uniform(*_TURN_RATES[class_label]) * (1 if rng.random() < 0.5 else -1)
    times = np.arange(-(history - 1), horizon + 1) * dt
    x, y, heading = ctrv_positions(times, x0, y0, heading0, speed, turn_rate)
    z = np.full_like(x, dims[2] / 2.0)
    poses = np.stack([x, y, heading, z], axis=1)
    past_gt, future = poses[:history], poses[history:]
    past_obs = past_gt.copy()
    if noise_sigma > 0:
        past_obs[:, :2] += rng.normal(0.0, noise_sigma, size=(history, 2))
    return AgentTrack(
        agent_id=agent_id,
        class_label=class_label,
        motion=motion,
        past_poses=past_obs.tolist(),
        future_poses=future.tolist(),
        dims=dims,
        dt_s=dt,
        past_poses_gt=past_gt.tolist(),
    )


def generate_scene(seed, scene_id, agents_per_scene=20, history=4, horizon=6, noise_sigma_m=0.2,
                   dt=0.5, clutter_per_scene=6, clutter_min_distance_m=3.0):
    rng = make_rng(seed, 0x5CE4E, scene_id)
    centers = []
    while len(centers) < agents_per_scene:
        c = rng.uniform(-_SCENE_HALF_EXTENT, _SCENE_HALF_EXTENT, size=2)
        if all(np.hypot(*(c - o)) >= _MIN_AGENT_SEPARATION for o in centers):
            centers.append(c)
    tracks = [
        _sample_agent(rng, i, c[0], c[1], history, horizon, dt, noise_sigma_m)
        for i, c in enumerate(centers)
    ]
    clutter = []
    t0 = [t.center_t0 for t in tracks]
    while len(clutter) < clutter_per_scene:
        c = rng.uniform(-_SCENE_HALF_EXTENT, _SCENE_HALF_EXTENT, size=2)
        if all(math.hypot(c[0] - x, c[1] - y) >= clutter_min_distance_m for x, y in t0):
            clutter.append((float(c[0]), float(c[1])))
    return Scene(scene_id, tuple(tracks), tuple(clutter), float(noise_sigma_m))


def generate_dataset(seed=0, n_train_scenes=40, n_val_scenes=20, agents_per_scene=20, history=4,
                     horizon=6, noise_sigma_m=0.2, dt=0.5, clutter_per_scene=6,
                     clutter_min_distance_m=3.0) -> DatasetSplit:
    """Generate train/val scenes; the mini splits are the first 10 scenes of each."""
    checks = {
        "n_train_scenes": n_train_scenes >= 1,
        "n_val_scenes": n_val_scenes >= 1,
        "agents_per_scene": agents_per_scene >= 1,
        "history": history >= 2,
        "horizon": horizon >= 1,
        "noise_sigma_m": noise_sigma_m >= 0,
        "dt": dt > 0,
        "clutter_per_scene": clutter_per_scene >= 0,
        "clutter_min_distance_m": clutter_min_distance_m >= 1.0,
    }
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise InvalidParams(f"invalid dataset parameters: {', '.join(bad)}")
    config = dict(
        seed=seed, n_train_scenes=n_train_scenes, n_val_scenes=n_val_scenes,
        agents_per_scene=agents_per_scene, history=history, horizon=horizon,
        noise_sigma_m=noise_sigma_m, dt=dt, clutter_per_scene=clutter_per_scene,
        clutter_min_distance_m=clutter_min_distance_m,
    )
    kw = dict(agents_per_scene=agents_per_scene, history=history, horizon=horizon,
              noise_sigma_m=noise_sigma_m, dt=dt, clutter_per_scene=clutter_per_scene,
              clutter_min_distance_m=clutter_min_distance_m)
    train = tuple(generate_scene(seed, i, **kw) for i in range(n_train_scenes))
    val = tuple(generate_scene(seed, n_train_scenes + i, **kw) for i in range(n_val_scenes))
    return DatasetSplit(train, val, train[:MINI_SCENES], val[:MINI_SCENES], config)


def observation_candidates(scene: Scene, history=None, dt=None):
    """Detector inputs for a scene: every agent plus one pseudo-history per clutter point.

    Clutter histories jitter incoherently around the clutter point with random
    headings and near-ground heights. The list order is a seeded shuffle, so it
    carries no information about which entries are real.
    """
    if history is None:
        history = scene.tracks[0].history if scene.tracks else 4
    out = [Candidate(scene.scene_id, t.past_array(), t) for t in scene.tracks]
    for j, (x, y) in enumerate(scene.clutter):
        rng = make_rng(scene.scene_id, 0xC1077E4, j)
        past = np.empty((history, 4))
        past[:, 0] = x + rng.uniform(-1.0, 1.0, size=history)
        past[:, 1] = y + rng.uniform(-1.0, 1.0, size=history)
        past[-1, :2] = (x, y)
        past[:, 2] = rng.uniform(-math.pi, math.pi, size=history)
        past[:, 3] = rng.uniform(0.0, 0.4, size=history)
        out.append(Candidate(scene.scene_id, past, None))
    order = make_rng(scene.scene_id, 0x0DE4).permutation(len(out))
    return [out[i] for i in order]


def subclass_counts(scenes):
    counts = dict.fromkeys(MOTIONS, 0)
    for s in scenes:
        for t in s.tracks:
            counts[t.motion] += 1
    return counts


# -- serialisation -------------------------------------------------------------

def _scene_to_dict(scene):
    return {
        "scene_id": scene.scene_id,
        "tracks": [asdict(t) for t in scene.tracks],
        "clutter": [list(c) for c in scene.clutter],
        "noise_sigma_m": scene.noise_sigma_m,
    }


def _scene_from_dict(d):
    tracks = tuple(AgentTrack(**t) for t in d["tracks"])
    return Scene(int(d["scene_id"]), tracks, tuple(tuple(c) for c in d.get("clutter", ())),
                 float(d.get("noise_sigma_m", 0.0)))


def scenes_to_json(scenes):
    return [_scene_to_dict(s) for s in scenes]


def scenes_from_json(items):
    try:
        return tuple(_scene_from_dict(d) for d in items)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed scene record: {exc}") from exc


def dumps_dataset(d: DatasetSplit) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "config": d.config,
        "splits": {
            "train": scenes_to_json(d.train),
            "val": scenes_to_json(d.val),
            "mini_train": scenes_to_json(d.mini_train),
            "mini_val": scenes_to_json(d.mini_val),
        },
    }
    return json.dumps(doc, sort_keys=True)


def loads_dataset(text: str) -> DatasetSplit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"dataset file is not valid JSON (truncated?): {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise FormatError("dataset document lacks a version tag")
    if doc["version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported dataset version {doc['version']!r} (expected {FORMAT_VERSION})")
    try:
        splits = doc["splits"]
        parts = {k: scenes_from_json(splits[k]) for k in ("train", "val", "mini_train", "mini_val")}
    except KeyError as exc:
        raise FormatError(f"dataset document missing split {exc}") from exc
    return DatasetSplit(config=doc.get("config", {}), **parts)


def serialize_dataset(d: DatasetSplit, path):
    Path(path).write_text(dumps_dataset(d), encoding="utf-8")


def load_dataset(path) -> DatasetSplit:
    return loads_dataset(Path(path).read_text(encoding="utf-8"))
