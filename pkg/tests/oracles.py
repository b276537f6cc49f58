"""Independent reference implementations used as test oracles.

They favour obviousness over speed: exact fractions, exhaustive enumeration
and hand-expanded closed forms.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def ap_exhaustive(seq, n_gt, n_points=40):
    """40-point interpolated AP over the exact precision/recall curve, in exact arithmetic."""
    if n_gt == 0:
        return Fraction(0) if seq else Fraction(1)
    points, tp = [], 0
    for i, hit in enumerate(seq, start=1):
        tp += bool(hit)
        points.append((Fraction(tp, n_gt), Fraction(tp, i)))
    total = Fraction(0)
    for j in range(1, n_points + 1):
        level = Fraction(j, n_points)
        reachable = [p for r, p in points if r >= level]
        total += max(reachable) if reachable else 0
    return total / n_points


def _dist(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


def valid_assignments(det_centers, gt_centers, threshold):
    """Every partial injective detection->GT map respecting the distance threshold."""
    options = [
        [None] + [j for j, g in enumerate(gt_centers) if _dist(d, g) <= threshold]
        for d in det_centers
    ]
    for combo in itertools.product(*options):
        used = [j for j in combo if j is not None]
        if len(used) == len(set(used)):
            yield combo


def greedy_by_enumeration(det_centers, gt_centers, threshold):
    """Lexicographically best assignment in confidence order (detections given sorted).

    Each detection ranks GTs by distance (nearest first) and "unmatched" last;
    the winner is the assignment whose rank vector is lexicographically smallest.
    """
    def rank(i, j):
        if j is None:
            return (1, 0.0, 0)
        return (0, _dist(det_centers[i], gt_centers[j]), j)

    return min(valid_assignments(det_centers, gt_centers, threshold),
               key=lambda combo: [rank(i, j) for i, j in enumerate(combo)])


def max_cardinality_matching(det_centers, gt_centers, threshold):
    return max(sum(j is not None for j in c) for c in valid_assignments(det_centers, gt_centers, threshold))


def ctrv_cv_deviation(speed, turn_rate, dt, history, horizon):
    """Final-position error of least-squares constant-velocity extrapolation of a noiseless arc."""
    pts = []
    for k in range(-history + 1, horizon + 1):
        t = k * dt
        th = turn_rate * t
        pts.append((speed / turn_rate * math.sin(th), speed / turn_rate * (1 - math.cos(th))))
    past, fut = pts[:history], pts[history:]
    ts = [k * dt for k in range(history)]
    tm = sum(ts) / history
    den = sum((t - tm) ** 2 for t in ts)
    vx = sum((t - tm) * p[0] for t, p in zip(ts, past)) / den
    vy = sum((t - tm) * p[1] for t, p in zip(ts, past)) / den
    px = past[-1][0] + vx * dt * horizon
    py = past[-1][1] + vy * dt * horizon
    return math.hypot(px - fut[-1][0], py - fut[-1][1])


def dense_params(fan_in, fan_out, bias=True):
    return fan_in * fan_out + (fan_out if bias else 0)


def random_eval_set(seed, k=5):
    """Random detections (K hypotheses each) against ground truth from a synthetic scene set."""
    import numpy as np

    from trajnas.metrics import Detection, ForecastHypothesis, ground_truth_from_scenes
    from trajnas.synthdata import generate_dataset

    rng = np.random.default_rng(seed)
    data = generate_dataset(seed=seed, n_train_scenes=1, n_val_scenes=2, agents_per_scene=int(rng.integers(3, 12)),
                            clutter_per_scene=2)
    gts = ground_truth_from_scenes(data.val)
    dets = []
    for g in gts:
        if rng.random() < 0.2:
            continue  # missed agent
        center = np.array(g.center) + rng.normal(0, rng.uniform(0.1, 1.5), 2)
        fut = np.array(g.future)
        hyps = []
        for _ in range(k):
            drift = rng.normal(0, rng.uniform(0.1, 2.5), 2)
            hyps.append(fut + np.linspace(0, 1, len(fut))[:, None] * drift)
        conf = rng.dirichlet(np.ones(k))
        order = np.argsort(-conf)
        dets.append(Detection(tuple(center), float(rng.random()),
                              tuple(ForecastHypothesis(tuple(map(tuple, hyps[i])), float(conf[i])) for i in order),
                              g.scene_id))
    for _ in range(int(rng.integers(0, 6))):
        sid = int(rng.choice([g.scene_id for g in gts]))
        c = rng.uniform(-50, 50, 2)
        hyps = tuple(ForecastHypothesis(tuple(map(tuple, c + rng.normal(0, 1, (6, 2)))), 1.0 / k) for _ in range(k))
        dets.append(Detection(tuple(c), float(rng.random()), hyps, sid))
    return dets, gts


def linear_only_dataset(seed=0, noise_sigma_m=0.0, **kw):
    """Synthetic dataset keeping only constant-velocity agents and no clutter."""
    from dataclasses import replace

    from trajnas.synthdata import generate_dataset

    data = generate_dataset(seed=seed, noise_sigma_m=noise_sigma_m, clutter_per_scene=0, **kw)

    def keep(scenes):
        return tuple(replace(s, tracks=tuple(t for t in s.tracks if t.motion == "linear"))
                     for s in scenes)

    return replace(data, train=keep(data.train), val=keep(data.val), mini_train=keep(data.mini_train),
                   mini_val=keep(data.mini_val))
