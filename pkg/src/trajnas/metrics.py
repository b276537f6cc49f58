"""Detection and forecasting evaluation.

Ground-truth agents are split into static, linear and nonlinear subclasses.
Detections are matched greedily in descending confidence order; forecasting
mode additionally requires one of the top-K hypotheses to end within the
distance threshold of the matched agent's final position. AP uses 40-point
interpolation and mAP is the unweighted mean over the three subclasses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateTrack, LengthMismatch, UnsortedInput
from .synthdata import MOTIONS, AgentTrack

STATIC_DISPLACEMENT_M = 1.0
LINEAR_DEVIATION_M = 0.5
DIST_THRESHOLD_M = 2.0
AP_RECALL_POINTS = 40


@dataclass(frozen=True)
class ForecastHypothesis:
    future_centers: tuple  # ((x, y), ...) length F
    confidence: float


@dataclass(frozen=True)
class Detection:
    center: tuple
    confidence: float
    forecasts: tuple  # ForecastHypothesis, sorted by descending confidence
    source_scene: int = 0

    def to_dict(self):
        return {
            "center": list(self.center),
            "confidence": self.confidence,
            "forecasts": [
                {"future_centers": [list(p) for p in h.future_centers], "confidence": h.confidence}
                for h in self.forecasts
            ],
            "source_scene": self.source_scene,
        }

    @classmethod
    def from_dict(cls, d):
        hyps = tuple(
            ForecastHypothesis(tuple(tuple(map(float, p)) for p in h["future_centers"]), float(h["confidence"]))
            for h in d["forecasts"]
        )
        hyps = tuple(sorted(hyps, key=lambda h: -h.confidence))
        return cls(tuple(map(float, d["center"])), float(d["confidence"]), hyps, int(d.get("source_scene", 0)))


@dataclass(frozen=True)
class GroundTruth:
    scene_id: int
    center: tuple
    future: tuple  # ((x, y), ...)
    subclass: str

    @property
    def final(self):
        return self.future[-1]


@dataclass
class MatchResult:
    tp: list  # bool per detection, input order
    matched_gt: list  # gt index per detection or -1
    n_fn: int


@dataclass
class EvalReport:
    ap_det: dict
    ap_f: dict
    map_det: float
    map_f: float
    ade_m: float | None
    fde_m: float | None
    counts: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "ap_det": {m: self.ap_det[m] for m in MOTIONS},
            "ap_f": {m: self.ap_f[m] for m in MOTIONS},
            "map_det": self.map_det,
            "map_f": self.map_f,
            "ade_m": self.ade_m,
            "fde_m": self.fde_m,
        }


# -- motion subclasses -------------------------------------------------------------

def fit_velocity(positions, dt):
    """Least-squares velocity of ``(n, 2)`` positions sampled every ``dt`` seconds."""
    positions = np.asarray(positions, dtype=np.float64)
    n = len(positions)
    if n < 2:
        raise DegenerateTrack("velocity fit needs at least two poses")
    t = np.arange(n) * dt
    tc = t - t.mean()
    return (tc[:, None] * (positions - positions.mean(axis=0))).sum(axis=0) / (tc * tc).sum()


def classify_motion(track: AgentTrack, static_threshold_m=STATIC_DISPLACEMENT_M,
                    linear_threshold_m=LINEAR_DEVIATION_M) -> str:
    """Subclass from ground truth: path length, then deviation from constant-velocity extrapolation."""
    past = track.past_array(ground_truth=True)
    if len(past) < 2:
        raise DegenerateTrack(f"track {track.agent_id} has {len(past)} past poses")
    future = track.future_array()
    if len(future) < 1:
        raise DegenerateTrack(f"track {track.agent_id} has no future poses")
    path = np.concatenate([past[:, :2], future[:, :2]])
    if np.linalg.norm(np.diff(path, axis=0), axis=1).sum() < static_threshold_m:
        return "static"
    v = fit_velocity(past[:, :2], track.dt_s)
    predicted = past[-1, :2] + v * track.dt_s * len(future)
    if np.linalg.norm(predicted - future[-1, :2]) < linear_threshold_m:
        return "linear"
    return "nonlinear"


def ground_truth_from_scenes(scenes):
    return [
        GroundTruth(s.scene_id, t.center_t0, tuple(tuple(p[:2]) for p in t.future_poses), classify_motion(t))
        for s in scenes
        for t in s.tracks
    ]


# -- displacement errors ------------------------------------------------------------

def ade_fde(predicted, gt):
    predicted = np.asarray(predicted, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if predicted.shape != gt.shape or len(gt) == 0:
        raise LengthMismatch(f"prediction shape {predicted.shape} vs ground truth {gt.shape}")
    err = np.linalg.norm(predicted - gt, axis=-1)
    return float(err.mean()), float(err[-1])


# -- matching and AP ------------------------------------------------------------------

def _check_sorted(detections):
    conf = [d.confidence for d in detections]
    if any(a < b for a, b in zip(conf, conf[1:])):
        raise UnsortedInput("detections must be sorted by descending confidence")


def sort_detections(detections):
    return sorted(detections, key=lambda d: -d.confidence)


def _forecast_hits(det, gt, k_used, threshold):
    gx, gy = gt.final
    for hyp in det.forecasts[:k_used]:
        fx, fy = hyp.future_centers[-1]
        if math.hypot(fx - gx, fy - gy) <= threshold:
            return True
    return False


def match_detections(detections, gts, dist_threshold_m=DIST_THRESHOLD_M, mode="detection", k_used=1):
    """Greedy confidence-ordered matching.

    Each detection claims the nearest unmatched ground truth of its scene whose
    t=0 center lies within the threshold. In forecasting mode the claim is a
    true positive only if a top-``k_used`` hypothesis ends within the threshold
    of that agent's final position; the agent is consumed either way.
    """
    if mode not in ("detection", "forecasting"):
        raise ValueError(f"unknown matching mode {mode!r}")
    _check_sorted(detections)
    by_scene = {}
    for j, g in enumerate(gts):
        by_scene.setdefault(g.scene_id, []).append(j)
    taken = [False] * len(gts)
    tp, matched = [], []
    for det in detections:
        best, best_d = -1, math.inf
        for j in by_scene.get(det.source_scene, ()):
            if taken[j]:
                continue
            d = math.hypot(det.center[0] - gts[j].center[0], det.center[1] - gts[j].center[1])
            if d <= dist_threshold_m and d < best_d:
                best, best_d = j, d
        if best < 0:
            tp.append(False)
            matched.append(-1)
            continue
        taken[best] = True
        hit = mode == "detection" or _forecast_hits(det, gts[best], k_used, dist_threshold_m)
        tp.append(hit)
        matched.append(best if hit else -1)
    n_tp = sum(tp)
    return MatchResult(tp, matched, len(gts) - n_tp)


def average_precision(tp_sequence, n_gt, n_points=AP_RECALL_POINTS):
    """Interpolated AP: mean over recall levels i/n_points of the best precision at recall >= level."""
    tp_sequence = [bool(x) for x in tp_sequence]
    if n_gt == 0:
        return 0.0 if tp_sequence else 1.0
    tp = np.cumsum(tp_sequence)
    if len(tp) == 0:
        return 0.0
    precision = tp / np.arange(1, len(tp) + 1)
    # running max from the right: best precision achievable at this recall or beyond
    best_from = np.maximum.accumulate(precision[::-1])[::-1]
    total = 0.0
    for i in range(1, n_points + 1):
        # recall >= i / n_points  <=>  n_points * tp >= i * n_gt  (exact integer test)
        idx = np.flatnonzero(n_points * tp >= i * n_gt)
        if len(idx):
            total += best_from[idx[0]]
    return float(total / n_points)


def _subclass_ap(detections, result, gts, subclass):
    seq = []
    for det_tp, j in zip(result.tp, result.matched_gt):
        if j >= 0 and gts[j].subclass != subclass:
            continue  # belongs to another subclass's evaluation
        seq.append(det_tp and j >= 0)
    n_gt = sum(g.subclass == subclass for g in gts)
    return average_precision(seq, n_gt), sum(seq), len(seq) - sum(seq), n_gt - sum(seq)


def forecasting_report(detections, gts, k_used=1, dist_threshold_m=DIST_THRESHOLD_M,
                       ade_scope="forecast") -> EvalReport:
    """Per-subclass AP_det / AP_f, their means, and ADE/FDE of the best hypothesis.

    ``ade_scope="forecast"`` averages displacement errors over forecasting true
    positives; ``"detection"`` uses every detection-mode true positive.
    """
    detections = sort_detections(detections)
    det_match = match_detections(detections, gts, dist_threshold_m, "detection", k_used)
    fc_match = match_detections(detections, gts, dist_threshold_m, "forecasting", k_used)
    ap_det, ap_f, counts = {}, {}, {}
    for m in MOTIONS:
        ap_det[m], *c_det = _subclass_ap(detections, det_match, gts, m)
        ap_f[m], *c_f = _subclass_ap(detections, fc_match, gts, m)
        counts[m] = {"det": dict(zip(("tp", "fp", "fn"), c_det)), "f": dict(zip(("tp", "fp", "fn"), c_f))}

    if ade_scope not in ("forecast", "detection"):
        raise ValueError(f"unknown ade_scope {ade_scope!r}")
    scope = fc_match if ade_scope == "forecast" else det_match
    pairs = [(d, j) for d, j in zip(detections, scope.matched_gt) if j >= 0]
    ades, fdes = [], []
    for det, j in pairs:
        best = min((ade_fde(h.future_centers, gts[j].future) for h in det.forecasts[:k_used]),
                   key=lambda e: e[0])
        ades.append(best[0])
        fdes.append(best[1])
    ade = float(np.mean(ades)) if ades else None
    fde = float(np.mean(fdes)) if fdes else None
    map_det = sum(ap_det[m] for m in MOTIONS) / 3.0
    map_f = sum(ap_f[m] for m in MOTIONS) / 3.0
    return EvalReport(ap_det, ap_f, map_det, map_f, ade, fde, counts)


def mean_subclass_ap(values):
    """Unweighted mean of (static, linear, nonlinear) or any three subclass APs."""
    values = list(values)
    if len(values) != 3:
        raise ValueError("expected three subclass values")
    return sum(values) / 3.0


# -- constant-velocity reference ------------------------------------------------------

def constant_velocity_forecast(past, horizon, dt, k=1, scene_id=0):
    """Detection at the observed t=0 center with confidence 1 and a least-squares velocity forecast."""
    past = np.asarray(past, dtype=np.float64)
    if len(past) < 2:
        raise DegenerateTrack("constant-velocity forecast needs at least two past poses")
    v = fit_velocity(past[:, :2], dt)
    steps = np.arange(1, horizon + 1)[:, None] * dt
    future = past[-1, :2] + steps * v
    hyp = ForecastHypothesis(tuple(map(tuple, future.tolist())), 1.0 / k)
    return Detection(tuple(past[-1, :2].tolist()), 1.0, (hyp,) * k, scene_id)


def constant_velocity_predictor(track: AgentTrack, k=1, scene_id=0) -> Detection:
    return constant_velocity_forecast(track.past_poses, track.horizon, track.dt_s, k, scene_id)
