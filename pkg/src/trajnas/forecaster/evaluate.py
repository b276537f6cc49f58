"""Trained-model evaluator plugged into the search engine.

Step one of the two-step protocol trains each candidate on the mini training
split and scores it on the mini validation split. Step two (``full=True``)
retrains the chosen genome on the complete training split for the full
number of epochs and scores it on the complete validation split.
"""
from __future__ import annotations

from contextlib import nullcontext
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ..energy import CandidateMetrics
from ..genome import Genome, SearchSpaceSpec, default_space
from ..metrics import (
    DIST_THRESHOLD_M,
    Detection,
    ForecastHypothesis,
    constant_velocity_forecast,
    forecasting_report,
    ground_truth_from_scenes,
)
from ..synthdata import observation_candidates
from .architecture import cost_model_latency
from .latency import measure_latency
from .network import instantiate, predict_batch
from .training import train

# displacement error charged when no forecast matches (keeps the energy finite and large)
NO_MATCH_ERROR_M = 10.0


@dataclass(frozen=True)
class EvalConfig:
    deterministic: bool = True
    epochs: int = 5
    full_epochs: int = 20
    learning_rate: float = 5e-4
    batch_size: int = 4
    seed: int = 0
    k_hypotheses: int = 1
    input_dim: int = 32
    latency_repetitions: int = 20
    latency_warmup: int = 3
    dist_threshold_m: float = DIST_THRESHOLD_M
    full: bool = False

    def to_dict(self):
        return asdict(self)


def detect_scenes(model, scenes):
    """Run detection and rollout on every detector input of ``scenes``."""
    out = []
    for scene in scenes:
        cands = observation_candidates(scene, model.history)
        if not cands:
            continue
        pred = predict_batch(model, np.stack([c.past for c in cands]))
        for i in range(len(cands)):
            order = np.argsort(-pred.hypothesis_confidence[i], kind="stable")
            hyps = tuple(
                ForecastHypothesis(tuple(map(tuple, pred.futures[i, k].tolist())),
                                   float(pred.hypothesis_confidence[i, k]))
                for k in order
            )
            out.append(Detection(tuple(pred.centers[i].tolist()), float(pred.detection_confidence[i]),
                                 hyps, scene.scene_id))
    return out


def cv_detect_scenes(scenes, k=1):
    out = []
    for scene in scenes:
        for c in observation_candidates(scene):
            track = c.track if c.is_agent else None
            horizon = track.horizon if track else scene.tracks[0].horizon
            dt = track.dt_s if track else scene.tracks[0].dt_s
            out.append(constant_velocity_forecast(c.past, horizon, dt, k, scene.scene_id))
    return out


def report_to_metrics(report, latency_s):
    ade = NO_MATCH_ERROR_M if report.ade_m is None else report.ade_m
    fde = NO_MATCH_ERROR_M if report.fde_m is None else report.fde_m
    return CandidateMetrics(float(latency_s), float(report.map_f), float(ade), float(fde),
                            float(report.map_det)).validate()


def _dataset_shape(data):
    cfg = data.config
    return int(cfg.get("history", 4)), int(cfg.get("horizon", 6)), float(cfg.get("dt", 0.5))


def evaluate_candidate_full(genome: Genome, data, eval_cfg: EvalConfig = EvalConfig(),
                            space: SearchSpaceSpec | None = None):
    """``(CandidateMetrics, EvalReport, trained model)`` for one genome."""
    space = space or default_space("desk")
    space.validate(genome)
    history, horizon, dt = _dataset_shape(data)
    train_scenes, eval_scenes = (data.train, data.val) if eval_cfg.full else (data.mini_train, data.mini_val)
    epochs = eval_cfg.full_epochs if eval_cfg.full else eval_cfg.epochs
    limit = threadpool_limits(1) if eval_cfg.deterministic else nullcontext()
    with limit:
        model = instantiate(genome, space, init_seed=eval_cfg.seed, input_dim=eval_cfg.input_dim,
                            k_hypotheses=eval_cfg.k_hypotheses, history=history, horizon=horizon, dt=dt)
        model, _ = train(model, train_scenes, epochs=epochs, learning_rate=eval_cfg.learning_rate,
                         batch_size=eval_cfg.batch_size, seed=eval_cfg.seed)
        report = forecasting_report(detect_scenes(model, eval_scenes), ground_truth_from_scenes(eval_scenes),
                                    k_used=eval_cfg.k_hypotheses, dist_threshold_m=eval_cfg.dist_threshold_m)
        if eval_cfg.deterministic:
            latency = cost_model_latency(genome, space, history, horizon, eval_cfg.input_dim,
                                         eval_cfg.k_hypotheses)
        else:
            latency = measure_latency(model, eval_cfg.latency_repetitions, eval_cfg.latency_warmup)
    return report_to_metrics(report, latency), report, model


def evaluate_candidate(genome: Genome, data, eval_cfg: EvalConfig = EvalConfig(),
                       space: SearchSpaceSpec | None = None) -> CandidateMetrics:
    return evaluate_candidate_full(genome, data, eval_cfg, space)[0]


class TrainedModelEvaluator:
    """Callable ``genome -> CandidateMetrics`` bound to a dataset and configuration."""

    def __init__(self, data, eval_cfg: EvalConfig = EvalConfig(), space: SearchSpaceSpec | None = None):
        self.data = data
        self.eval_cfg = eval_cfg
        self.space = space or default_space("desk")

    def __call__(self, genome):
        return evaluate_candidate(genome, self.data, self.eval_cfg, self.space)
