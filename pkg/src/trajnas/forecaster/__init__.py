"""Genome-instantiated forecaster: decoding, training, latency and evaluation."""
from .architecture import cost_model_latency, count_parameters, decode
from .evaluate import EvalConfig, TrainedModelEvaluator, evaluate_candidate, evaluate_candidate_full
from .latency import measure_latency
from .modelio import load_model, save_model
from .network import AgentState, ModelInstance, forward_rollout, instantiate, predict_batch
from .training import train

__all__ = [
    "AgentState", "EvalConfig", "ModelInstance", "TrainedModelEvaluator", "cost_model_latency",
    "count_parameters", "decode", "evaluate_candidate", "evaluate_candidate_full", "forward_rollout",
    "instantiate", "load_model", "measure_latency", "predict_batch", "save_model", "train",
]
