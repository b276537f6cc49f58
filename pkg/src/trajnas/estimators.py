"""scikit-learn style wrappers around the forecaster and the search engine."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_histories, check_positive_int, check_scenes
from .energy import EnergyWeights
from .genome import Genome, default_space, deserialize, random_genome
from .metrics import constant_velocity_forecast, forecasting_report, ground_truth_from_scenes
from .search import SearchConfig, run_search


def _resolve_space(space):
    return default_space(space) if isinstance(space, str) else space


class TrajectoryForecaster(BaseEstimator):
    """Train the network described by ``genome`` on synthetic scenes.

    ``genome`` may be a Genome, its text form, or None for a seeded random
    genome. ``predict`` maps observed histories ``(n, H, 4)`` to world-frame
    futures ``(n, K, F, 2)``; ``detect`` runs the full detector over scenes.
    """

    def __init__(self, genome=None, space="desk", k_hypotheses=1, epochs=5, learning_rate=5e-4,
                 batch_size=4, input_dim=32, random_state=0):
        self.genome = genome
        self.space = space
        self.k_hypotheses = k_hypotheses
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.input_dim = input_dim
        self.random_state = random_state

    def _genome(self, space):
        if self.genome is None:
            return random_genome(space, self.random_state)
        if isinstance(self.genome, Genome):
            return space.validate(self.genome)
        return deserialize(str(self.genome), space)

    def fit(self, scenes, y=None):
        from .forecaster.network import instantiate
        from .forecaster.training import train

        scenes = check_scenes(scenes)
        check_positive_int(self.k_hypotheses, "k_hypotheses")
        space = _resolve_space(self.space)
        track = next(t for s in scenes for t in s.tracks)
        model = instantiate(self._genome(space), space, init_seed=self.random_state, input_dim=self.input_dim,
                            k_hypotheses=self.k_hypotheses, history=track.history, horizon=track.horizon,
                            dt=track.dt_s)
        self.model_, self.loss_curve_ = train(model, scenes, epochs=self.epochs,
                                              learning_rate=self.learning_rate,
                                              batch_size=self.batch_size, seed=self.random_state)
        self.n_params_ = self.model_.n_params
        return self

    def predict(self, X):
        from .forecaster.network import predict_batch

        check_is_fitted(self, "model_")
        X = check_histories(X, self.model_.history)
        return predict_batch(self.model_, X).futures

    def detect(self, scenes):
        from .forecaster.evaluate import detect_scenes

        check_is_fitted(self, "model_")
        return detect_scenes(self.model_, check_scenes(scenes))

    def score(self, scenes, y=None):
        """Forecasting mAP on ``scenes``."""
        scenes = check_scenes(scenes)
        return forecasting_report(self.detect(scenes), ground_truth_from_scenes(scenes),
                                  k_used=self.k_hypotheses).map_f


class ConstantVelocityForecaster(BaseEstimator):
    """Least-squares constant-velocity extrapolation; ``fit`` only records the horizon."""

    def __init__(self, k_hypotheses=1, horizon=6, dt=0.5):
        self.k_hypotheses = k_hypotheses
        self.horizon = horizon
        self.dt = dt

    def fit(self, scenes=None, y=None):
        if scenes is not None:
            track = next(t for s in check_scenes(scenes) for t in s.tracks)
            self.horizon_, self.dt_ = track.horizon, track.dt_s
        else:
            self.horizon_, self.dt_ = check_positive_int(self.horizon, "horizon"), float(self.dt)
        return self

    def predict(self, X):
        check_is_fitted(self, "horizon_")
        X = check_histories(X)
        out = np.empty((len(X), self.k_hypotheses, self.horizon_, 2))
        for i, past in enumerate(X):
            det = constant_velocity_forecast(past, self.horizon_, self.dt_, self.k_hypotheses)
            out[i] = [h.future_centers for h in det.forecasts]
        return out

    def detect(self, scenes):
        from .forecaster.evaluate import cv_detect_scenes

        return cv_detect_scenes(check_scenes(scenes), self.k_hypotheses)

    def score(self, scenes, y=None):
        scenes = check_scenes(scenes)
        return forecasting_report(self.detect(scenes), ground_truth_from_scenes(scenes),
                                  k_used=self.k_hypotheses).map_f


class ArchitectureSearch(BaseEstimator):
    """Run one search algorithm; ``fit`` takes a ``genome -> CandidateMetrics`` evaluator."""

    def __init__(self, algorithm="mosa", iterations=108, t_max=2500.0, t_min=2.5, local_restart_patience=10,
                 delta_scale=30000.0, alpha=-1.0, beta=0.5, gamma=0.5, space="desk", random_state=0):
        self.algorithm = algorithm
        self.iterations = iterations
        self.t_max = t_max
        self.t_min = t_min
        self.local_restart_patience = local_restart_patience
        self.delta_scale = delta_scale
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.space = space
        self.random_state = random_state

    def fit(self, evaluator, y=None):
        cfg = SearchConfig(t_max=self.t_max, t_min=self.t_min, iterations=self.iterations,
                           seed=self.random_state, algorithm=self.algorithm,
                           local_restart_patience=self.local_restart_patience, delta_scale=self.delta_scale)
        weights = EnergyWeights(self.alpha, self.beta, self.gamma)
        self.result_ = run_search(_resolve_space(self.space), evaluator, weights, cfg)
        self.best_genome_ = self.result_.best_genome
        self.best_energy_ = self.result_.best_energy
        self.best_metrics_ = self.result_.best_metrics
        self.trace_ = self.result_.trace
        return self
