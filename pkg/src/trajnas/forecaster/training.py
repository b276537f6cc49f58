"""Mini-batch Adam training with analytic gradients."""
from __future__ import annotations

import math

import numpy as np

from ..exceptions import InvalidParams, NonFiniteLoss
from ..genome import make_rng
from ..synthdata import observation_candidates
from .network import loss_and_gradient, make_batch


class Adam:
    def __init__(self, n_params, learning_rate=5e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, theta, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def scene_candidates(scenes, history):
    return [c for s in scenes for c in observation_candidates(s, history)]


def train(model, scenes, epochs=5, learning_rate=5e-4, batch_size=4, seed=0, schedule="cosine"):
    """Train a copy of ``model`` on every candidate of ``scenes``.

    Returns ``(trained model, per-epoch mean losses)``; the loss of an epoch is
    the per-sample mean accumulated while its batches are processed.
    """
    if epochs < 0 or batch_size < 1 or learning_rate < 0:
        raise InvalidParams("epochs >= 0, batch_size >= 1 and learning_rate >= 0 are required")
    candidates = scene_candidates(scenes, model.history)
    if not any(c.is_agent for c in candidates):
        raise InvalidParams("training scenes contain no agents")
    theta = np.array(model.parameters)
    opt = Adam(theta.size, learning_rate)
    losses = []
    n_batches = -(-len(candidates) // batch_size)
    total_steps = max(epochs * n_batches, 1)
    step = 0
    for epoch in range(epochs):
        order = make_rng(seed, 0x7EA1, epoch).permutation(len(candidates))
        total = 0.0
        for bi, start in enumerate(range(0, len(order), batch_size)):
            batch = make_batch([candidates[i] for i in order[start:start + batch_size]])
            loss, grad = loss_and_gradient(model, batch, theta)
            if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise NonFiniteLoss(epoch, bi, loss)
            total += loss * batch.size
            if learning_rate > 0:
                if schedule == "cosine":
                    opt.lr = 0.5 * learning_rate * (1 + math.cos(math.pi * step / total_steps))
                theta = opt.step(theta, grad)
            step += 1
        losses.append(total / len(candidates))
    return model.with_parameters(theta), losses
