"""Genome-instantiated detection and forecasting network.

Inputs are expressed in an agent frame: positions relative to the observed
t=0 center and rotated by the observed t=0 heading. The heads describe the
state at t=0; the future is produced by cyclic rollout: each step appends the
newest predicted frame to the history window, re-runs encoder, trunk and the
velocity head on that window, and advances the center by ``velocity * dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..genome import Genome, SearchSpaceSpec, default_space, make_rng
from ..metrics import ForecastHypothesis
from . import autodiff as ad
from .architecture import Architecture, decode

POS_SCALE_M = 10.0
VELOCITY_SCALE_MPS = 10.0
OFFSET_SCALE_M = 0.5
DIM_PRIOR = np.array([3.5, 1.6])
Z_PRIOR = 0.8
HEIGHT_PRIOR = 1.6


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    heading: float
    z: float
    dims: tuple


@dataclass(frozen=True, eq=False)
class ModelInstance:
    genome: Genome
    space: SearchSpaceSpec
    arch: Architecture
    parameters: np.ndarray
    input_dim: int = 32
    k_hypotheses: int = 1
    history: int = 4
    horizon: int = 6
    dt: float = 0.5
    init_seed: int = 0

    @property
    def n_params(self):
        return self.parameters.size

    def with_parameters(self, theta):
        theta = np.array(theta, dtype=np.float64)
        theta.flags.writeable = False
        return ModelInstance(self.genome, self.space, self.arch, theta, self.input_dim, self.k_hypotheses,
                             self.history, self.horizon, self.dt, self.init_seed)


def parameter_slices(arch):
    """``{layer name: (weight slice, weight shape, bias slice or None)}`` in vector order."""
    out, pos = {}, 0
    for layer in arch.dense_layers():
        w = slice(pos, pos + layer.fan_in * layer.fan_out)
        pos = w.stop
        b = None
        if layer.bias:
            b = slice(pos, pos + layer.fan_out)
            pos = b.stop
        out[layer.name] = (w, (layer.fan_in, layer.fan_out), b)
    return out


def instantiate(genome, space=None, init_seed=0, input_dim=32, k_hypotheses=1, history=4, horizon=6,
                dt=0.5) -> ModelInstance:
    space = space or default_space("desk")
    arch = decode(genome, space, history=history, input_dim=input_dim, k_hypotheses=k_hypotheses)
    rng = make_rng(init_seed, 0x1A17)
    pieces = []
    for layer in arch.dense_layers():
        limit = math.sqrt(6.0 / (layer.fan_in + layer.fan_out))
        pieces.append(rng.uniform(-limit, limit, size=layer.fan_in * layer.fan_out))
        if layer.bias:
            pieces.append(np.zeros(layer.fan_out))
    theta = np.concatenate(pieces)
    theta.flags.writeable = False
    return ModelInstance(genome, space, arch, theta, input_dim, k_hypotheses, history, horizon, dt, init_seed)


# -- geometry -------------------------------------------------------------------

def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def to_agent_frame(pasts):
    """Observed ``(B, H, 4)`` world poses -> agent-frame poses, origins ``(B, 2)``, headings ``(B,)``."""
    pasts = np.asarray(pasts, dtype=np.float64)
    origin = pasts[:, -1, :2].copy()
    theta = pasts[:, -1, 2].copy()
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    dx = pasts[:, :, 0] - origin[:, :1]
    dy = pasts[:, :, 1] - origin[:, 1:]
    local = np.empty_like(pasts)
    local[:, :, 0] = c * dx + s * dy
    local[:, :, 1] = -s * dx + c * dy
    local[:, :, 2] = wrap_angle(pasts[:, :, 2] - theta[:, None])
    local[:, :, 3] = pasts[:, :, 3]
    return local, origin, theta


def rotate_to_world(local_xy, origin, theta):
    """``local_xy`` has shape ``(B, ..., 2)``; returns world coordinates of the same shape."""
    extra = local_xy.ndim - 2
    c = np.cos(theta).reshape((-1,) + (1,) * extra)
    s = np.sin(theta).reshape((-1,) + (1,) * extra)
    ox = origin[:, 0].reshape((-1,) + (1,) * extra)
    oy = origin[:, 1].reshape((-1,) + (1,) * extra)
    x = ox + c * local_xy[..., 0] - s * local_xy[..., 1]
    y = oy + s * local_xy[..., 0] + c * local_xy[..., 1]
    return np.stack([x, y], axis=-1)


# -- forward pass ----------------------------------------------------------------

def bind_parameters(model, theta=None, requires_grad=False):
    """Wrap slices of the flat vector as tensors; returns ``(tensors, slices)``."""
    theta = model.parameters if theta is None else theta
    slices = parameter_slices(model.arch)
    tensors = {}
    for name, (w, shape, b) in slices.items():
        tensors[name] = (
            ad.Tensor(theta[w].reshape(shape), requires_grad),
            ad.Tensor(theta[b], requires_grad) if b is not None else None,
        )
    return tensors, slices


def _dense(x, params, activation):
    w, b = params
    y = x @ w
    if b is not None:
        y = y + b
    return ad.tanh(y) if activation == "tanh" else y


def _body(arch, P, feats):
    x = feats
    for layer in arch.encoder:
        x = _dense(x, P[layer.name], "tanh")
    for block in arch.trunk:
        if block.kind == "identity":
            continue
        y = _dense(x, P[block.layer.name], "tanh")
        if block.kind == "residual":
            skip = x @ P[block.projection.name][0] if block.projection is not None else x
            y = skip + y
        x = y
    return x


def _head(arch, P, name, x):
    for layer in arch.heads[name].layers:
        x = _dense(x, P[layer.name], layer.activation)
    return x


def _feature_scale(history):
    return np.tile([1.0 / POS_SCALE_M, 1.0 / POS_SCALE_M, 1.0, 1.0], history)


def initial_pass(model, P, local_pasts):
    """All five heads on the observed window; returns a dict of tensors."""
    B, H, _ = local_pasts.shape
    feats = ad.Tensor(local_pasts.reshape(B, 4 * H) * _feature_scale(H))
    trunk_out = _body(model.arch, P, feats)
    outs = {name: _head(model.arch, P, name, trunk_out) for name in model.arch.heads}
    K = model.k_hypotheses
    reg, hgt = outs["regression"], outs["height"]
    return {
        "trunk": trunk_out,
        "offset": reg[:, 0:2] * OFFSET_SCALE_M,
        "det_logit": reg[:, 2],
        "heading": outs["rotation"][:, 0],
        "dims": outs["dimension"] + DIM_PRIOR,
        "z": hgt[:, 0] + Z_PRIOR,
        "height": hgt[:, 1] + HEIGHT_PRIOR,
        "conf_logits": outs["velocity"][:, 2 * K:3 * K],
    }


def rollout(model, P, local_pasts, state, horizon=None):
    """Cyclic rollout for every hypothesis; returns agent-frame centers ``(B, K, F, 2)`` tensor."""
    horizon = model.horizon if horizon is None else horizon
    B, H, _ = local_pasts.shape
    K = model.k_hypotheses
    BK = B * K
    rows = np.arange(BK)
    kk = np.tile(np.arange(K), B)
    step = VELOCITY_SCALE_MPS * model.dt
    scale = ad.Tensor(_feature_scale(H))

    heading = ad.repeat_rows(ad.reshape(state["heading"], (B, 1)), K)
    z = ad.repeat_rows(ad.reshape(state["z"], (B, 1)), K)
    cx = ad.repeat_rows(ad.reshape(state["offset"][:, 0], (B, 1)), K)
    cy = ad.repeat_rows(ad.reshape(state["offset"][:, 1], (B, 1)), K)
    observed = np.repeat(local_pasts[:, :-1, :], K, axis=0)
    frames = [ad.Tensor(observed[:, j, :]) for j in range(H - 1)]
    frames.append(ad.concat([cx, cy, heading, z], axis=1))

    zeros = ad.Tensor(np.zeros((BK, 2)))
    centers = []
    for _ in range(horizon):
        # positions relative to the newest frame, so every step sees a t=0-centred window
        anchor = ad.concat([cx, cy, zeros], axis=1)
        feats = ad.concat([f - anchor for f in frames[-H:]], axis=1) * scale
        vel = _head(model.arch, P, "velocity", _body(model.arch, P, feats))
        vx = ad.reshape(vel[rows, 2 * kk], (BK, 1))
        vy = ad.reshape(vel[rows, 2 * kk + 1], (BK, 1))
        cx = cx + vx * step
        cy = cy + vy * step
        centers.append(ad.concat([cx, cy], axis=1))
        frames.append(ad.concat([cx, cy, heading, z], axis=1))
    return ad.reshape(ad.stack(centers, axis=1), (B, K, horizon, 2))


@dataclass(frozen=True)
class BatchPrediction:
    """World-frame outputs for a batch of candidates."""

    detection_confidence: np.ndarray  # (B,)
    centers: np.ndarray  # (B, 2) refined t=0 centers
    headings: np.ndarray
    z: np.ndarray
    dims: np.ndarray  # (B, 3)
    futures: np.ndarray  # (B, K, F, 2)
    hypothesis_confidence: np.ndarray  # (B, K), rows sum to 1


def predict_batch(model, pasts, horizon=None) -> BatchPrediction:
    pasts = np.asarray(pasts, dtype=np.float64)
    local, origin, theta = to_agent_frame(pasts)
    P, _ = bind_parameters(model)
    state = initial_pass(model, P, local)
    futures = rollout(model, P, local, state, horizon).data
    offset = state["offset"].data
    dims = np.concatenate([state["dims"].data, state["height"].data[:, None]], axis=1)
    return BatchPrediction(
        detection_confidence=ad.sigmoid(state["det_logit"].data),
        centers=rotate_to_world(offset, origin, theta),
        headings=wrap_angle(theta + state["heading"].data),
        z=state["z"].data,
        dims=dims,
        futures=rotate_to_world(futures, origin, theta),
        hypothesis_confidence=ad.softmax(state["conf_logits"].data, axis=1),
    )


def forward_rollout(model, observed_history, horizon=None):
    """Single-agent inference: ``(detection confidence, AgentState at t=0, hypotheses)``.

    Hypotheses are sorted by descending confidence.
    """
    pred = predict_batch(model, np.asarray(observed_history, dtype=np.float64)[None], horizon)
    state = AgentState(
        float(pred.centers[0, 0]), float(pred.centers[0, 1]), float(pred.headings[0]),
        float(pred.z[0]), tuple(float(v) for v in pred.dims[0]),
    )
    order = np.argsort(-pred.hypothesis_confidence[0], kind="stable")
    hyps = [
        ForecastHypothesis(tuple(map(tuple, pred.futures[0, k].tolist())), float(pred.hypothesis_confidence[0, k]))
        for k in order
    ]
    return float(pred.detection_confidence[0]), state, hyps


# -- training objective --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainingBatch:
    """Agent-frame inputs and targets for a set of candidates."""

    local_pasts: np.ndarray  # (B, H, 4)
    is_agent: np.ndarray  # (B,) bool
    future_local: np.ndarray  # (A, F, 2) for agent rows, in order
    state_targets: np.ndarray  # (A, 6): offset x, offset y, heading, length, width ... see below

    @property
    def size(self):
        return len(self.is_agent)


def make_batch(candidates) -> TrainingBatch:
    pasts = np.stack([c.past for c in candidates])
    local, origin, theta = to_agent_frame(pasts)
    is_agent = np.array([c.is_agent for c in candidates])
    futures, targets = [], []
    for i, c in enumerate(candidates):
        if not c.is_agent:
            continue
        t = c.track
        cth, sth = math.cos(theta[i]), math.sin(theta[i])
        fut = t.future_array()[:, :2] - origin[i]
        futures.append(np.stack([cth * fut[:, 0] + sth * fut[:, 1], -sth * fut[:, 0] + cth * fut[:, 1]], axis=1))
        gt0 = (t.past_poses_gt or t.past_poses)[-1]
        dx, dy = gt0[0] - origin[i, 0], gt0[1] - origin[i, 1]
        targets.append([
            cth * dx + sth * dy, -sth * dx + cth * dy,
            float(wrap_angle(gt0[2] - theta[i])),
            t.dims[0], t.dims[1], gt0[3], t.dims[2],
        ])
    F = next((c.track.horizon for c in candidates if c.is_agent), 0)
    future_local = np.array(futures).reshape(-1, F, 2) if futures else np.zeros((0, F, 2))
    return TrainingBatch(local, is_agent, future_local, np.array(targets).reshape(-1, 7))


def batch_loss(model, P, batch: TrainingBatch):
    """Per-sample-averaged training loss as a scalar tensor.

    Agents contribute winner-takes-all forecast smooth-L1, smooth-L1 on the
    t=0 state, hypothesis cross-entropy (K > 1) and detection BCE; clutter
    contributes detection BCE only. Every term is divided by the batch size so
    the epoch mean does not depend on how samples are grouped.
    """
    n = batch.size
    state = initial_pass(model, P, batch.local_pasts)
    det = ad.bce_with_logits(state["det_logit"], batch.is_agent.astype(float))
    loss = ad.total(det) * (1.0 / n)
    agents = np.flatnonzero(batch.is_agent)
    if len(agents) == 0:
        return loss
    A = len(agents)
    sub = {k: v[agents] for k, v in state.items() if k != "trunk"}
    centers = rollout(model, P, batch.local_pasts[agents], sub, horizon=batch.future_local.shape[1])
    K = model.k_hypotheses
    err = ad.smooth_l1(centers - batch.future_local[:, None, :, :])
    per_hyp = ad.reshape(ad.total(ad.reshape(err, (A, K, -1)), axis=2), (A, K))
    per_hyp = per_hyp * (1.0 / (2 * batch.future_local.shape[1]))
    best = np.argmin(per_hyp.data, axis=1)
    loss = loss + ad.total(per_hyp[np.arange(A), best]) * (1.0 / n)
    if K > 1:
        logp = ad.log_softmax(sub["conf_logits"], axis=1)
        loss = loss - ad.total(logp[np.arange(A), best]) * (1.0 / n)
    pred_state = ad.concat([
        sub["offset"],
        ad.reshape(sub["heading"], (A, 1)),
        sub["dims"],
        ad.reshape(sub["z"], (A, 1)),
        ad.reshape(sub["height"], (A, 1)),
    ], axis=1)
    state_err = ad.smooth_l1(pred_state - batch.state_targets)
    loss = loss + ad.total(state_err) * (1.0 / (7 * n))
    return loss


def loss_and_gradient(model, batch, theta=None):
    theta = model.parameters if theta is None else theta
    P, slices = bind_parameters(model, theta, requires_grad=True)
    loss = batch_loss(model, P, batch)
    loss.backward()
    grad = np.zeros_like(theta)
    for name, (w, shape, b) in slices.items():
        wt, bt = P[name]
        if wt.grad is not None:
            grad[w] = wt.grad.ravel()
        if bt is not None and bt.grad is not None:
            grad[b] = bt.grad
    return float(loss.data), grad


def loss_value(model, batch, theta=None):
    P, _ = bind_parameters(model, theta)
    return float(batch_loss(model, P, batch).data)
