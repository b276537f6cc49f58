"""Genome decoding and exact multiply-accumulate accounting.

The decoded network is

    encoder (2 dense tanh layers, fixed width) -> trunk (searched) -> 5 heads

Trunk blocks map to the trunk width: ``dense`` is ``tanh(Wx + b)``,
``residual`` is ``skip(x) + tanh(Wx + b)`` where ``skip`` is the identity when
widths agree and a bias-free linear projection otherwise, and ``identity``
passes its input through. Each head is an optional private stem layer, then
``depth`` hidden tanh layers of the head width, then a linear output layer.
With ``shared_stem = 1`` the first hidden layer reads the trunk output directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..genome import HEAD_NAMES, Genome, SearchSpaceSpec

ENCODER_DEPTH = 2
POSE_FEATURES = 4  # per history frame: dx, dy, relative heading, z


def head_output_dims(k_hypotheses):
    return {
        "velocity": 3 * k_hypotheses,  # 2K velocity components + K confidence logits
        "rotation": 1,
        "dimension": 2,
        "regression": 3,  # center offset (2) + detection logit
        "height": 2,
    }


@dataclass(frozen=True)
class DenseSpec:
    name: str
    fan_in: int
    fan_out: int
    bias: bool = True
    activation: str = "tanh"

    @property
    def n_params(self):
        return self.fan_in * self.fan_out + (self.fan_out if self.bias else 0)

    @property
    def macs(self):
        return self.fan_in * self.fan_out


@dataclass(frozen=True)
class BlockSpec:
    kind: str
    fan_in: int
    fan_out: int
    layer: DenseSpec | None
    projection: DenseSpec | None

    @property
    def dense_layers(self):
        return [d for d in (self.layer, self.projection) if d is not None]

    @property
    def macs(self):
        return sum(d.macs for d in self.dense_layers)


@dataclass(frozen=True)
class HeadSpec:
    name: str
    shared_stem: bool
    layers: tuple[DenseSpec, ...]

    @property
    def macs(self):
        return sum(d.macs for d in self.layers)


@dataclass(frozen=True)
class Architecture:
    genome: Genome
    history: int
    input_dim: int
    k_hypotheses: int
    encoder: tuple[DenseSpec, ...]
    trunk: tuple[BlockSpec, ...]
    heads: dict

    @property
    def trunk_out_dim(self):
        return self.trunk[-1].fan_out if self.trunk else self.input_dim

    def dense_layers(self):
        """Every parameterised layer in parameter-vector order."""
        out = list(self.encoder)
        for block in self.trunk:
            out += block.dense_layers
        for name in HEAD_NAMES:
            out += list(self.heads[name].layers)
        return out

    @property
    def n_params(self):
        return sum(d.n_params for d in self.dense_layers())

    @property
    def n_layers(self):
        # identity blocks count as a layer for overhead purposes even without MACs
        return len(self.encoder) + len(self.trunk) + sum(len(h.layers) for h in self.heads.values())

    def body_macs(self):
        return sum(d.macs for d in self.encoder) + sum(b.macs for b in self.trunk)

    def macs_per_forecast(self, horizon):
        """MACs of one initial pass plus ``horizon`` cyclic velocity passes per hypothesis."""
        full = self.body_macs() + sum(h.macs for h in self.heads.values())
        rollout = self.body_macs() + self.heads["velocity"].macs
        return full + horizon * self.k_hypotheses * rollout


def _choices(space, label, genes):
    seg = space.segment(label)
    return [seg.choices[genes[i]] for i in range(seg.start, seg.stop)]


def decode(genome: Genome, space: SearchSpaceSpec, history=4, input_dim=32, k_hypotheses=1) -> Architecture:
    space.validate(genome)
    genes = genome.genes
    block_kinds = _choices(space, "trunk_block_type", genes)
    if space.has_segment("trunk_depth"):
        depth = _choices(space, "trunk_depth", genes)[0]
    else:
        depth = len(block_kinds)
    width = _choices(space, "trunk_width", genes)[0]

    raw_dim = POSE_FEATURES * history
    encoder = (
        DenseSpec("encoder.0", raw_dim, input_dim),
        DenseSpec("encoder.1", input_dim, input_dim),
    )
    trunk = []
    dim = input_dim
    for i, kind in enumerate(block_kinds[:depth]):
        if kind == "identity":
            trunk.append(BlockSpec(kind, dim, dim, None, None))
            continue
        layer = DenseSpec(f"trunk.{i}", dim, width)
        proj = None
        if kind == "residual" and dim != width:
            proj = DenseSpec(f"trunk.{i}.skip", dim, width, bias=False, activation="linear")
        trunk.append(BlockSpec(kind, dim, width, layer, proj))
        dim = width

    head_depths = _choices(space, "head_depth", genes)
    head_widths = _choices(space, "head_width", genes)
    shared = _choices(space, "head_shared_stem", genes)
    out_dims = head_output_dims(k_hypotheses)
    heads = {}
    for h, name in enumerate(HEAD_NAMES):
        layers = []
        d_in = dim
        if not shared[h]:
            layers.append(DenseSpec(f"{name}.stem", d_in, head_widths[h]))
            d_in = head_widths[h]
        for j in range(head_depths[h]):
            layers.append(DenseSpec(f"{name}.hidden.{j}", d_in, head_widths[h]))
            d_in = head_widths[h]
        layers.append(DenseSpec(f"{name}.out", d_in, out_dims[name], activation="linear"))
        heads[name] = HeadSpec(name, bool(shared[h]), tuple(layers))
    return Architecture(genome, history, input_dim, k_hypotheses, encoder, tuple(trunk), heads)


def count_parameters(arch: Architecture) -> int:
    """Closed-form parameter count, independent of any instantiated weights."""
    h, d, k = arch.history, arch.input_dim, arch.k_hypotheses
    total = POSE_FEATURES * h * d + d + d * d + d
    dim = d
    for block in arch.trunk:
        if block.kind == "identity":
            continue
        total += dim * block.fan_out + block.fan_out
        if block.kind == "residual" and dim != block.fan_out:
            total += dim * block.fan_out
        dim = block.fan_out
    for name, out in head_output_dims(k).items():
        head = arch.heads[name]
        width = head.layers[0].fan_out if len(head.layers) > 1 else None
        n_hidden = len(head.layers) - 1
        if n_hidden:
            total += dim * width + width + (n_hidden - 1) * (width * width + width) + width * out + out
        else:
            total += dim * out + out
    return total


def cost_model_latency(genome, space, history=4, horizon=6, input_dim=32, k_hypotheses=1) -> float:
    """Deterministic latency proxy: MACs / 1e9 plus 10 microseconds per layer."""
    arch = decode(genome, space, history=history, input_dim=input_dim, k_hypotheses=k_hypotheses)
    return arch.macs_per_forecast(horizon) / 1e9 + 1e-5 * arch.n_layers


def cost_model_latency_batch(genes, space, history=4, horizon=6, input_dim=32, k_hypotheses=1):
    """Vectorised :func:`cost_model_latency` over an ``(n, n_genes)`` integer array."""
    genes = np.asarray(genes, dtype=np.int64)
    # the latency depends on genes only through a few small sub-configurations; decode each once
    keys, inverse = np.unique(genes, axis=0, return_inverse=True) if len(genes) < 4096 else (None, None)
    if keys is not None:
        vals = np.array([
            cost_model_latency(Genome(space.name, tuple(row)), space, history, horizon, input_dim, k_hypotheses)
            for row in keys
        ])
        return vals[inverse.ravel()]

    trunk_cols = [i for s in space.segments if s.label.startswith("trunk") for i in range(s.start, s.stop)]
    hd, hw, hs = (space.segment(lbl) for lbl in ("head_depth", "head_width", "head_shared_stem"))
    t_keys, t_inv = np.unique(genes[:, trunk_cols], axis=0, return_inverse=True)
    t_inv = t_inv.ravel()
    template = list(genes[0])
    body, t_dim, t_layers = [], [], []
    for row in t_keys:
        g = list(template)
        for c, v in zip(trunk_cols, row):
            g[c] = int(v)
        arch = decode(Genome(space.name, tuple(g)), space, history, input_dim, k_hypotheses)
        body.append(arch.body_macs())
        t_dim.append(arch.trunk_out_dim)
        t_layers.append(len(arch.encoder) + len(arch.trunk))
    body, t_dim, t_layers = (np.array(a)[t_inv] for a in (body, t_dim, t_layers))

    macs = body * (1 + horizon * k_hypotheses)
    n_layers = t_layers.astype(float)
    out_dims = head_output_dims(k_hypotheses)
    for h, name in enumerate(HEAD_NAMES):
        depth = np.array(hd.choices)[genes[:, hd.start + h]]
        width = np.array(hw.choices)[genes[:, hw.start + h]]
        shared = np.array(hs.choices)[genes[:, hs.start + h]].astype(bool)
        n_out = out_dims[name]
        stem = np.where(shared, 0, t_dim * width)
        first_in = np.where(shared, t_dim, width)
        hidden = first_in * width + (depth - 1) * width * width
        head_macs = stem + hidden + width * n_out
        reps = 1 + horizon * k_hypotheses if name == "velocity" else 1
        macs = macs + head_macs * reps
        n_layers = n_layers + depth + 1 + (~shared)
    return macs / 1e9 + 1e-5 * n_layers
