"""Deterministic synthetic evaluator over a search space.

The forecasting mAP of a genome is a logistic function of a frozen random
score: per-gene terms plus ``ruggedness``-weighted pairwise interaction
terms. Displacement errors follow from the mAP with a bounded perturbation
drawn from a second frozen table, and the latency comes from the MAC-count
cost model when the space decodes to a network.

Every coefficient is drawn once from ``(seed, gene cardinalities)`` so a given
spec always describes the same landscape, and the batched and single-genome
code paths share one implementation, so both give bit-identical numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .energy import CandidateMetrics, EnergyWeights
from .exceptions import SpaceMismatch, SpaceTooLarge
from .genome import Genome, SearchSpaceSpec, enumerate_genomes, make_rng

MAP_LOW, MAP_HIGH = 0.05, 0.95
ADE_FLOOR_M = 0.2
ADE_SLOPE_M = 2.0
FDE_OVER_ADE = 1.8
PERTURBATION_M = 0.15
UNARY_GAIN = 1.5
PAIR_GAIN = 1.5
# latency for spaces that do not decode to a network (constant keeps ruggedness 0 separable)
GENERIC_LATENCY_S = 0.02
MAX_ENUMERATION = 2**22

_ARCH_LABELS = ("trunk_block_type", "trunk_width", "head_depth", "head_width", "head_shared_stem")


def is_architecture_space(space: SearchSpaceSpec) -> bool:
    return all(space.has_segment(lbl) for lbl in _ARCH_LABELS)


@dataclass(frozen=True)
class SurrogateSpec:
    seed: int
    space: SearchSpaceSpec
    ruggedness: float = 0.5
    latency_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.ruggedness <= 1.0:
            raise ValueError(f"ruggedness must lie in [0, 1], got {self.ruggedness}")
        if not self.latency_scale > 0:
            raise ValueError("latency_scale must be positive")

    @cached_property
    def coefficients(self):
        cards = self.space.gene_cardinalities
        rng = make_rng(self.seed, 0x5022, len(cards), *cards)
        unary = [rng.standard_normal(c) for c in cards]
        pairs = [(i, j) for i in range(len(cards)) for j in range(i + 1, len(cards))]
        pair_w = [rng.standard_normal((cards[i], cards[j])) for i, j in pairs]
        pair_v = [rng.standard_normal((cards[i], cards[j])) for i, j in pairs]
        return unary, pairs, pair_w, pair_v


def _pair_sum(genes, pairs, tables):
    acc = np.zeros(len(genes))
    for (i, j), t in zip(pairs, tables):
        acc += t[genes[:, i], genes[:, j]]
    return acc


def _check_genes(genes, space):
    if genes.ndim != 2 or genes.shape[1] != space.n_genes:
        raise SpaceMismatch(f"expected rows of {space.n_genes} genes, got shape {genes.shape}")
    cards = np.asarray(space.gene_cardinalities)
    if np.any(genes < 0) or np.any(genes >= cards):
        raise SpaceMismatch("gene value outside its cardinality")


def surrogate_arrays(genes, spec: SurrogateSpec):
    """Metrics for an ``(n, n_genes)`` gene array: ``(latency, map_f, ade, fde, map_det)`` arrays."""
    space = spec.space
    genes = np.asarray(genes, dtype=np.int64)
    _check_genes(genes, space)
    unary, pairs, pair_w, pair_v = spec.coefficients
    n_genes = space.n_genes
    z = np.zeros(len(genes))
    for i, u in enumerate(unary):
        z += u[genes[:, i]]
    z *= UNARY_GAIN / np.sqrt(n_genes)
    pert = np.zeros(len(genes))
    if pairs and spec.ruggedness > 0:
        norm = 1.0 / np.sqrt(len(pairs))
        z += spec.ruggedness * PAIR_GAIN * norm * _pair_sum(genes, pairs, pair_w)
        pert = spec.ruggedness * PERTURBATION_M * np.tanh(norm * _pair_sum(genes, pairs, pair_v))
    map_f = MAP_LOW + (MAP_HIGH - MAP_LOW) / (1.0 + np.exp(-z))
    ade = ADE_FLOOR_M + ADE_SLOPE_M * (1.0 - map_f) + pert
    fde = FDE_OVER_ADE * ade
    # detection quality tracks forecasting quality but is always at least as high
    map_det = np.minimum(1.0, map_f + 0.5 * (1.0 - map_f))
    if is_architecture_space(space):
        from .forecaster.architecture import cost_model_latency_batch

        latency = cost_model_latency_batch(genes, space)
    else:
        latency = np.full(len(genes), GENERIC_LATENCY_S)
    return spec.latency_scale * latency, map_f, ade, fde, map_det


def surrogate_evaluate(genome: Genome, spec: SurrogateSpec) -> CandidateMetrics:
    spec.space.validate(genome)
    lat, m, a, f, d = surrogate_arrays(np.asarray([genome.genes]), spec)
    return CandidateMetrics(float(lat[0]), float(m[0]), float(a[0]), float(f[0]), float(d[0]))


def energy_array(latency, map_f, ade, fde, weights: EnergyWeights):
    """Vectorised energy; surrogate outputs are never zero so no clamping applies."""
    return latency * map_f**weights.alpha * ade**weights.beta * fde**weights.gamma


def brute_force_optimum(spec: SurrogateSpec, weights: EnergyWeights = EnergyWeights(), chunk=1 << 16):
    """Exhaustive minimum of the energy; ties go to the lexicographically smallest genome."""
    space = spec.space
    if space.size > MAX_ENUMERATION:
        raise SpaceTooLarge(f"space {space.name!r} has 2**{space.log2_size:.2f} genomes; limit is 2**22")
    all_genes = enumerate_genomes(space)
    best_e, best_row = np.inf, None
    for start in range(0, len(all_genes), chunk):
        rows = all_genes[start:start + chunk]
        lat, m, a, f, _ = surrogate_arrays(rows, spec)
        e = energy_array(lat, m, a, f, weights)
        k = int(np.argmin(e))  # first minimum within the chunk; rows are lexicographic
        if e[k] < best_e:
            best_e, best_row = float(e[k]), rows[k]
    return Genome(space.name, tuple(int(g) for g in best_row)), best_e


class SurrogateEvaluator:
    """Callable ``genome -> CandidateMetrics`` for the search engine."""

    def __init__(self, spec: SurrogateSpec):
        self.spec = spec

    def __call__(self, genome: Genome) -> CandidateMetrics:
        return surrogate_evaluate(genome, self.spec)
