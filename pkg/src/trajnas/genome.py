"""Discrete architecture search space, genome encoding and the mutation move.

A search space is a fixed-length vector of categorical genes grouped into
labelled segments. The built-in ``desk`` space encodes a searchable trunk
followed by five parallel prediction heads::

    trunk_depth        1 gene   {1, 2, 3, 4}
    trunk_block_type   4 genes  {dense, residual, identity}   (one per layer)
    trunk_width        1 gene   {16, 32, 64, 128}
    head_depth         5 genes  {1, 2, 3}                     (one per head)
    head_width         5 genes  {16, 32, 64}
    head_shared_stem   5 genes  {0, 1}

Heads are ordered velocity, rotation, dimension, regression, height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import NoMutableGene, ParseError, SpaceMismatch

HEAD_NAMES = ("velocity", "rotation", "dimension", "regression", "height")
BLOCK_TYPES = ("dense", "residual", "identity")
SEGMENT_LABELS = (
    "trunk_depth",
    "trunk_block_type",
    "trunk_width",
    "head_depth",
    "head_width",
    "head_shared_stem",
)

_MASK64 = (1 << 64) - 1


def make_rng(seed, *extra):
    """Deterministic numpy generator for a 64-bit seed plus optional stream keys."""
    entropy = [int(seed) & _MASK64] + [int(e) & _MASK64 for e in extra]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class Segment:
    label: str
    start: int
    stop: int
    choices: tuple = ()

    def __len__(self):
        return self.stop - self.start


@dataclass(frozen=True)
class SearchSpaceSpec:
    """Cardinalities of each gene plus the segment layout that gives them meaning."""

    name: str
    gene_cardinalities: tuple[int, ...]
    segments: tuple[Segment, ...] = field(default=())

    def __post_init__(self):
        cards = tuple(int(c) for c in self.gene_cardinalities)
        object.__setattr__(self, "gene_cardinalities", cards)
        if not cards:
            raise ValueError("a search space needs at least one gene")
        if any(c < 1 for c in cards):
            raise ValueError("gene cardinalities must be >= 1")
        if ":" in self.name or "," in self.name:
            raise ValueError("space name may not contain ':' or ','")
        covered = []
        for seg in self.segments:
            if not 0 <= seg.start < seg.stop <= len(cards):
                raise ValueError(f"segment {seg.label!r} out of range")
            covered.extend(range(seg.start, seg.stop))
            if seg.choices and any(cards[i] != len(seg.choices) for i in range(seg.start, seg.stop)):
                raise ValueError(f"segment {seg.label!r} choices disagree with cardinalities")
        if self.segments and sorted(covered) != list(range(len(cards))):
            raise ValueError("segments must be disjoint and cover every gene")

    @property
    def n_genes(self):
        return len(self.gene_cardinalities)

    @property
    def log2_size(self):
        return math.fsum(math.log2(c) for c in self.gene_cardinalities)

    @property
    def size(self):
        return math.prod(self.gene_cardinalities)

    @property
    def mutable_genes(self):
        return tuple(i for i, c in enumerate(self.gene_cardinalities) if c >= 2)

    def segment(self, label):
        for seg in self.segments:
            if seg.label == label:
                return seg
        raise KeyError(label)

    def has_segment(self, label):
        return any(seg.label == label for seg in self.segments)

    def validate(self, genome):
        if genome.space_id != self.name:
            raise SpaceMismatch(f"genome belongs to space {genome.space_id!r}, not {self.name!r}")
        if len(genome.genes) != self.n_genes:
            raise SpaceMismatch(f"expected {self.n_genes} genes, got {len(genome.genes)}")
        for i, (g, c) in enumerate(zip(genome.genes, self.gene_cardinalities)):
            if not 0 <= g < c:
                raise SpaceMismatch(f"gene {i} = {g} outside [0, {c})")
        return genome


@dataclass(frozen=True, order=True)
class Genome:
    space_id: str
    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))

    def __str__(self):
        return serialize(self)


def build_architecture_space(
    name: str,
    trunk_depths: Sequence[int] | None = (1, 2, 3, 4),
    trunk_block_types: Sequence[str] = BLOCK_TYPES,
    n_block_genes: int = 4,
    trunk_widths: Sequence[int] = (16, 32, 64, 128),
    head_depths: Sequence[int] = (1, 2, 3),
    head_widths: Sequence[int] = (16, 32, 64),
    shared_stem: Sequence[int] = (0, 1),
) -> SearchSpaceSpec:
    """Assemble a trunk-plus-five-heads space from per-segment choice tables.

    ``trunk_depths=None`` drops the depth gene; the trunk then always has
    ``n_block_genes`` layers (identity blocks still shorten it in effect).
    """
    layout = []
    if trunk_depths is not None:
        if max(trunk_depths) > n_block_genes:
            raise ValueError("trunk depth exceeds the number of block genes")
        layout.append(("trunk_depth", 1, tuple(trunk_depths)))
    layout += [
        ("trunk_block_type", n_block_genes, tuple(trunk_block_types)),
        ("trunk_width", 1, tuple(trunk_widths)),
        ("head_depth", len(HEAD_NAMES), tuple(head_depths)),
        ("head_width", len(HEAD_NAMES), tuple(head_widths)),
        ("head_shared_stem", len(HEAD_NAMES), tuple(shared_stem)),
    ]
    cards, segments, pos = [], [], 0
    for label, count, choices in layout:
        segments.append(Segment(label, pos, pos + count, choices))
        cards += [len(choices)] * count
        pos += count
    return SearchSpaceSpec(name, tuple(cards), tuple(segments))


def default_space(scale="desk") -> SearchSpaceSpec:
    """Built-in spaces.

    ``desk``     21 genes, about 2**31.2 architectures, fully decodable.
    ``compact``  18 genes, 589,824 architectures; small enough to enumerate.
    ``paper``    300 binary genes; used for size reporting only.
    """
    if scale == "desk":
        return build_architecture_space("desk")
    if scale == "compact":
        return build_architecture_space(
            "compact",
            trunk_depths=None,
            n_block_genes=2,
            trunk_widths=(16, 32),
            head_depths=(1, 2),
            head_widths=(16, 32),
        )
    if scale == "paper":
        return SearchSpaceSpec("paper", (2,) * 300, (Segment("bits", 0, 300, (0, 1)),))
    raise ValueError(f"unknown space scale {scale!r}")


def random_genome(space: SearchSpaceSpec, rng_seed: int) -> Genome:
    rng = make_rng(rng_seed)
    genes = [int(rng.integers(c)) for c in space.gene_cardinalities]
    return Genome(space.name, tuple(genes))


def mutate(genome: Genome, space: SearchSpaceSpec, rng_seed: int) -> Genome:
    """Reassign one uniformly chosen mutable gene to a different value."""
    space.validate(genome)
    mutable = space.mutable_genes
    if not mutable:
        raise NoMutableGene(f"every gene of space {space.name!r} has cardinality 1")
    rng = make_rng(rng_seed)
    idx = mutable[int(rng.integers(len(mutable)))]
    current = genome.genes[idx]
    new = int(rng.integers(space.gene_cardinalities[idx] - 1))
    if new >= current:
        new += 1
    genes = list(genome.genes)
    genes[idx] = new
    return Genome(genome.space_id, tuple(genes))


def serialize(genome: Genome) -> str:
    return f"{genome.space_id}:" + ",".join(str(g) for g in genome.genes)


def deserialize(text: str, space: SearchSpaceSpec) -> Genome:
    text = text.strip()
    space_id, sep, body = text.partition(":")
    if not sep or not space_id:
        raise ParseError(f"genome text {text!r} lacks a 'space:' prefix")
    try:
        genes = tuple(int(tok) for tok in body.split(",")) if body else ()
    except ValueError as exc:
        raise ParseError(f"genome text {text!r} has a non-integer gene") from exc
    if any(g < 0 for g in genes):
        raise SpaceMismatch(f"negative gene in {text!r}")
    return space.validate(Genome(space_id, genes))


def enumerate_genomes(space: SearchSpaceSpec) -> np.ndarray:
    """All genomes of ``space`` as an int array, rows in lexicographic order."""
    grids = np.meshgrid(*[np.arange(c) for c in space.gene_cardinalities], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def space_to_dict(space: SearchSpaceSpec) -> dict:
    return {
        "name": space.name,
        "gene_cardinalities": list(space.gene_cardinalities),
        "segments": [
            {"label": s.label, "start": s.start, "stop": s.stop, "choices": list(s.choices)}
            for s in space.segments
        ],
    }


def space_from_dict(d: dict) -> SearchSpaceSpec:
    segments = tuple(Segment(s["label"], int(s["start"]), int(s["stop"]), tuple(s.get("choices", ())))
                     for s in d.get("segments", ()))
    return SearchSpaceSpec(str(d["name"]), tuple(int(c) for c in d["gene_cardinalities"]), segments)
