"""Simulated-annealing architecture search and its two baselines.

All three algorithms share one budget convention: iteration 0 evaluates the
starting genome and iterations ``1..iterations`` each look up exactly one
proposal through the evaluation cache, so every run makes ``iterations + 1``
lookups and writes ``iterations + 1`` trace records.
"""
from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field, replace

from .energy import CandidateMetrics, EnergyWeights, energy
from .exceptions import EvaluationError, InvalidParams, InvalidTemperature
from .genome import Genome, SearchSpaceSpec, make_rng, mutate, random_genome, serialize

ALGORITHMS = ("mosa", "random", "local")
TRACE_HEADER = ("iteration", "genome", "energy", "temperature", "accepted", "best_energy", "cached")


@dataclass(frozen=True)
class SearchConfig:
    """Search budget and schedule.

    ``delta_scale`` rescales energy differences before the acceptance test:
    ``delta = delta_scale * (E_new - E_current) / E_start`` where ``E_start`` is
    the energy of the starting genome. Energies of small networks are of order
    1e-4, so a raw difference against temperatures of 2500..2.5 would accept
    every move; ``delta_scale=None`` uses raw differences. With the default a
    worsening of 1/12 of the starting energy is accepted with probability 1/e
    at ``t_max``; at ``t_min`` the same odds need a 1000 times smaller step.
    """

    t_max: float = 2500.0
    t_min: float = 2.5
    iterations: int = 108
    seed: int = 0
    algorithm: str = "mosa"
    local_restart_patience: int = 10
    delta_scale: float | None = 30000.0

    def __post_init__(self):
        bad = []
        if not self.t_min > 0:
            bad.append("t_min")
        if not self.t_max >= self.t_min:
            bad.append("t_max")
        if self.iterations < 1:
            bad.append("iterations")
        if self.algorithm not in ALGORITHMS:
            bad.append("algorithm")
        if self.local_restart_patience < 1:
            bad.append("local_restart_patience")
        if self.delta_scale is not None and not self.delta_scale > 0:
            bad.append("delta_scale")
        if bad:
            raise InvalidParams(f"invalid search configuration: {', '.join(bad)}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    genome_text: str
    energy: float
    temperature: float
    accepted: bool
    best_energy_so_far: float
    evaluation_was_cached: bool


@dataclass
class SearchResult:
    best_genome: Genome
    best_metrics: CandidateMetrics
    best_energy: float
    trace: list = field(default_factory=list)
    evaluations_spent: int = 0
    algorithm: str = "mosa"

    def best_curve(self):
        return [r.best_energy_so_far for r in self.trace]


def acceptance_probability(delta: float, temperature: float) -> float:
    if not temperature > 0:
        raise InvalidTemperature(f"temperature must be positive, got {temperature}")
    if delta <= 0:
        return 1.0
    return math.exp(-delta / temperature)


def temperature_at(k: int, cfg: SearchConfig) -> float:
    """Geometric cooling from ``t_max`` at k=0 to ``t_min`` at k=iterations."""
    if not 0 <= k <= cfg.iterations:
        raise ValueError(f"iteration {k} outside [0, {cfg.iterations}]")
    if k == cfg.iterations:
        return cfg.t_min
    return cfg.t_max * (cfg.t_min / cfg.t_max) ** (k / cfg.iterations)


class CachedEvaluator:
    """Memoising wrapper; ``calls`` counts real evaluator invocations."""

    def __init__(self, evaluator):
        self.evaluator = evaluator
        self.calls = 0
        self.lookups = 0
        self._store = {}
        self._lock = threading.Lock()

    def lookup(self, genome: Genome):
        """Return ``(metrics, was_cached)``."""
        with self._lock:
            self.lookups += 1
            if genome in self._store:
                return self._store[genome], True
        try:
            metrics = self.evaluator(genome)
        except EvaluationError:
            raise
        except Exception as exc:
            raise EvaluationError(serialize(genome), exc) from exc
        with self._lock:
            if genome in self._store:  # another thread won the race; keep the first result
                return self._store[genome], True
            self.calls += 1
            self._store[genome] = metrics
        return metrics, False

    def __call__(self, genome):
        return self.lookup(genome)[0]

    def __len__(self):
        return len(self._store)


class _Run:
    """Bookkeeping shared by the three algorithms."""

    def __init__(self, evaluator, weights, cfg):
        self.cache = evaluator if isinstance(evaluator, CachedEvaluator) else CachedEvaluator(evaluator)
        self.weights = weights
        self.cfg = cfg
        self.trace = []
        self.best = None  # (energy, genome, metrics)

    def evaluate(self, genome):
        metrics, cached = self.cache.lookup(genome)
        return metrics, energy(metrics, self.weights), cached

    def record(self, k, genome, e, metrics, accepted, cached, temperature):
        if self.best is None or e < self.best[0]:
            self.best = (e, genome, metrics)
        self.trace.append(TraceRecord(k, serialize(genome), e, temperature, accepted, self.best[0], cached))

    def result(self):
        e, g, m = self.best
        return SearchResult(g, m, e, self.trace, self.cache.calls, self.cfg.algorithm)


def _streams(cfg):
    """Independent generators for proposals and acceptance draws."""
    return make_rng(cfg.seed, 0x9E0), make_rng(cfg.seed, 0xACC)


def _seed_from(rng):
    return int(rng.integers(0, 2**63 - 1))


def _start(space, cfg, initial):
    return random_genome(space, cfg.seed) if initial is None else space.validate(initial)


def mosa_search(space: SearchSpaceSpec, evaluator, weights: EnergyWeights = EnergyWeights(),
                cfg: SearchConfig = SearchConfig(), initial: Genome | None = None) -> SearchResult:
    """Annealing over single-gene mutations; returns the best genome ever evaluated."""
    cfg = replace(cfg, algorithm="mosa")
    run = _Run(evaluator, weights, cfg)
    propose, accept = _streams(cfg)
    current = _start(space, cfg, initial)
    metrics, e_cur, cached = run.evaluate(current)
    e_start = e_cur
    run.record(0, current, e_cur, metrics, True, cached, temperature_at(0, cfg))
    for k in range(1, cfg.iterations + 1):
        t = temperature_at(k, cfg)
        cand = mutate(current, space, _seed_from(propose))
        metrics, e_new, cached = run.evaluate(cand)
        delta = e_new - e_cur
        if cfg.delta_scale is not None and e_start > 0:
            delta = cfg.delta_scale * delta / e_start
        ok = accept.random() < acceptance_probability(delta, t)
        run.record(k, cand, e_new, metrics, ok, cached, t)
        if ok:
            current, e_cur = cand, e_new
    return run.result()


def random_search(space, evaluator, weights=EnergyWeights(), cfg: SearchConfig = SearchConfig(),
                  initial: Genome | None = None) -> SearchResult:
    cfg = replace(cfg, algorithm="random")
    run = _Run(evaluator, weights, cfg)
    propose, _ = _streams(cfg)
    g = _start(space, cfg, initial)
    for k in range(cfg.iterations + 1):
        if k:
            g = random_genome(space, _seed_from(propose))
        metrics, e, cached = run.evaluate(g)
        run.record(k, g, e, metrics, True, cached, temperature_at(k, cfg))
    return run.result()


def local_search(space, evaluator, weights=EnergyWeights(), cfg: SearchConfig = SearchConfig(),
                 initial: Genome | None = None) -> SearchResult:
    """First-improvement hill climbing with random restarts after a run of failures."""
    cfg = replace(cfg, algorithm="local")
    run = _Run(evaluator, weights, cfg)
    propose, _ = _streams(cfg)
    current = _start(space, cfg, initial)
    metrics, e_cur, cached = run.evaluate(current)
    run.record(0, current, e_cur, metrics, True, cached, temperature_at(0, cfg))
    failures = 0
    for k in range(1, cfg.iterations + 1):
        restart = failures >= cfg.local_restart_patience
        seed = _seed_from(propose)
        cand = random_genome(space, seed) if restart else mutate(current, space, seed)
        metrics, e_new, cached = run.evaluate(cand)
        ok = restart or e_new < e_cur
        run.record(k, cand, e_new, metrics, ok, cached, temperature_at(k, cfg))
        if ok:
            current, e_cur, failures = cand, e_new, 0
        else:
            failures += 1
    return run.result()


_DISPATCH = {"mosa": mosa_search, "random": random_search, "local": local_search}


def run_search(space, evaluator, weights=EnergyWeights(), cfg: SearchConfig = SearchConfig(),
               initial: Genome | None = None) -> SearchResult:
    return _DISPATCH[cfg.algorithm](space, evaluator, weights, cfg, initial)


def _g6(x):
    return format(x, ".6g")


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace:
        w.writerow([r.iteration, r.genome_text, _g6(r.energy), _g6(r.temperature),
                    int(r.accepted), _g6(r.best_energy_so_far), int(r.evaluation_was_cached)])
    return buf.getvalue()


def write_trace_csv(trace, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_to_csv(trace))
