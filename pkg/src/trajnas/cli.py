"""Command-line interface.

Exit codes: 0 success, 2 usage or invalid parameters, 3 I/O or file-format
failure, 4 evaluation failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .exceptions import EvaluationError, FormatError, InvalidParams, NonFiniteLoss, TrajNASError

EXIT_USAGE, EXIT_IO, EXIT_EVAL = 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _threads():
    raw = os.environ.get("TRAJNAS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise CliError(EXIT_USAGE, f"TRAJNAS_THREADS must be a positive integer, got {raw!r}")
    return n


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_config(args):
    from .config import RunConfig

    if not args.config:
        return RunConfig()
    return RunConfig.load(args.config)


def _dataset(cfg):
    from .synthdata import generate_dataset, load_dataset

    path = cfg["dataset"]["path"]
    if path:
        return load_dataset(path)
    return generate_dataset(**cfg.dataset_kwargs())


def _evaluator(cfg, deterministic=None, full=False):
    """Build the evaluator described by ``cfg``; returns ``(callable, space)``."""
    space = cfg.space()
    if cfg["evaluator"]["kind"] == "surrogate":
        from .surrogate import SurrogateEvaluator

        return SurrogateEvaluator(cfg.surrogate_spec()), space
    from .forecaster.evaluate import TrainedModelEvaluator

    return TrainedModelEvaluator(_dataset(cfg), cfg.eval_config(full=full, deterministic=deterministic),
                                 space), space


# -- gen-data ----------------------------------------------------------------------

def cmd_gen_data(args):
    from .synthdata import dumps_dataset, generate_dataset, subclass_counts

    for flag in ("scenes", "val_scenes", "agents"):
        v = getattr(args, flag)
        if v is not None and v < 1:
            raise CliError(EXIT_USAGE, f"--{flag.replace('_', '-')} must be >= 1, got {v}")
    if args.noise < 0:
        raise CliError(EXIT_USAGE, f"--noise must be >= 0, got {args.noise}")
    n_val = args.val_scenes if args.val_scenes is not None else max(1, args.scenes // 2)
    data = generate_dataset(seed=args.seed, n_train_scenes=args.scenes, n_val_scenes=n_val,
                            agents_per_scene=args.agents, noise_sigma_m=args.noise)
    _write_text(args.out, dumps_dataset(data))
    counts = subclass_counts(list(data.train) + list(data.val))
    total = sum(counts.values())
    mix = " ".join(f"{k}={100.0 * v / total:.1f}%" for k, v in counts.items())
    print(f"scenes: train={len(data.train)} val={len(data.val)} agents={total}; subclass mix: {mix}")
    return 0


# -- search ------------------------------------------------------------------------

def _search_outputs(result, weights):
    from .energy import energy
    from .genome import serialize

    metrics = dict(result.best_metrics.to_dict(), energy=energy(result.best_metrics, weights))
    return serialize(result.best_genome) + "\n", _dump(metrics)


def cmd_search(args):
    from .search import run_search, trace_to_csv

    cfg = _load_config(args)
    over = {}
    if args.algo:
        over["search.algorithm"] = args.algo
    if args.seed is not None:
        over["search.seed"] = args.seed
    if args.iterations is not None:
        over["search.iterations"] = args.iterations
    if args.deterministic:
        over["evaluator.deterministic"] = True
    cfg = cfg.override(over) if over else cfg
    out = Path(args.out or Path(cfg["output_dir"]) / cfg["run_id"])
    _write_text(out / "config.json", cfg.to_json())

    evaluator, space = _evaluator(cfg)
    weights = cfg.weights()
    result = run_search(space, evaluator, weights, cfg.search_config())
    genome_txt, metrics_json = _search_outputs(result, weights)
    _write_text(out / "trace.csv", trace_to_csv(result.trace))
    _write_text(out / "best_genome.txt", genome_txt)
    _write_text(out / "best_metrics.json", metrics_json)
    if args.full_eval_best:
        from .energy import energy

        full_eval, _ = _evaluator(cfg, full=True)
        m = full_eval(result.best_genome)
        _write_text(out / "full_eval.json", _dump(dict(m.to_dict(), energy=energy(m, weights))))
    print(f"best energy {result.best_energy:.6g} genome {genome_txt.strip()} "
          f"({result.evaluations_spent} fresh evaluations) -> {out}")
    return 0


# -- compare -----------------------------------------------------------------------

def _compare_job(payload):
    from .config import RunConfig
    from .search import run_search

    cfg_json, algo, seed = payload
    cfg = RunConfig.from_json(cfg_json)
    evaluator, space = _evaluator(cfg)
    res = run_search(space, evaluator, cfg.weights(), cfg.search_config(algorithm=algo, seed=seed))
    return algo, seed, res.best_curve()


def cmd_compare(args):
    import statistics

    from .search import ALGORITHMS

    if args.seeds < 1:
        raise CliError(EXIT_USAGE, f"--seeds must be >= 1, got {args.seeds}")
    cfg = _load_config(args)
    out = Path(args.out or Path(cfg["output_dir"]) / f"{cfg['run_id']}_compare")
    _write_text(out / "config.json", cfg.to_json())
    base = cfg["search"]["seed"]
    jobs = [(cfg.to_json(), a, base + s) for a in ALGORITHMS for s in range(args.seeds)]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compare_job, jobs))
    else:
        results = [_compare_job(j) for j in jobs]

    lines = ["algo,seed,iteration,best_energy"]
    summary = {}
    for algo, seed, curve in results:
        # iteration 0 is the starting point; rows cover the proposals 1..iterations
        lines += [f"{algo},{seed},{k},{format(e, '.6g')}" for k, e in enumerate(curve) if k > 0]
        summary.setdefault(algo, []).append(curve[-1])
    _write_text(out / "curves.csv", "\n".join(lines) + "\n")
    doc = {a: {"median_best_energy": statistics.median(v), "best_energies": v} for a, v in summary.items()}
    _write_text(out / "summary.json", _dump(doc))
    for a in ALGORITHMS:
        print(f"{a:>6}: median best energy {doc[a]['median_best_energy']:.6g} over {args.seeds} seeds")
    return 0


# -- eval --------------------------------------------------------------------------

def _cv_metrics(data, cfg, full, deterministic):
    from .forecaster.evaluate import cv_detect_scenes, report_to_metrics
    from .metrics import forecasting_report, ground_truth_from_scenes

    scenes = data.val if full else data.mini_val
    k = cfg["evaluator"]["training"]["k_hypotheses"]
    report = forecasting_report(cv_detect_scenes(scenes, k), ground_truth_from_scenes(scenes), k_used=k,
                                dist_threshold_m=cfg["evaluator"]["dist_threshold_m"])
    history, horizon = data.config.get("history", 4), data.config.get("horizon", 6)
    if deterministic:
        # least-squares fit plus extrapolation: about 2 multiply-adds per input pose and output step
        latency = 2 * (history + horizon) / 1e9 + 1e-5
    else:
        import time

        from .metrics import constant_velocity_forecast

        past = [[0.5 * i, 0.0, 0.0, 0.8] for i in range(history)]
        t0 = time.perf_counter()
        for _ in range(100):
            constant_velocity_forecast(past, horizon, 0.5)
        latency = (time.perf_counter() - t0) / 100
    return report_to_metrics(report, latency)


def cmd_eval(args):
    from .energy import energy
    from .genome import deserialize, serialize

    cfg = _load_config(args)
    if args.data:
        cfg = cfg.override({"dataset.path": args.data})
    if args.deterministic:
        cfg = cfg.override({"evaluator.deterministic": True})
    det = cfg["evaluator"]["deterministic"]
    if args.baseline_cv:
        metrics = _cv_metrics(_dataset(cfg), cfg, args.full, det)
        label = "constant-velocity"
    else:
        if not args.genome:
            raise CliError(EXIT_USAGE, "eval needs --genome or --baseline-cv")
        from .forecaster.evaluate import evaluate_candidate

        space = cfg.space()
        genome = deserialize(args.genome, space)
        label = serialize(genome)
        try:
            metrics = evaluate_candidate(genome, _dataset(cfg), cfg.eval_config(full=args.full), space)
        except (FormatError, OSError, InvalidParams):
            raise
        except Exception as exc:
            raise EvaluationError(label, exc) from exc
    doc = dict(metrics.to_dict(), energy=energy(metrics, cfg.weights()), genome=label)
    text = _dump(doc)
    if args.out:
        _write_text(args.out, text)
    sys.stdout.write(text)
    return 0


# -- metrics -----------------------------------------------------------------------

def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def _gt_scenes(doc, split):
    from .synthdata import scenes_from_json

    if isinstance(doc, dict) and "splits" in doc:
        if split not in doc["splits"]:
            raise FormatError(f"dataset has no split {split!r}")
        return scenes_from_json(doc["splits"][split])
    if isinstance(doc, dict) and "scenes" in doc:
        return scenes_from_json(doc["scenes"])
    if isinstance(doc, list):
        return scenes_from_json(doc)
    raise FormatError("ground truth must be a dataset file or a list of scenes")


def cmd_metrics(args):
    from .metrics import Detection, forecasting_report, ground_truth_from_scenes

    pred = _read_json(args.pred)
    if isinstance(pred, dict):
        pred = pred.get("detections")
    if not isinstance(pred, list):
        raise FormatError("predictions must be a list of detections or {\"detections\": [...]}")
    try:
        dets = [Detection.from_dict(d) for d in pred]
        scenes = _gt_scenes(_read_json(args.gt), args.split)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed input: {exc}") from exc
    report = forecasting_report(dets, ground_truth_from_scenes(scenes), k_used=args.k,
                                dist_threshold_m=args.threshold)
    text = _dump(report.to_json())
    if args.out:
        _write_text(args.out, text)
    sys.stdout.write(text)
    return 0


# -- entry point -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="trajnas", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scenes", type=int, default=40, help="training scenes")
    g.add_argument("--val-scenes", type=int, default=None, help="validation scenes (default scenes/2)")
    g.add_argument("--agents", type=int, default=20, help="agents per scene")
    g.add_argument("--noise", type=float, default=0.2, help="observation noise sigma in metres")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("search", help="run one search algorithm")
    s.add_argument("--config", required=True)
    s.add_argument("--algo", choices=("mosa", "random", "local"))
    s.add_argument("--seed", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--deterministic", action="store_true", help="cost-model latency, single-threaded maths")
    s.add_argument("--full-eval-best", action="store_true", help="retrain the best genome on the full split")
    s.add_argument("--out", help="output directory (default output_dir/run_id)")
    s.set_defaults(func=cmd_search)

    c = sub.add_parser("compare", help="run all algorithms over several seeds")
    c.add_argument("--config", required=True)
    c.add_argument("--seeds", type=int, default=10)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("eval", help="train and score one genome")
    e.add_argument("--genome")
    e.add_argument("--baseline-cv", action="store_true", help="score the constant-velocity predictor instead")
    e.add_argument("--data", help="dataset file (default: generate from config)")
    e.add_argument("--config")
    e.add_argument("--deterministic", action="store_true")
    e.add_argument("--full", action="store_true", help="train on the full split for the full epochs")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("metrics", help="score prediction files against ground truth")
    m.add_argument("--pred", required=True)
    m.add_argument("--gt", required=True)
    m.add_argument("--split", default="val", help="split to use when --gt is a dataset file")
    m.add_argument("--k", type=int, default=1)
    m.add_argument("--threshold", type=float, default=2.0)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with code 2 on usage errors
    try:
        _threads()
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (EvaluationError, NonFiniteLoss) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except (InvalidParams, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TrajNASError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
