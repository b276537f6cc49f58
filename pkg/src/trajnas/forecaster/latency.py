"""Wall-clock latency of a single-agent forecast on the host running the search."""
from __future__ import annotations

import statistics
import time

import numpy as np

from ..exceptions import ClockUnavailable, InvalidParams
from .network import forward_rollout


def probe_history(history, dt=0.5, speed_mps=5.0):
    """A straight, eastbound track used as the timing input."""
    t = (np.arange(history) - (history - 1)) * dt
    return np.stack([speed_mps * t, np.zeros(history), np.zeros(history), np.full(history, 0.8)], axis=1)


def measure_latency(model, repetitions=20, warmup=3, clock=time.perf_counter) -> float:
    """Median seconds per ``forward_rollout`` call over ``repetitions`` timed runs."""
    if repetitions < 1 or warmup < 0:
        raise InvalidParams("repetitions >= 1 and warmup >= 0 are required")
    try:
        clock()
    except Exception as exc:  # pragma: no cover - platform specific
        raise ClockUnavailable(f"high-resolution clock unavailable: {exc}") from exc
    hist = probe_history(model.history, model.dt)
    for _ in range(warmup):
        forward_rollout(model, hist)
    times = []
    for _ in range(repetitions):
        t0 = clock()
        forward_rollout(model, hist)
        times.append(clock() - t0)
    lat = statistics.median(times)
    if not lat > 0:
        # a coarse clock can report zero for a fast call; fall back to one resolution step
        res = time.get_clock_info("perf_counter").resolution
        if not res > 0:
            raise ClockUnavailable("clock reports zero elapsed time and no resolution")
        lat = res
    return float(lat)
