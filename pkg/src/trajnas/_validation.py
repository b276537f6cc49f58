"""Input checks shared by the estimators and the command line."""
from __future__ import annotations

import numpy as np

from .synthdata import DatasetSplit, Scene


def check_histories(X, history=None):
    """Coerce observed pose histories to a finite float array of shape ``(n, H, 4)``."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[2] != 4:
        raise ValueError(f"expected histories of shape (n, H, 4), got {arr.shape}")
    if arr.shape[1] < 2:
        raise ValueError("each history needs at least two poses")
    if history is not None and arr.shape[1] != history:
        raise ValueError(f"expected {history} poses per history, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("histories contain NaN or infinite values")
    return arr


def check_scenes(scenes):
    """Accept a DatasetSplit (its training scenes), a Scene, or an iterable of Scenes."""
    if isinstance(scenes, DatasetSplit):
        scenes = scenes.train
    if isinstance(scenes, Scene):
        scenes = [scenes]
    scenes = list(scenes)
    if not scenes:
        raise ValueError("no scenes given")
    bad = [type(s).__name__ for s in scenes if not isinstance(s, Scene)]
    if bad:
        raise TypeError(f"expected Scene objects, got {bad[0]}")
    return scenes


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
