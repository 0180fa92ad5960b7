"""Deterministic seed derivation for chunked Monte Carlo work."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def split_trials(trials: int, workers: int) -> list[int]:
    workers = max(1, int(workers))
    base, extra = divmod(int(trials), workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def child_seeds(seed, *path: int, count: int = 1) -> list[np.random.SeedSequence]:
    """``count`` independent streams below the node ``(seed, *path)``."""
    root = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in path))
    return root.spawn(count)


def run_chunks(fn, tasks: list, workers: int) -> list:
    """Apply ``fn`` to each task; results come back in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
