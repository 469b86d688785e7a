"""
Wall-clock scaling of the parallel scan kernel.
"""

import time
from typing import List, Sequence

import numpy as np

from shared.logging_config import get_logger
from shared.models import BenchRow

from ..autodiff import Stream, default_dtype, generator
from .kernels import selective_scan_parallel

logger = get_logger(__name__)


def scan_runtime_benchmark(
    lengths: Sequence[int],
    repeats: int = 10,
    channels: int = 16,
    state_dim: int = 16,
    seed: int = 0,
) -> List[BenchRow]:
    """
    Median runtime of ``selective_scan_parallel`` per sequence length.

    Args:
        lengths: ascending sequence lengths
        repeats: timed repetitions per length (at least 10)
    """
    lengths = [int(n) for n in lengths]
    if any(n < 1 for n in lengths) or lengths != sorted(lengths):
        raise ValueError(f"lengths must be positive and ascending, got {lengths}")
    repeats = max(10, int(repeats))
    dtype = default_dtype()

    rows = []
    for length in lengths:
        rng = generator(seed, Stream.BENCH, length)
        a_bar = rng.uniform(0.5, 1.0, size=(1, length, channels, state_dim)).astype(dtype)
        b_bar = rng.normal(size=a_bar.shape).astype(dtype)
        C = rng.normal(size=(1, length, state_dim)).astype(dtype)
        x = rng.normal(size=(1, length, channels)).astype(dtype)
        d_skip = np.ones(channels, dtype=dtype)

        selective_scan_parallel(a_bar, b_bar, C, x, d_skip)  # warm-up
        samples = []
        for _ in range(repeats):
            start = time.perf_counter_ns()
            selective_scan_parallel(a_bar, b_bar, C, x, d_skip)
            samples.append(time.perf_counter_ns() - start)

        median = int(np.median(samples))
        logger.debug("Scan benchmark", length=length, median_ns=median, repeats=repeats)
        rows.append(BenchRow(length=length, median_ns=median))
    return rows


def format_csv(rows: Sequence[BenchRow]) -> str:
    lines = ["L,median_ns"] + [f"{row.length},{row.median_ns}" for row in rows]
    return "\n".join(lines) + "\n"
