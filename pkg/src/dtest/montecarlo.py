"""Seeded simulation of random symbol matrices.

Trials are cut into fixed blocks of ``BLOCK_SIZE``; block b draws from its
own PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(b,))``. Blocks
are independent, so the success count does not depend on how many workers
process them or in what order.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteMatrix
from .errors import IndistinguishableRows, ParameterError
from .probability import AlphabetProfile
from .testing import min_test_length

BLOCK_SIZE = 4096
GENERATOR = f"numpy.random.PCG64 via SeedSequence(seed, spawn_key=(block,)), block={BLOCK_SIZE}, numpy {np.__version__}"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DTEST_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class McConfig:
    profile: AlphabetProfile
    trials: int
    seed: int
    workers: int = field(default_factory=default_workers)

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials!r}", trials=self.trials)
        if not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}", seed=self.seed)
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers!r}", workers=self.workers)


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    trials: int
    successes: int
    std_error: float
    seed: int
    generator: str = GENERATOR

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int) -> "McEstimate":
        p = successes / trials
        return cls(p, trials, successes, math.sqrt(p * (1 - p) / trials), seed)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "trials": self.trials,
            "successes": self.successes,
            "std_error": self.std_error,
            "seed": self.seed,
            "generator": self.generator,
        }


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(trials: int):
    return [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(-(-trials // BLOCK_SIZE))]


def sample_block(profile: AlphabetProfile, seed: int, block: int, size: int) -> np.ndarray:
    """``size`` random matrices of shape n x m, column j uniform on [0, k_j)."""
    rng = block_rng(seed, block)
    highs = np.array(profile.sizes, dtype=np.int64)
    return rng.integers(0, highs, size=(size, profile.n, profile.m), dtype=np.int64)


def has_matching_rows(samples: np.ndarray, sizes) -> np.ndarray:
    """Per-sample flag: do two rows coincide in every column."""
    b, n, m = samples.shape
    if n < 2:
        return np.zeros(b, dtype=bool)
    if math.fsum(math.log2(k) for k in sizes) < 62:
        radix = np.cumprod([1, *sizes[:-1]]).astype(np.int64)
        codes = np.sort(samples @ radix, axis=1)
        return (codes[:, 1:] == codes[:, :-1]).any(axis=1)
    out = np.zeros(b, dtype=bool)
    for i in range(n - 1):
        out |= (samples[:, i + 1 :, :] == samples[:, i : i + 1, :]).all(axis=2).any(axis=1)
    return out


def non_constant_columns(samples: np.ndarray) -> np.ndarray:
    return (samples != samples[:, :1, :]).any(axis=1).sum(axis=1)


def _run_blocks(config: McConfig, fn):
    blocks = _blocks(config.trials)
    if config.workers == 1 or len(blocks) == 1:
        return [fn(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(lambda blk: fn(*blk), blocks))


def mc_row_match(config: McConfig) -> McEstimate:
    """Fraction of sampled matrices with at least one pair of identical rows."""
    profile = config.profile

    def block(b, size):
        return int(has_matching_rows(sample_block(profile, config.seed, b, size), profile.sizes).sum())

    return McEstimate.from_counts(sum(_run_blocks(config, block)), config.trials, config.seed)


def mc_matching_test(config: McConfig, l: int) -> McEstimate:
    """Fraction of sampled matrices with at least ``l`` non-constant columns."""
    if not isinstance(l, int) or l < 0:
        raise ParameterError(f"l must be an integer >= 0, got {l!r}", l=l)
    profile = config.profile

    def block(b, size):
        return int((non_constant_columns(sample_block(profile, config.seed, b, size)) >= l).sum())

    return McEstimate.from_counts(sum(_run_blocks(config, block)), config.trials, config.seed)


@dataclass(frozen=True)
class MinLengthHistogram:
    histogram: dict  # exact minimal test length -> sample count
    lower_bounds: dict  # budget-limited samples: proven lower bound -> count
    indistinguishable: int  # samples with two fully matching rows
    trials: int
    seed: int
    generator: str = GENERATOR

    @property
    def mode(self) -> int | None:
        if not self.histogram:
            return None
        return max(sorted(self.histogram), key=lambda r: self.histogram[r])

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "lower_bounds": {str(k): v for k, v in sorted(self.lower_bounds.items())},
            "indistinguishable": self.indistinguishable,
            "budget_exhausted": sum(self.lower_bounds.values()),
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "generator": self.generator,
        }


def mc_min_test_length_distribution(config: McConfig, budget: float | None = 10.0) -> MinLengthHistogram:
    """Histogram of shortest-test lengths over sampled matrices.

    ``budget`` is the per-sample time limit in seconds. A sample that runs
    out of time contributes its proven lower bound to ``lower_bounds``.
    """
    profile = config.profile

    def block(b, size):
        exact, bounds, bad = Counter(), Counter(), 0
        for symbols in sample_block(profile, config.seed, b, size):
            matrix = DiscreteMatrix.from_rows(symbols, profile.sizes)
            try:
                res = min_test_length(matrix, budget)
            except IndistinguishableRows:
                bad += 1
                continue
            (exact if res.exact else bounds)[res.value] += 1
        return exact, bounds, bad

    exact, bounds, bad = Counter(), Counter(), 0
    for e, lb, nbad in _run_blocks(config, block):
        exact.update(e)
        bounds.update(lb)
        bad += nbad
    return MinLengthHistogram(dict(exact), dict(bounds), bad, config.trials, config.seed)
