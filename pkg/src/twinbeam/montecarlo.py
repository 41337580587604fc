"""Seeded shot-by-shot sampling of the twin-beam detection model.

Each shot draws a photon number from the multimode thermal law as a
Gamma-Poisson mixture (valid for non-integer mode counts) and thins it
independently in the two arms.

Shots are generated in fixed-size blocks. Block ``b`` uses a generator
seeded from ``(master_seed, b)`` only, so the output depends on the seed,
the parameters and the shot count, never on how many workers ran.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from twinbeam.errors import DomainError
from twinbeam.theory import TwbParams

BLOCK_SHOTS = 1 << 16


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    worker_count: int = 1

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        if int(self.worker_count) < 1:
            raise DomainError("worker_count must be >= 1")


@dataclass(frozen=True, eq=False)
class PulseRecordSet:
    """Detected pairs ``(m1, m2)`` per shot, in shot order.

    ``shot`` must run 0, 1, 2, ... (strictly increasing from zero).
    ``provenance`` records the seed and parameters or the source file.
    """

    shot: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        arrays = []
        for name in ("shot", "m1", "m2"):
            a = np.asarray(getattr(self, name))
            if a.ndim != 1:
                raise DomainError(f"{name} must be 1-d")
            if a.size and not np.issubdtype(a.dtype, np.integer):
                if not np.all(a == np.floor(a)):
                    raise DomainError(f"{name} must hold integers")
            a = a.astype(np.int64, copy=True)
            a.setflags(write=False)
            arrays.append(a)
        shot, m1, m2 = arrays
        if not (shot.size == m1.size == m2.size):
            raise DomainError("shot, m1 and m2 must have equal length")
        if shot.size and (shot[0] != 0 or np.any(np.diff(shot) <= 0)):
            raise DomainError("shot indices must start at 0 and increase strictly")
        if m1.size and (m1.min() < 0 or m2.min() < 0):
            raise DomainError("detected counts must be non-negative")
        object.__setattr__(self, "shot", shot)
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)

    def __len__(self) -> int:
        return self.shot.size

    @classmethod
    def from_counts(cls, m1, m2, provenance: str = "") -> "PulseRecordSet":
        m1 = np.asarray(m1)
        return cls(np.arange(m1.size), m1, m2, provenance)

    def __eq__(self, other):
        if not isinstance(other, PulseRecordSet):
            return NotImplemented
        return (np.array_equal(self.shot, other.shot)
                and np.array_equal(self.m1, other.m1)
                and np.array_equal(self.m2, other.m2))


def block_generator(master_seed: int, block_index: int) -> np.random.Generator:
    """Independent generator for one shot block, keyed by ``(seed, block)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(block_index),))
    return np.random.Generator(np.random.PCG64(seq))


def _photon_numbers(params: TwbParams, size, rng: np.random.Generator):
    if params.N == 0:
        return np.zeros(size, dtype=np.int64)
    intensity = rng.gamma(params.mu, params.N / params.mu, size=size)
    return rng.poisson(intensity)


def _detect(params: TwbParams, n, rng: np.random.Generator):
    m1 = rng.binomial(n, params.eta1)
    m2 = rng.binomial(n, params.eta2)
    return m1, m2


def sample_shot(params: TwbParams, rng: np.random.Generator) -> tuple[int, int]:
    """One laser shot: detected counts in the signal and idler arms."""
    n = _photon_numbers(params, None, rng)
    m1, m2 = _detect(params, n, rng)
    return int(m1), int(m2)


def _sample_block(params: TwbParams, master_seed: int, block: int, size: int):
    rng = block_generator(master_seed, block)
    n = _photon_numbers(params, size, rng)
    return _detect(params, n, rng)


def sample_run(params: TwbParams, shots: int, seed: SeedSpec | int) -> PulseRecordSet:
    """Simulate ``shots`` consecutive shots.

    The result is identical for any ``seed.worker_count``.
    """
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots!r}")
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed))
    n_blocks = -(-shots // BLOCK_SHOTS)
    sizes = [min(BLOCK_SHOTS, shots - b * BLOCK_SHOTS) for b in range(n_blocks)]

    def run(block):
        return _sample_block(params, seed.master_seed, block, sizes[block])

    workers = min(seed.worker_count, n_blocks)
    if workers == 1:
        parts = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_blocks)))

    m1 = np.concatenate([p[0] for p in parts])
    m2 = np.concatenate([p[1] for p in parts])
    provenance = (f"seed={seed.master_seed} N={params.N!r} mu={params.mu!r} "
                  f"eta1={params.eta1!r} eta2={params.eta2!r} shots={shots}")
    return PulseRecordSet(np.arange(shots), m1, m2, provenance)
