"""Seeded excitation streams: Gaussian current targets and PSK/QAM symbols.

Reproducibility rule: every random draw comes from a substream keyed by
``(seed, stream, chunk)``. Work is cut into fixed-size chunks whose boundaries
depend only on the requested sample count, so results do not change with the
number of workers that process the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

# Complex entries generated per chunk; bounds memory at ~64 MB of complex128.
CHUNK_ENTRIES = 1 << 22

# Stream indices. Distinct purposes never share a substream.
STREAM_CURRENTS = 0
STREAM_SYMBOLS = 1
STREAM_SUM_POWER = 2
STREAM_DIRECTION = 3


def substream(seed: int, stream: int = 0, chunk: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, stream, chunk)``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_bounds(count: int, rows_per_chunk: int) -> list[tuple[int, int]]:
    return [(start, min(start + rows_per_chunk, count)) for start in range(0, count, rows_per_chunk)]


def map_chunks(fn, chunks, workers: int = 1):
    """Apply ``fn(chunk_index, bounds)`` to every chunk, results in chunk order."""
    jobs = list(enumerate(chunks))
    if workers <= 1 or len(jobs) <= 1:
        return [fn(k, b) for k, b in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


@dataclass(frozen=True)
class Gaussian:
    n: int
    total_avg_power: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.total_avg_power > 0:
            raise ValueError("total_avg_power must be > 0")


@dataclass(frozen=True)
class Constellation:
    """Per-element i.i.d. symbol stream. ``scheme`` is ``"psk"`` or ``"qam"``."""

    scheme: str
    order: int
    n: int
    length: int
    total_avg_power: float = 1.0

    def __post_init__(self):
        if self.scheme not in ("psk", "qam"):
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        m = self.order
        if m < 2 or m & (m - 1):
            raise ValueError(f"unsupported order {m}: must be a power of two >= 2")
        if self.scheme == "qam" and (m.bit_length() - 1) % 2:
            raise ValueError(f"unsupported order {m}: square QAM needs 4, 16, 64, ...")
        if self.n < 1 or self.length < 1:
            raise ValueError("n and length must be >= 1")
        if not self.total_avg_power > 0:
            raise ValueError("total_avg_power must be > 0")


SignalSpec = Gaussian | Constellation


def _rows_per_chunk(n: int) -> int:
    return max(1, CHUNK_ENTRIES // n)


def gaussian_chunk(spec: Gaussian, seed: int, chunk: int, rows: int, stream: int = STREAM_CURRENTS) -> np.ndarray:
    rng = substream(seed, stream, chunk)
    sigma = np.sqrt(spec.total_avg_power / spec.n / 2.0)
    x = rng.standard_normal((rows, 2 * spec.n))
    return sigma * (x[:, : spec.n] + 1j * x[:, spec.n :])


def draw_gaussian_currents(spec: Gaussian, seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. circularly-symmetric complex Gaussian current vectors.

    Each entry has variance ``total_avg_power / n``, so the expected sum power
    of a row is ``total_avg_power``. Returns a ``(count, n)`` complex array.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    bounds = chunk_bounds(count, _rows_per_chunk(spec.n))
    return np.concatenate([gaussian_chunk(spec, seed, k, hi - lo) for k, (lo, hi) in enumerate(bounds)])


def psk_alphabet(order: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(order) / order)


def qam_alphabet(order: int) -> np.ndarray:
    """Square QAM points on the odd-integer grid, scaled to unit average power."""
    side = int(round(np.sqrt(order)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(2.0 * (order - 1) / 3.0)


def constellation_targets(spec: Constellation, seed: int) -> np.ndarray:
    """Uniform symbol draws scaled so a row has average power ``total_avg_power``.

    Returns a ``(length, n)`` complex array.
    """
    alphabet = psk_alphabet(spec.order) if spec.scheme == "psk" else qam_alphabet(spec.order)
    rng = substream(seed, STREAM_SYMBOLS, 0)
    idx = rng.integers(0, spec.order, size=(spec.length, spec.n))
    return alphabet[idx] * np.sqrt(spec.total_avg_power / spec.n)
