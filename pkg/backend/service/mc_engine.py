# backend/service/mc_engine.py
"""
Deterministic chunked Monte-Carlo estimation.

Samples are split into fixed-size chunks; chunk `i` of stream `stream_id`
draws from Philox seeded by SeedSequence(seed, spawn_key=(stream_id, i)), so
the result depends on (seed, stream_id, n, chunk_size) only and never on the
number of worker processes.
"""

import logging
import math
from dataclasses import asdict, dataclass
from multiprocessing import Pool

import numpy as np

from backend.config import Config
from backend.service.errors import ConfigError, NonFiniteSampleError

logger = logging.getLogger(__name__)

MIN_SAMPLES = 1000
MIN_CHUNK = 1024
TAGS = ("analytic", "numeric-fallback", "monte-carlo")


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_id: int = 0

    def chunk_generator(self, chunk_idx: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, chunk_idx))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width_95: float = 0.0
    n: int = 0
    tag: str = "monte-carlo"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown estimate tag {self.tag!r}")

    @classmethod
    def exact(cls, value: float, tag: str = "analytic") -> "Estimate":
        return cls(mean=float(value), half_width_95=0.0, n=0, tag=tag)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _ChunkStats:
    n: int
    mean: float
    m2: float


def chunk_size_for(samples_per_draw: int = 1, limit: int | None = None) -> int:
    """
    Samples per chunk: capped by Config.CHUNK_SIZE and by a memory budget
    of 2^22 underlying draws, rounded down to a power of two.
    """
    limit = Config.CHUNK_SIZE if limit is None else limit
    size = max(MIN_CHUNK, min(limit, (1 << 22) // max(samples_per_draw, 1)))
    return 1 << (size.bit_length() - 1)


def _chunk_sizes(n: int, chunk_size: int) -> list[int]:
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunk(args) -> _ChunkStats:
    metric, rng_spec, idx, size, params = args
    values = np.asarray(metric(rng_spec.chunk_generator(idx), size), dtype=float)
    if values.shape != (size,):
        raise ValueError(f"metric returned shape {values.shape}, expected ({size},)")
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise NonFiniteSampleError(
            f"{bad} non-finite samples in chunk {idx} of stream {rng_spec.stream_id}", point=params
        )
    mean = math.fsum(values) / size
    return _ChunkStats(n=size, mean=mean, m2=math.fsum((values - mean) ** 2))


def _merge(stats: list[_ChunkStats]) -> _ChunkStats:
    n, mean, m2 = 0, 0.0, 0.0
    for s in stats:
        total = n + s.n
        delta = s.mean - mean
        mean = mean + delta * s.n / total
        m2 = m2 + s.m2 + delta * delta * n * s.n / total
        n = total
    return _ChunkStats(n=n, mean=mean, m2=m2)


def estimate(
    metric,
    n: int,
    rng: RngSpec,
    workers: int | None = None,
    chunk_size: int | None = None,
    params: dict | None = None,
) -> Estimate:
    """
    Sample-mean estimate of `metric(generator, size) -> ndarray` over n draws
    with a 95% CLT half-width. `params` is echoed in NonFiniteSampleError.
    """
    if n < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} Monte-Carlo samples, got {n}", key="mc.samples")
    workers = Config.WORKERS if workers is None else workers
    chunk_size = chunk_size_for() if chunk_size is None else chunk_size
    jobs = [(metric, rng, idx, size, params or {}) for idx, size in enumerate(_chunk_sizes(n, chunk_size))]

    if workers > 1 and len(jobs) > 1:
        with Pool(processes=min(workers, len(jobs))) as pool:
            stats = pool.map(_run_chunk, jobs)
    else:
        stats = [_run_chunk(job) for job in jobs]

    merged = _merge(stats)
    variance = merged.m2 / (merged.n - 1) if merged.n > 1 else 0.0
    half_width = 1.96 * math.sqrt(max(variance, 0.0) / merged.n)
    logger.debug(f"[mc] stream {rng.stream_id}: {len(jobs)} chunks, mean {merged.mean:.6g} +/- {half_width:.3g}")
    return Estimate(mean=merged.mean, half_width_95=half_width, n=merged.n, tag="monte-carlo")
