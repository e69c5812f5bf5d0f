"""Monte Carlo engine.

Every frame owns a random stream keyed by ``(seed, point_index,
frame_index)``, drawn in a fixed order: info bits, fading, noise.  Batches
therefore give the same counts whichever worker runs them, and two
configurations simulated with the same seed see the same information bits,
fading and (up to their frame length) the same noise: common random
numbers for paired comparisons.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .. import __version__
from ..channel import complex_normal, eb_n0_to_es, transmit_batch
from ..convcode import ConvCode
from ..decoder import FrameDecoder, MetricConfig, distance_table
from ..puncturing import PuncturingMatrix
from .config import SimScenario

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Link:
    """Transmitter + channel geometry shared by one or more decoders."""

    code: ConvCode
    matrix: PuncturingMatrix
    n_rx: int
    l_blocks: int
    n_info: int
    terminate: bool = True
    interleaved: bool = False

    def __post_init__(self):
        if self.l_blocks < 1 or self.n_rx < 1:
            raise ValueError("l_blocks and n_rx must be positive")
        n_sym = self.base_decoder.n_symbols
        if n_sym % self.l_blocks:
            raise ValueError(
                f"{self.n_info} info bits give {n_sym} super-symbols, "
                f"not divisible into L={self.l_blocks} blocks; change frame_info_bits"
            )

    @classmethod
    def from_scenario(cls, sc: SimScenario) -> "Link":
        return cls(sc.conv_code, sc.matrix, sc.n_rx, sc.l_blocks, sc.frame_info_bits,
                   sc.terminate, sc.block_interleave)

    @property
    def n_tx(self) -> int:
        return self.code.n_outputs

    @property
    def rate(self) -> Fraction:
        return self.matrix.rate

    @property
    def base_decoder(self) -> FrameDecoder:
        try:
            return self.__dict__["_dec"]
        except KeyError:
            dec = FrameDecoder(self.code, self.matrix, self.n_info, MetricConfig(), self.terminate)
            try:
                dec.layout
            except ValueError as exc:
                raise ValueError(f"infeasible frame: {exc}") from None
            self.__dict__["_dec"] = dec
            return dec

    def decoder(self, metric: MetricConfig) -> FrameDecoder:
        return self.base_decoder.with_metric(metric)

    @property
    def n_symbols(self) -> int:
        return self.base_decoder.n_symbols


def frame_rng(seed: int, point: int, frame: int) -> np.random.Generator:
    return np.random.default_rng([seed, point, frame])


def draw_frames(link: Link, seed: int, point: int, start: int, count: int):
    """Info bits (B, k), fading (B, L, N, M) and unit noise (B, F, M)."""
    k, n_sym = link.n_info, link.n_symbols
    info = np.empty((count, k), dtype=np.uint8)
    fading = np.empty((count, link.l_blocks, link.n_tx, link.n_rx), dtype=complex)
    noise = np.empty((count, n_sym, link.n_rx), dtype=complex)
    for j in range(count):
        rng = frame_rng(seed, point, start + j)
        info[j] = rng.integers(0, 2, k, dtype=np.uint8)
        fading[j] = complex_normal(rng, fading.shape[1:])
        noise[j] = complex_normal(rng, noise.shape[1:])
    return info, fading, noise


def simulate_frames(link: Link, decoders: Sequence[FrameDecoder], eb_n0_db: float, seed: int,
                    point: int, start: int, count: int, noiseless: bool = False) -> np.ndarray:
    """Per-decoder, per-frame bit-error counts, shape (len(decoders), count)."""
    es, n0 = eb_n0_to_es(eb_n0_db, link.rate, link.n_tx)
    info, fading, noise = draw_frames(link, seed, point, start, count)
    symbols = link.base_decoder.transmitted_symbols(info)
    r, alpha = transmit_batch(symbols, fading, es, 0.0 if noiseless else n0, noise,
                              link.interleaved)
    dist = distance_table(r, alpha, es)
    errors = np.empty((len(decoders), count), dtype=np.int64)
    for i, dec in enumerate(decoders):
        est = dec.decode_distances(dist)
        errors[i] = np.count_nonzero(est != info, axis=1)
    return errors


def _batch_task(args):
    link, metrics, eb_n0_db, seed, point, start, count, noiseless = args
    decoders = [link.decoder(m) for m in metrics]
    return simulate_frames(link, decoders, eb_n0_db, seed, point, start, count, noiseless)


def run_batches(link: Link, metrics: Sequence[MetricConfig], eb_n0_db: float, seed: int,
                point: int, max_frames: int, batch_size: int, min_frame_errors: int = 0,
                workers: int = 1, noiseless: bool = False,
                pool: ProcessPoolExecutor | None = None) -> tuple[np.ndarray, str]:
    """Simulate batches in order until the stop rule fires.

    The rule (first metric's frame errors >= ``min_frame_errors``) is
    checked after each batch in batch order, so the result does not depend
    on ``workers``.  Returns per-frame error counts (n_metrics, frames) and
    the reason for stopping.
    """
    starts = list(range(0, max_frames, batch_size))
    tasks = [(link, tuple(metrics), eb_n0_db, seed, point, s, min(batch_size, max_frames - s),
              noiseless) for s in starts]
    chunks: list[np.ndarray] = []
    frame_errors = 0
    reason = "max_frames"

    def consume(res) -> bool:
        nonlocal frame_errors
        chunks.append(res)
        frame_errors += int(np.count_nonzero(res[0]))
        return min_frame_errors > 0 and frame_errors >= min_frame_errors

    if workers <= 1 and pool is None:
        for t in tasks:
            if consume(_batch_task(t)):
                reason = "min_frame_errors"
                break
    else:
        own = pool is None
        pool = pool or ProcessPoolExecutor(max_workers=workers)
        try:
            window = max(1, workers)
            pending = [pool.submit(_batch_task, t) for t in tasks[:window]]
            nxt = window
            while pending:
                res = pending.pop(0).result()
                if consume(res):
                    reason = "min_frame_errors"
                    for fut in pending:
                        fut.cancel()
                    break
                if nxt < len(tasks):
                    pending.append(pool.submit(_batch_task, tasks[nxt]))
                    nxt += 1
        finally:
            if own:
                pool.shutdown(cancel_futures=True)
    errs = np.concatenate(chunks, axis=1) if chunks else np.zeros((len(metrics), 0), dtype=np.int64)
    return errs, reason


def binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Clopper-Pearson interval."""
    if trials == 0:
        return 0.0, 1.0
    a = 1 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(a / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - a / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass(frozen=True)
class PointResult:
    """Counts at one Eb/N0; the confidence interval is on the BER."""

    config_id: str
    beta: str
    eb_n0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    ci_low: float
    ci_high: float
    stopped_by: str = field(default="", compare=False)

    @classmethod
    def from_errors(cls, config_id: str, beta: str, eb_n0_db: float, errors: np.ndarray,
                    n_info: int, stopped_by: str = "") -> "PointResult":
        frames = int(errors.size)
        bit_errors = int(errors.sum())
        frame_errors = int(np.count_nonzero(errors))
        bits = frames * n_info
        ber = bit_errors / bits if bits else 0.0
        fer = frame_errors / frames if frames else 0.0
        lo, hi = binomial_ci(bit_errors, bits)
        return cls(config_id, beta, float(eb_n0_db), frames, bit_errors, frame_errors, ber, fer,
                   lo, hi, stopped_by)


@dataclass
class SimResult:
    points: list[PointResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def curve(self, config_id: str | None = None, what: str = "fer") -> list[tuple[float, float]]:
        return [(p.eb_n0_db, getattr(p, what)) for p in self.points
                if config_id is None or p.config_id == config_id]

    def extend(self, other: "SimResult") -> None:
        self.points.extend(other.points)
        self.metadata.setdefault("runs", []).append(other.metadata)


def run_scenario(sc: SimScenario, workers: int = 1,
                 pool: ProcessPoolExecutor | None = None) -> SimResult:
    """Simulate every Eb/N0 point of a scenario."""
    t0 = time.perf_counter()
    link = Link.from_scenario(sc)
    metric = sc.metric_config
    link.decoder(metric).check()
    result = SimResult()
    for i, snr in enumerate(sc.eb_n0_db):
        errs, reason = run_batches(link, [metric], snr, sc.seed, i, sc.max_frames, sc.batch_size,
                                   sc.min_frame_errors, workers, sc.noiseless, pool)
        pt = PointResult.from_errors(sc.id, metric.beta_label, snr, errs[0], link.n_info, reason)
        log.info("%s Eb/N0=%.2f dB frames=%d ber=%.3e fer=%.3e (%s)", sc.id, snr, pt.frames,
                 pt.ber, pt.fer, reason)
        result.points.append(pt)
    result.metadata = {
        "config_id": sc.id,
        "scenario": sc.to_dict(),
        "scenario_hash": sc.digest(),
        "seed": sc.seed,
        "rate": str(link.rate),
        "frame_symbols": link.n_symbols,
        "stopped_by": [p.stopped_by for p in result.points],
        "wall_time_s": time.perf_counter() - t0,
        "version": __version__,
    }
    return result


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
