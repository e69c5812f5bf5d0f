"""Rayleigh block-fading MIMO channel with AWGN.

A frame of F super-symbols is cut into L equal blocks of consecutive
channel uses; every (tx, rx) antenna pair keeps one fading coefficient per
block.  With ``interleaved=True`` the blocks are instead interleaved at the
symbol level (symbol t sees block ``t mod L``), the usual way to expose a
convolutional code to all L fades.  The receiver is assumed to know the
coefficients exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .puncturing import SuperSymbolFrame


@dataclass(frozen=True)
class ChannelConfig:
    n_tx: int
    n_rx: int = 1
    n_blocks: int = 1
    es_per_antenna: float = 1.0
    n0: float = 1.0
    interleaved: bool = False

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be positive")
        if self.n_blocks < 1:
            raise ValueError("need at least one fading block")
        if not self.es_per_antenna > 0:
            raise ValueError("es_per_antenna must be positive")
        if self.n0 < 0:
            raise ValueError("n0 must be non-negative")

    def block_length(self, frame_len: int) -> int:
        if frame_len % self.n_blocks:
            raise ValueError(
                f"frame of {frame_len} super-symbols cannot be split into {self.n_blocks} blocks"
            )
        return frame_len // self.n_blocks

    def block_index(self, frame_len: int) -> np.ndarray:
        return block_index(frame_len, self.n_blocks, self.interleaved)


def block_index(frame_len: int, n_blocks: int, interleaved: bool = False) -> np.ndarray:
    """Fading block of every channel use."""
    if frame_len % n_blocks:
        raise ValueError(f"frame of {frame_len} super-symbols cannot be split into {n_blocks} blocks")
    t = np.arange(frame_len)
    return t % n_blocks if interleaved else t // (frame_len // n_blocks)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """``alpha[l, i, s]``: coefficient from tx antenna i to rx antenna s in block l."""

    alpha: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.alpha.shape[0]

    def per_symbol(self, frame_len: int, interleaved: bool = False) -> np.ndarray:
        """(F, N, M) coefficients seen by each channel use."""
        return self.alpha[block_index(frame_len, self.n_blocks, interleaved)]


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    r: np.ndarray  # (F, M) complex
    realization: ChannelRealization
    es: float
    interleaved: bool = False

    @property
    def length(self) -> int:
        return self.r.shape[0]

    def alpha_per_symbol(self) -> np.ndarray:
        return self.realization.per_symbol(self.length, self.interleaved)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_realization(cfg: ChannelConfig, rng: np.random.Generator) -> ChannelRealization:
    return ChannelRealization(complex_normal(rng, (cfg.n_blocks, cfg.n_tx, cfg.n_rx)))


def transmit(frame: SuperSymbolFrame | np.ndarray, real: ChannelRealization, cfg: ChannelConfig,
             rng: np.random.Generator | None) -> ReceivedFrame:
    """``r[t, s] = sum_i alpha[block(t), i, s] * c[t, i] * sqrt(Es) + noise``.

    Noise variance is ``cfg.n0`` (``n0/2`` per real dimension); pass
    ``rng=None`` or ``n0=0`` for a noiseless channel.
    """
    c = frame.symbols if isinstance(frame, SuperSymbolFrame) else np.asarray(frame)
    if c.ndim != 2 or c.shape[1] != cfg.n_tx:
        raise ValueError(f"expected (F, {cfg.n_tx}) super-symbols, got {c.shape}")
    if real.alpha.shape != (cfg.n_blocks, cfg.n_tx, cfg.n_rx):
        raise ValueError("realization does not match the channel configuration")
    alpha = real.per_symbol(c.shape[0], cfg.interleaved)
    r = np.einsum("tis,ti->ts", alpha, c) * np.sqrt(cfg.es_per_antenna)
    if rng is not None and cfg.n0 > 0:
        r = r + complex_normal(rng, r.shape) * np.sqrt(cfg.n0)
    return ReceivedFrame(r, real, cfg.es_per_antenna, cfg.interleaved)


def eb_n0_to_es(eb_n0_db: float, rate: Fraction | float, n_tx: int) -> tuple[float, float]:
    """Per-antenna symbol energy and noise density for a target Eb/N0.

    The N antennas share a total energy of 1 per channel use
    (``Es = 1/N``), and ``N0 = 1 / (R * Eb/N0)``, i.e. ``Eb/N0 = N*Es / (R*N0)``.
    """
    rate = float(rate)
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if n_tx < 1:
        raise ValueError("n_tx must be positive")
    gamma = 10.0 ** (eb_n0_db / 10.0)
    return 1.0 / n_tx, 1.0 / (rate * gamma)


def transmit_batch(symbols: np.ndarray, alpha: np.ndarray, es: float, n0: float,
                   noise: np.ndarray | None = None,
                   interleaved: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`transmit` for the simulator.

    symbols (B, F, N); alpha (B, L, N, M); noise (B, F, M) unit-variance
    complex samples or None.  Returns (r (B, F, M), per-symbol alpha (B, F, N, M)).
    """
    frame_len = symbols.shape[1]
    alpha_sym = alpha[:, block_index(frame_len, alpha.shape[1], interleaved)]
    r = np.einsum("btis,bti->bts", alpha_sym, symbols) * np.sqrt(es)
    if noise is not None and n0 > 0:
        r = r + noise * np.sqrt(n0)
    return r, alpha_sym
