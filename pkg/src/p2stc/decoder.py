"""Viterbi decoding of punctured pragmatic space-time codes.

A super-symbol whose antennas carry bits of two trellis transitions cannot
be scored by either transition alone.  Its squared-distance metric is split
into a *left* term, charged to the earlier transition with the later bits
minimized out, and a *right* term charged to the later transition.  The
modes differ in how the right term learns the earlier bits:

``SPLIT_MIN``  minimize over them as well;
``TYPE1``      read them off the survivor entering the departing state,
               weights ``1-beta`` (left) / ``beta`` (right) per symbol;
``TYPE2``      one survivor-assisted right term per chain of spanning
               symbols, left terms weighted ``omega_a``, the final right
               term ``omega_b``;
``EXACT``      plain metric, only valid when nothing spans;
``ML``         exact maximum likelihood on the joined-transition trellis.

:func:`ml_joint_decode` is the exact maximum-likelihood reference.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from . import _kernels
from .channel import ReceivedFrame
from .convcode import ConvCode, Trellis, encode_batch
from .puncturing import (FrameLayout, PuncturingMatrix, apply_puncture, frame_layout,
                         spanning_events)


class MetricMode(str, enum.Enum):
    EXACT = "exact"
    SPLIT_MIN = "split_min"
    TYPE1 = "type1"
    TYPE2 = "type2"
    ML = "ml"


class BetaRule(str, enum.Enum):
    FIXED = "fixed"
    RULE_OF_THUMB = "rule"


class Role(enum.IntEnum):
    FULL = _kernels.FULL
    LEFT = _kernels.LEFT
    RIGHT = _kernels.RIGHT


@dataclass(frozen=True)
class MetricConfig:
    mode: MetricMode = MetricMode.TYPE1
    beta: float = 0.5
    beta_rule: BetaRule = BetaRule.RULE_OF_THUMB

    def __post_init__(self):
        object.__setattr__(self, "mode", MetricMode(self.mode))
        object.__setattr__(self, "beta_rule", BetaRule(self.beta_rule))
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

    @classmethod
    def parse(cls, metric: str = "type1", beta: float | str = "rule") -> "MetricConfig":
        if isinstance(beta, str):
            if beta != "rule":
                return cls(MetricMode(metric), float(beta), BetaRule.FIXED)
            return cls(MetricMode(metric), 0.5, BetaRule.RULE_OF_THUMB)
        return cls(MetricMode(metric), float(beta), BetaRule.FIXED)

    def with_beta(self, beta: float) -> "MetricConfig":
        return MetricConfig(self.mode, beta, BetaRule.FIXED)

    @property
    def beta_label(self) -> str:
        return "rule" if self.beta_rule is BetaRule.RULE_OF_THUMB else f"{self.beta:g}"


# -- single-symbol metric forms ---------------------------------------------

def _distance(r, bits, alpha, es) -> float:
    r = np.asarray(r, dtype=complex).reshape(-1)
    alpha = np.asarray(alpha, dtype=complex).reshape(len(bits), -1)
    c = 2 * np.asarray(bits, dtype=float) - 1
    pred = (c @ alpha) * np.sqrt(es)
    return float(np.sum(np.abs(r - pred) ** 2))


def exact_increment(r, candidate_bits, alpha, es) -> float:
    """``sum_s |r_s - sum_i alpha[i, s] (2 b_i - 1) sqrt(Es)|^2``."""
    return _distance(r, candidate_bits, alpha, es)


def left_increment(r, known_left_bits, unknown_right_positions, alpha, es, weight) -> float:
    """Weighted distance minimized over the bits at ``unknown_right_positions``.

    ``known_left_bits`` has one entry per antenna; entries at unknown
    positions are ignored.
    """
    bits = np.array(known_left_bits, dtype=int)
    unknown = list(unknown_right_positions)
    best = np.inf
    for fill in product((0, 1), repeat=len(unknown)):
        bits[unknown] = fill
        best = min(best, _distance(r, bits, alpha, es))
    return weight * best


def right_increment(r, survivor_left_bits, candidate_right_bits, alpha, es, weight) -> float:
    """Weighted distance with the left positions pinned to the survivor's bits.

    Both arguments are per-antenna sequences holding ``None`` on the other
    side's positions.
    """
    if any(b is None for b in survivor_left_bits) and all(
        b is None for b in candidate_right_bits
    ):
        raise ValueError("no bits supplied for the super-symbol")
    bits = []
    for left, right in zip(survivor_left_bits, candidate_right_bits):
        if (left is None) == (right is None):
            raise ValueError("each antenna needs exactly one of survivor/candidate bits "
                             "(survivor unresolved?)")
        bits.append(left if right is None else right)
    return weight * _distance(r, bits, alpha, es)


def rule_of_thumb_beta(n_left: int, n_right: int, n_total: int | None = None) -> float:
    """``beta = n_R / n_tot`` (so ``1 - beta = n_L / n_tot``)."""
    n_total = n_left + n_right if n_total is None else n_total
    if n_total <= 0:
        raise ValueError("n_tot must be positive")
    return n_right / n_total


def compute_type2_weights(beta: float, delta: int) -> tuple[float, float]:
    """Left/right weights for a chain of ``delta`` spanning symbols.

    ``delta * omega_a + omega_b == delta`` by construction.
    """
    if delta < 1:
        raise ValueError("delta must be at least 1")
    den = delta + beta * (1 - delta)
    if den <= 0:
        raise ValueError("vanishing denominator in the Type-2 weights")
    return (1 - beta) * delta / den, beta * delta / den


# -- schedule ---------------------------------------------------------------

@dataclass(frozen=True)
class Contribution:
    symbol: int
    role: Role
    weight: float


@dataclass(frozen=True, eq=False)
class MetricSchedule:
    """Per-transition list of super-symbol contributions (CSR arrays)."""

    layout: FrameLayout
    config: MetricConfig
    offsets: np.ndarray
    symbols: np.ndarray
    roles: np.ndarray
    weights: np.ndarray
    events: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def n_transitions(self) -> int:
        return self.offsets.size - 1

    def entries(self, t: int) -> list[Contribution]:
        sl = slice(self.offsets[t], self.offsets[t + 1])
        return [Contribution(int(u), Role(int(r)), float(w))
                for u, r, w in zip(self.symbols[sl], self.roles[sl], self.weights[sl])]

    def weight_by_symbol(self) -> dict[int, dict[Role, float]]:
        out: dict[int, dict[Role, float]] = {}
        for u, r, w in zip(self.symbols.tolist(), self.roles.tolist(), self.weights.tolist()):
            out.setdefault(u, {}).setdefault(Role(r), 0.0)
            out[u][Role(r)] += w
        return out

    def check_causality(self) -> None:
        for t in range(self.n_transitions):
            for c in self.entries(t):
                if c.role is Role.RIGHT and not self.layout.left[c.symbol] < t:
                    raise AssertionError(f"right term of symbol {c.symbol} at transition {t} "
                                         "precedes its left transition")


def build_schedule(layout: FrameLayout, cfg: MetricConfig) -> MetricSchedule:
    """Assign every super-symbol's metric to the transitions it informs."""
    counts = np.bincount(layout.trans.ravel(), minlength=layout.n_transitions)
    events = spanning_events(layout)
    if cfg.mode is MetricMode.ML:
        raise ValueError("the ML reference decodes on the segment trellis, not a metric schedule")
    if cfg.mode is MetricMode.EXACT and events:
        raise ValueError("EXACT metric needs a puncturing pattern with no spanning symbols")

    def beta_for(u: int) -> float:
        if cfg.beta_rule is BetaRule.FIXED:
            return cfg.beta
        nl, nr = int(counts[layout.left[u]]), int(counts[layout.right[u]])
        return rule_of_thumb_beta(nl, nr)

    items: list[tuple[int, int, int, float]] = []  # (transition, symbol, role, weight)
    for u in range(layout.n_symbols):
        if not layout.spanning[u]:
            items.append((int(layout.left[u]), u, Role.FULL, 1.0))
    if cfg.mode in (MetricMode.SPLIT_MIN, MetricMode.TYPE1):
        for ev in events:
            for u in ev:
                beta = beta_for(u)
                items.append((int(layout.left[u]), u, Role.LEFT, 1.0 - beta))
                items.append((int(layout.right[u]), u, Role.RIGHT, beta))
    elif cfg.mode is MetricMode.TYPE2:
        for ev in events:
            # rule-of-thumb beta of the chain is taken from its last symbol
            omega_a, omega_b = compute_type2_weights(beta_for(ev[-1]), len(ev))
            for u in ev:
                items.append((int(layout.left[u]), u, Role.LEFT, omega_a))
            items.append((int(layout.right[ev[-1]]), ev[-1], Role.RIGHT, omega_b))
    items.sort(key=lambda x: (x[0], x[1], x[2]))
    t_arr = np.array([x[0] for x in items], dtype=np.int64)
    offsets = np.searchsorted(t_arr, np.arange(layout.n_transitions + 1)).astype(np.int64)
    sched = MetricSchedule(
        layout, cfg, offsets,
        np.array([x[1] for x in items], dtype=np.int64),
        np.array([int(x[2]) for x in items], dtype=np.int64),
        np.array([x[3] for x in items], dtype=np.float64),
        tuple(tuple(e) for e in events),
    )
    sched.check_causality()
    return sched


# -- distance tables --------------------------------------------------------

def candidate_symbols(n_antennas: int) -> np.ndarray:
    """(2^N, N) BPSK vectors; bit j of the row index drives antenna j."""
    a = np.arange(1 << n_antennas)
    return (2 * ((a[:, None] >> np.arange(n_antennas)) & 1) - 1).astype(float)


def distance_table(r: np.ndarray, alpha: np.ndarray, es: float) -> np.ndarray:
    """Squared distance of each received super-symbol to every candidate.

    r : (..., F, M) complex; alpha : (..., F, N, M) per-symbol coefficients.
    Returns (..., F, 2^N).
    """
    cand = candidate_symbols(alpha.shape[-2])
    pred = np.einsum("ai,...tis->...tas", cand, alpha) * np.sqrt(es)
    diff = r[..., None, :] - pred
    return np.einsum("...s,...s->...", diff.real, diff.real) + np.einsum(
        "...s,...s->...", diff.imag, diff.imag)


# -- decoders ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrameDecoder:
    """Decoder for a fixed (code, puncturing, frame length, metric) setup.

    Immutable; share across threads.  ``decode_distances`` is the batched
    hot path used by the simulator.
    """

    code: ConvCode
    matrix: PuncturingMatrix
    n_info: int
    metric: MetricConfig = MetricConfig()
    terminate: bool = True

    @property
    def trellis(self) -> Trellis:
        return self.code.trellis

    @property
    def n_transitions(self) -> int:
        return self.n_info + (self.code.memory if self.terminate else 0)

    @cached_property
    def layout(self) -> FrameLayout:
        if self.matrix.n_rows != self.code.n_outputs:
            raise ValueError("puncturing matrix rows must match the code outputs")
        return frame_layout(self.matrix, self.n_transitions)

    @cached_property
    def schedule(self) -> MetricSchedule:
        return build_schedule(self.layout, self.metric)

    @property
    def n_symbols(self) -> int:
        return self.layout.n_symbols

    def with_metric(self, metric: MetricConfig) -> "FrameDecoder":
        dec = FrameDecoder(self.code, self.matrix, self.n_info, metric, self.terminate)
        dec.__dict__["layout"] = self.layout
        return dec

    @cached_property
    def _kernel_tables(self) -> dict[str, np.ndarray]:
        # label -> candidate-index bits, per contribution
        lay = self.layout
        s = self.schedule
        n_lab = 1 << self.code.n_outputs
        labs = np.arange(n_lab)
        c_tl = lay.left[s.symbols].astype(np.int64)
        c_t = np.repeat(np.arange(s.n_transitions), np.diff(s.offsets))
        c_map = np.zeros((s.symbols.size, n_lab), dtype=np.int64)
        c_lmap = np.zeros_like(c_map)
        for c, (u, t, tl) in enumerate(zip(s.symbols, c_t, c_tl)):
            for j in range(lay.n_antennas):
                bit = ((labs >> lay.row[u, j]) & 1) << j
                if lay.trans[u, j] == t:
                    c_map[c] |= bit
                if lay.trans[u, j] == tl:
                    c_lmap[c] |= bit
        lmask = np.array([sum(1 << j for j in range(lay.n_antennas) if lay.trans[u, j] == lay.left[u])
                          for u in range(lay.n_symbols)], dtype=np.int64)
        return {"c_tl": c_tl, "c_map": c_map, "c_lmap": c_lmap, "lmask": lmask}

    def decode_distances(self, dist: np.ndarray, survivor: bool | None = None,
                         return_metric: bool = False):
        """Decode a batch from precomputed (B, F, 2^N) distance tables."""
        if self.metric.mode is MetricMode.ML:
            return self.ml_decode_distances(dist, return_metric=return_metric)
        dist = np.ascontiguousarray(dist, dtype=np.float64)
        if dist.ndim == 2:
            dist = dist[None]
        if dist.shape[1] != self.n_symbols:
            raise ValueError(f"expected {self.n_symbols} super-symbols, got {dist.shape[1]}")
        if survivor is None:
            survivor = self.metric.mode is not MetricMode.SPLIT_MIN
        s = self.schedule
        tr = self.trellis
        k = self._kernel_tables
        bits = np.zeros((dist.shape[0], self.n_transitions), dtype=np.int64)
        metric = np.zeros(dist.shape[0])
        _kernels.viterbi_batch(dist, k["lmask"], s.symbols, k["c_tl"], k["c_map"], k["c_lmap"],
                               s.roles, s.weights, s.offsets, bool(survivor), tr.label,
                               tr.prev_state, tr.prev_input, self.terminate, bits, metric)
        if not np.all(np.isfinite(metric)):
            raise FloatingPointError("path metric overflow")
        out = bits[:, : self.n_info].astype(np.uint8)
        return (out, metric) if return_metric else out

    def decode(self, received: ReceivedFrame, return_metric: bool = False):
        dist = distance_table(received.r, received.alpha_per_symbol(), received.es)
        res = self.decode_distances(dist, return_metric=return_metric)
        if return_metric:
            return res[0][0], float(res[1][0])
        return res[0]

    # -- exact ML reference ---------------------------------------------------

    @cached_property
    def segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Transition runs that no super-symbol straddles."""
        lay = self.layout
        cut_ok = np.ones(self.n_transitions + 1, dtype=bool)  # cut before transition t
        for u in range(lay.n_symbols):
            cut_ok[lay.left[u] + 1: lay.right[u] + 1] = False
        starts = np.nonzero(cut_ok[:-1])[0]
        lens = np.diff(np.append(starts, self.n_transitions))
        seg_of_t = np.repeat(np.arange(starts.size), lens)
        seg_of_u = seg_of_t[lay.left]
        order = np.argsort(seg_of_u, kind="stable")
        off = np.searchsorted(seg_of_u[order], np.arange(starts.size + 1))
        return starts.astype(np.int64), lens.astype(np.int64), off.astype(np.int64), order.astype(np.int64)

    def check(self) -> None:
        """Raise early if this metric cannot decode the frame layout."""
        if self.metric.mode is MetricMode.ML:
            self._check_fanout(1 << 8)
        else:
            self.schedule

    def _check_fanout(self, max_fanout: int) -> None:
        lens = self.segments[1]
        if (1 << int(lens.max())) > max_fanout:
            raise ValueError(f"segment fan-out 2^{int(lens.max())} exceeds {max_fanout}")

    def ml_decode_distances(self, dist: np.ndarray, max_fanout: int = 1 << 8,
                            return_metric: bool = False):
        starts, lens, off, syms = self.segments
        self._check_fanout(max_fanout)
        dist = np.ascontiguousarray(dist, dtype=np.float64)
        if dist.ndim == 2:
            dist = dist[None]
        tr = self.trellis
        bits = np.zeros((dist.shape[0], self.n_transitions), dtype=np.int64)
        metric = np.zeros(dist.shape[0])
        _kernels.segment_viterbi_batch(dist, self.layout.trans, self.layout.row, starts, lens,
                                       off, syms, tr.next_state, tr.label, self.terminate,
                                       bits, metric)
        out = bits[:, : self.n_info].astype(np.uint8)
        return (out, metric) if return_metric else out

    def transmitted_symbols(self, info_bits: np.ndarray) -> np.ndarray:
        """(B, k) info bits -> (B, F, N) BPSK super-symbols."""
        coded = encode_batch(self.code, info_bits, self.terminate)
        surv = apply_puncture(coded, self.matrix)
        return (2.0 * surv.reshape(surv.shape[0], -1, self.code.n_outputs) - 1.0)


def viterbi_decode(received: ReceivedFrame, decoder: FrameDecoder) -> np.ndarray:
    """Decode one frame with the decoder's metric schedule."""
    return decoder.decode(received)


def ml_joint_decode(received: ReceivedFrame, decoder: FrameDecoder, max_info_bits: int = 20,
                    method: str = "auto") -> np.ndarray:
    """Exact ML decision for one frame.

    ``method="segment"`` runs Viterbi on the joined-transition trellis;
    ``"exhaustive"`` enumerates every input; ``"auto"`` prefers the segment
    trellis and falls back to enumeration for small frames.
    """
    if method in ("auto", "segment"):
        try:
            dist = distance_table(received.r, received.alpha_per_symbol(), received.es)
            return decoder.ml_decode_distances(dist)[0]
        except ValueError:
            if method == "segment":
                raise
    if decoder.n_info > max_info_bits:
        raise ValueError(f"{decoder.n_info} info bits: too large for exhaustive ML "
                         f"(max {max_info_bits})")
    return exhaustive_ml_decode(received.r, received.alpha_per_symbol(), received.es, decoder)


def all_codewords(decoder: FrameDecoder) -> tuple[np.ndarray, np.ndarray]:
    """Every (info word, super-symbol sequence) pair of a short frame."""
    k = decoder.n_info
    words = ((np.arange(1 << k)[:, None] >> np.arange(k)[::-1]) & 1).astype(np.uint8)
    return words, decoder.transmitted_symbols(words)


def exhaustive_ml_decode(r: np.ndarray, alpha: np.ndarray, es: float, decoder: FrameDecoder,
                         codebook: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Brute-force minimum of the full-frame squared distance over all inputs.

    r : (F, M) or (B, F, M); alpha : matching (..., F, N, M).
    """
    words, cw = codebook if codebook is not None else all_codewords(decoder)
    single = r.ndim == 2
    if single:
        r, alpha = r[None], alpha[None]
    out = np.empty((r.shape[0], decoder.n_info), dtype=np.uint8)
    for f in range(r.shape[0]):
        pred = np.einsum("cti,tis->cts", cw, alpha[f]) * np.sqrt(es)
        cost = np.sum(np.abs(r[f][None] - pred) ** 2, axis=(1, 2))
        out[f] = words[int(np.argmin(cost))]
    return out[0] if single else out


def decode_frame(received: ReceivedFrame, code: ConvCode, matrix: PuncturingMatrix,
                 n_info: int, metric: MetricConfig | str = "type1",
                 beta: float | str = "rule") -> np.ndarray:
    """One-shot convenience wrapper around :class:`FrameDecoder`."""
    if isinstance(metric, str):
        metric = MetricConfig.parse(metric, beta)
    return FrameDecoder(code, matrix, n_info, metric).decode(received)
