"""Feed-forward rate-1/N convolutional mother codes.

Generators are given in octal with the classical convention: the most
significant tap multiplies the current input bit, the least significant
tap the oldest register bit.  (5,7), (133,171) and (133,145,175) all use
this convention.

The encoder state packs the last K-1 input bits with the most recent bit
in the most significant position, so ``next = (b << (K-2)) | (s >> 1)``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

MAX_CONSTRAINT_LENGTH = 16


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def parse_generators(text: str | Sequence[str] | Sequence[int]) -> tuple[int, ...]:
    """Parse ``"133,171"`` (or a list of octal strings / ints) into ints."""
    if isinstance(text, str):
        parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    else:
        parts = list(text)
    gens = []
    for p in parts:
        if isinstance(p, (int, np.integer)):
            gens.append(int(p))
        else:
            p = p.strip()
            if p.lower().startswith("0o"):
                p = p[2:]
            try:
                gens.append(int(p, 8))
            except ValueError:
                raise ValueError(f"not an octal generator: {p!r}") from None
    return tuple(gens)


@dataclass(frozen=True)
class ConvCode:
    """Rate-1/N feed-forward convolutional code.

    Parameters
    ----------
    generators : tuple of int
        Generator polynomials (parse octal strings with :func:`parse_generators`).
    constraint_length : int, optional
        K. Defaults to the bit length of the widest generator.
    """

    generators: tuple[int, ...]
    constraint_length: int = 0

    def __post_init__(self):
        gens = tuple(int(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("at least one generator is required")
        if any(g <= 0 for g in gens):
            raise ValueError("every generator needs at least one nonzero tap")
        if len(gens) > 1 and len(set(gens)) == 1:
            raise ValueError("all generators identical: degenerate code")
        k = self.constraint_length or max(g.bit_length() for g in gens)
        if not 1 <= k <= MAX_CONSTRAINT_LENGTH:
            raise ValueError(f"constraint length {k} outside [1, {MAX_CONSTRAINT_LENGTH}]")
        if any(g.bit_length() > k for g in gens):
            raise ValueError("generator wider than the constraint length")
        object.__setattr__(self, "constraint_length", k)

    @classmethod
    def from_octal(cls, text: str | Sequence[str], constraint_length: int = 0) -> "ConvCode":
        return cls(parse_generators(text), constraint_length)

    @property
    def n_outputs(self) -> int:
        return len(self.generators)

    @property
    def num_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    def octal(self) -> str:
        return ",".join(format(g, "o") for g in self.generators)

    def __str__(self) -> str:
        return f"({self.octal()})_8"

    def tap_matrix(self) -> np.ndarray:
        """(N, K) 0/1 array; column 0 multiplies the current input."""
        k = self.constraint_length
        return np.array(
            [[(g >> (k - 1 - j)) & 1 for j in range(k)] for g in self.generators],
            dtype=np.uint8,
        )

    @cached_property
    def trellis(self) -> "Trellis":
        return build_trellis(self)


@dataclass(frozen=True, eq=False)
class Trellis:
    """State-transition graph of a :class:`ConvCode`.

    ``next_state[s, b]`` and ``label[s, b]`` give the successor state and the
    N-bit branch label (bit i of the integer is generator i's output).
    ``prev_state[s', j]`` / ``prev_input[s', j]`` list the two incoming
    branches of ``s'`` sorted by (state, input).
    """

    code: ConvCode
    next_state: np.ndarray
    label: np.ndarray
    label_bits: np.ndarray = field(repr=False)
    prev_state: np.ndarray = field(repr=False)
    prev_input: np.ndarray = field(repr=False)

    @property
    def num_states(self) -> int:
        return self.next_state.shape[0]

    def walk(self, info_bits: Sequence[int], state: int = 0) -> tuple[np.ndarray, int]:
        """Run the trellis over ``info_bits``; return (labels (T, N), final state)."""
        out = np.empty((len(info_bits), self.code.n_outputs), dtype=np.uint8)
        for t, b in enumerate(info_bits):
            out[t] = self.label_bits[state, b]
            state = int(self.next_state[state, b])
        return out, state

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("state,input,next_state,label\n")
        for s in range(self.num_states):
            for b in (0, 1):
                lab = "".join(str(x) for x in self.label_bits[s, b])
                buf.write(f"{s},{b},{self.next_state[s, b]},{lab}\n")
        return buf.getvalue()


def build_trellis(code: ConvCode) -> Trellis:
    k = code.constraint_length
    if not 1 <= k <= MAX_CONSTRAINT_LENGTH:
        raise ValueError(f"constraint length {k} outside [1, {MAX_CONSTRAINT_LENGTH}]")
    n_states = 1 << (k - 1)
    n = code.n_outputs
    next_state = np.zeros((n_states, 2), dtype=np.int64)
    label = np.zeros((n_states, 2), dtype=np.int64)
    label_bits = np.zeros((n_states, 2, n), dtype=np.uint8)
    incoming: list[list[tuple[int, int]]] = [[] for _ in range(n_states)]
    for s in range(n_states):
        for b in (0, 1):
            reg = (b << (k - 1)) | s
            ns = ((b << (k - 2)) | (s >> 1)) if k > 1 else 0
            bits = [_parity(g & reg) for g in code.generators]
            next_state[s, b] = ns
            label[s, b] = sum(bit << i for i, bit in enumerate(bits))
            label_bits[s, b] = bits
            incoming[ns].append((s, b))
    prev_state = np.zeros((n_states, 2), dtype=np.int64)
    prev_input = np.zeros((n_states, 2), dtype=np.int64)
    for ns, edges in enumerate(incoming):
        assert len(edges) == 2
        for j, (s, b) in enumerate(sorted(edges)):
            prev_state[ns, j] = s
            prev_input[ns, j] = b
    for arr in (next_state, label, label_bits, prev_state, prev_input):
        arr.setflags(write=False)
    return Trellis(code, next_state, label, label_bits, prev_state, prev_input)


def encode(code: ConvCode, info_bits: Sequence[int], terminate: bool = True) -> np.ndarray:
    """Encode from the all-zero state.

    Output is ordered transition by transition, generator 0 first, with
    length ``N * (len(info_bits) + tail)``; the tail is K-1 zeros when
    ``terminate`` is set.
    """
    u = np.asarray(info_bits, dtype=np.uint8).ravel()
    if u.size == 0:
        raise ValueError("info_bits must be nonempty")
    if np.any(u > 1):
        raise ValueError("info_bits must be 0/1")
    return encode_batch(code, u[None, :], terminate)[0].reshape(-1)


def encode_batch(code: ConvCode, info_bits: np.ndarray, terminate: bool = True) -> np.ndarray:
    """Vectorized encoder: (B, k) info bits -> (B, T, N) coded bits."""
    u = np.asarray(info_bits, dtype=np.uint8)
    k = code.constraint_length
    if terminate and k > 1:
        u = np.concatenate([u, np.zeros((u.shape[0], k - 1), dtype=np.uint8)], axis=1)
    n_batch, t_len = u.shape
    taps = code.tap_matrix()
    out = np.zeros((n_batch, t_len, code.n_outputs), dtype=np.uint8)
    for j in range(min(k, t_len)):
        # register position j holds the input from j steps ago
        shifted = np.zeros_like(u)
        shifted[:, j:] = u[:, : t_len - j]
        for i in range(code.n_outputs):
            if taps[i, j]:
                out[:, :, i] ^= shifted
    return out


def free_distance(code: ConvCode, max_length: int | None = None) -> int:
    """Minimum weight of a path leaving and re-entering the zero state.

    Breadth-first dynamic programming over the trellis, bounded to
    ``max_length`` transitions (default 10*K).  Raises if the bound is
    reached while an unmerged path could still beat the best weight found.
    """
    tr = code.trellis
    k = code.constraint_length
    max_length = max_length or 10 * k
    weights = np.array([bin(int(x)).count("1") for x in range(1 << code.n_outputs)])
    inf = np.iinfo(np.int64).max // 4
    best = inf
    dist = np.full(tr.num_states, inf, dtype=np.int64)
    s0 = int(tr.next_state[0, 1])
    w0 = int(weights[tr.label[0, 1]])
    if s0 == 0:
        best = w0
    else:
        dist[s0] = w0
    for _ in range(max_length):
        active = dist < inf
        active[0] = False
        if not active.any() or dist[active].min() >= best:
            return int(best)
        new = np.full_like(dist, inf)
        for s in np.nonzero(active)[0]:
            for b in (0, 1):
                ns = int(tr.next_state[s, b])
                w = dist[s] + int(weights[tr.label[s, b]])
                if ns == 0:
                    best = min(best, w)
                elif w < new[ns]:
                    new[ns] = w
        dist = new
    active = dist < inf
    active[0] = False
    if active.any() and dist[active].min() < best:
        raise RuntimeError(
            f"free-distance search did not settle within {max_length} transitions "
            "(catastrophic or pathological generators?)"
        )
    return int(best)
