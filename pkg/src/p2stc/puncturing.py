"""Puncturing matrices and re-packing of surviving bits into super-symbols.

Coded bits are read column-wise (one column per trellis transition, row
index ascending inside a transition).  Erased bits are dropped and the
survivors are regrouped N at a time, bit j of a group feeding antenna j.
When a column loses bits the groups slide, so one super-symbol can carry
bits from two consecutive transitions; :func:`spanning_map` describes
where that happens.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


def punctured_rate(period: int, n_outputs: int, zeros: int) -> Fraction:
    """Rate of a rate-1/N mother code punctured with ``zeros`` erasures per period.

    ``R = p / (p*N - z)`` as an exact fraction (not reduced in meaning:
    ``Fraction`` normalizes, compare with ``Fraction(10, 15)`` etc.).
    """
    if period < 1 or n_outputs < 1:
        raise ValueError("period and n_outputs must be positive")
    if zeros < 0:
        raise ValueError("zeros must be non-negative")
    kept = period * n_outputs - zeros
    if kept < period:
        raise ValueError(f"{kept} kept bits per period of {period}: rate would exceed 1")
    return Fraction(period, kept)


@dataclass(frozen=True)
class PuncturingMatrix:
    """Periodic N x p keep/erase mask (1 = keep)."""

    rows: tuple[str, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        rows = tuple(str(r).replace(" ", "") for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows or not rows[0]:
            raise ValueError("empty puncturing matrix")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("puncturing rows must have equal length")
        if any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("puncturing rows must contain only '0'/'1'")
        if any("1" not in r for r in rows):
            raise ValueError("every row needs at least one kept bit")
        punctured_rate(self.period, self.n_rows, self.zeros)

    @classmethod
    def identity(cls, n_rows: int, period: int = 1) -> "PuncturingMatrix":
        return cls(tuple("1" * period for _ in range(n_rows)), name="identity")

    @classmethod
    def from_array(cls, mask, name: str = "") -> "PuncturingMatrix":
        mask = np.asarray(mask)
        return cls(tuple("".join(str(int(x)) for x in row) for row in mask), name=name)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.array([[int(c) for c in r] for r in self.rows], dtype=np.uint8)
        m.setflags(write=False)
        return m

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def period(self) -> int:
        return len(self.rows[0])

    @property
    def zeros(self) -> int:
        return sum(r.count("0") for r in self.rows)

    @property
    def kept_per_period(self) -> int:
        return self.n_rows * self.period - self.zeros

    @property
    def rate(self) -> Fraction:
        return punctured_rate(self.period, self.n_rows, self.zeros)

    @property
    def is_identity(self) -> bool:
        return self.zeros == 0

    def zero_positions(self) -> set[tuple[int, int]]:
        """1-indexed (row, column) positions of erased bits."""
        return {
            (i + 1, j + 1) for i, r in enumerate(self.rows) for j, c in enumerate(r) if c == "0"
        }

    def __str__(self) -> str:
        return self.name or "/".join(self.rows)


def _survivor_positions(matrix: PuncturingMatrix, n_transitions: int) -> tuple[np.ndarray, np.ndarray]:
    cols = np.arange(n_transitions) % matrix.period
    keep = matrix.mask[:, cols].T.astype(bool)  # (T, N), column-wise traversal
    t_idx, r_idx = np.nonzero(keep)
    return t_idx, r_idx


def apply_puncture(coded_bits, matrix: PuncturingMatrix) -> np.ndarray:
    """Drop erased bits; ``coded_bits`` is flat (transition-major) or (T, N)."""
    bits = np.asarray(coded_bits, dtype=np.uint8)
    n = matrix.n_rows
    if bits.ndim == 1:
        if bits.size % n:
            raise ValueError(f"coded bit count {bits.size} not a multiple of N={n}")
        bits = bits.reshape(-1, n)
    if bits.shape[-1] != n:
        raise ValueError("coded bits do not match the matrix row count")
    t_idx, r_idx = _survivor_positions(matrix, bits.shape[-2])
    return bits[..., t_idx, r_idx]


@dataclass(frozen=True)
class SuperSymbolFrame:
    """(F, N) BPSK super-symbols; row t is what the N antennas send at time t."""

    symbols: np.ndarray
    padded: int = 0

    @property
    def length(self) -> int:
        return self.symbols.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.symbols.shape[1]


def map_to_supersymbols(surviving_bits, n_antennas: int, strict: bool = True) -> SuperSymbolFrame:
    """Group survivors N at a time and map bit b to 2b-1."""
    bits = np.asarray(surviving_bits, dtype=np.int8).ravel()
    pad = (-bits.size) % n_antennas
    if pad:
        if strict:
            raise ValueError(
                f"{bits.size} surviving bits do not fill whole super-symbols of {n_antennas}"
            )
        warnings.warn(f"zero-padding the last super-symbol with {pad} bit(s)", stacklevel=2)
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.int8)])
    return SuperSymbolFrame((2 * bits - 1).reshape(-1, n_antennas).astype(np.int8), pad)


@dataclass(frozen=True, eq=False)
class FrameLayout:
    """Where every antenna slot of every super-symbol comes from.

    ``trans[u, j]`` is the transition and ``row[u, j]`` the label bit carried
    by antenna j of super-symbol u.
    """

    n_transitions: int
    n_antennas: int
    trans: np.ndarray
    row: np.ndarray

    @property
    def n_symbols(self) -> int:
        return self.trans.shape[0]

    def symbol_transitions(self, u: int) -> tuple[int, ...]:
        return tuple(sorted(set(int(t) for t in self.trans[u])))

    @cached_property
    def left(self) -> np.ndarray:
        return self.trans.min(axis=1)

    @cached_property
    def right(self) -> np.ndarray:
        return self.trans.max(axis=1)

    @cached_property
    def spanning(self) -> np.ndarray:
        return self.left != self.right


def frame_layout(matrix: PuncturingMatrix, n_transitions: int, strict: bool = True) -> FrameLayout:
    """Lay out a frame of ``n_transitions`` trellis steps.

    Raises if a super-symbol would mix bits from three or more transitions,
    or (strict) if the survivors do not fill the last super-symbol.
    """
    n = matrix.n_rows
    t_idx, r_idx = _survivor_positions(matrix, n_transitions)
    pad = (-t_idx.size) % n
    if pad:
        if strict:
            raise ValueError(
                f"{t_idx.size} surviving bits over {n_transitions} transitions "
                f"do not fill whole super-symbols of {n}"
            )
        t_idx = np.concatenate([t_idx, np.full(pad, t_idx[-1])])
        r_idx = np.concatenate([r_idx, np.full(pad, -1)])
    trans = t_idx.reshape(-1, n)
    row = r_idx.reshape(-1, n)
    n_distinct = np.array([len(set(t)) for t in trans.tolist()])
    bad = np.nonzero(n_distinct > 2)[0]
    if bad.size:
        raise ValueError(
            f"super-symbol {int(bad[0])} carries bits from {int(n_distinct[bad[0]])} transitions"
        )
    return FrameLayout(n_transitions, n, trans, row)


@dataclass(frozen=True)
class SymbolSpan:
    index: int
    transitions: tuple[int, ...]
    n_left: int = 0
    n_right: int = 0

    @property
    def n_total(self) -> int:
        return self.n_left + self.n_right

    @property
    def spans(self) -> bool:
        return len(self.transitions) == 2


@dataclass(frozen=True)
class SpanningMap:
    """Steady-state symbol/transition alignment over one period.

    Transition and symbol indices are relative to the start of the period;
    ``events`` groups chains of spanning symbols (each symbol's right
    transition is the next one's left transition).
    """

    symbols: tuple[SymbolSpan, ...]
    events: tuple[tuple[int, ...], ...]

    @property
    def deltas(self) -> tuple[int, ...]:
        return tuple(len(e) for e in self.events)

    @property
    def delta(self) -> int:
        return max(self.deltas, default=0)

    @property
    def spanning_symbols(self) -> tuple[SymbolSpan, ...]:
        return tuple(s for s in self.symbols if s.spans)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("symbol_index,transitions,n_L,n_R\n")
        for s in self.symbols:
            tr = "-".join(str(t) for t in s.transitions)
            buf.write(f"{s.index},{tr},{s.n_left},{s.n_right}\n")
        return buf.getvalue()


def spanning_events(layout: FrameLayout) -> list[list[int]]:
    """Chains of consecutive spanning symbols in a frame layout."""
    events: list[list[int]] = []
    for u in np.nonzero(layout.spanning)[0].tolist():
        if events and events[-1][-1] == u - 1 and layout.right[u - 1] == layout.left[u]:
            events[-1].append(u)
        else:
            events.append([u])
    return events


def spanning_map(matrix: PuncturingMatrix, n_antennas: int | None = None) -> SpanningMap:
    n = n_antennas or matrix.n_rows
    if n != matrix.n_rows:
        raise ValueError("one antenna per mother-code output: n_antennas must equal N")
    p = matrix.period
    # three periods, read from the middle one; the first settles the phase and
    # the third holds any symbol spilling over the seam
    layout = frame_layout(matrix, 3 * p, strict=False)
    kept_col = matrix.mask.sum(axis=0)
    first_bit = np.arange(layout.n_symbols) * n
    start = matrix.kept_per_period
    sel = np.nonzero((first_bit >= start) & (first_bit < 2 * start))[0]
    u0 = int(sel[0]) if sel.size else 0
    symbols = []
    for u in sel.tolist():
        trs = layout.symbol_transitions(u)
        rel = tuple(t - p for t in trs)
        if len(trs) == 2:
            nl, nr = int(kept_col[trs[0] % p]), int(kept_col[trs[1] % p])
        else:
            nl, nr = int(kept_col[trs[0] % p]), 0
        symbols.append(SymbolSpan(u - u0, rel, nl, nr))
    # an event may start before the middle period (odd survivor counts shift
    # the alignment across the seam); keep every event touching it
    events = [
        tuple(u - u0 for u in ev)
        for ev in spanning_events(layout)
        if sel.size and ev[-1] >= sel[0] and ev[0] <= sel[-1]
    ]
    return SpanningMap(tuple(symbols), tuple(events))


@dataclass(frozen=True)
class CompatibilityReport:
    passed: bool
    violations: tuple[tuple[int, int], ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def check_rate_compatible(low_rate: PuncturingMatrix, high_rate: PuncturingMatrix) -> CompatibilityReport:
    """Every erased position of ``low_rate`` must also be erased in ``high_rate``."""
    if (low_rate.n_rows, low_rate.period) != (high_rate.n_rows, high_rate.period):
        raise ValueError("rate-compatibility needs matrices of equal shape")
    missing = sorted(low_rate.zero_positions() - high_rate.zero_positions())
    return CompatibilityReport(not missing, tuple(missing))


_CATALOG: dict[str, tuple[str, ...]] = {
    "Eq5": ("1011", "1101"),
    "Eq9": ("101111", "111101"),
    "TableI-5/9": ("1101111111", "1011111111"),
    "TableI-5/8": ("1101011111", "1010111111"),
    "TableI-5/7": ("1101010111", "1010101111"),
    "TableI-5/6": ("1101010101", "1010101011"),
    "TableII-10/27": ("1101111111", "1101111111", "1011111111"),
    "TableII-10/24": ("1010111111", "1010111111", "0101111111"),
    "TableII-10/21": ("1010101111", "1010101111", "0101011111"),
    "TableII-10/18": ("1010101011", "1010101011", "0101010111"),
    "TableII-10/15": ("1010101010", "1010101010", "0101010101"),
    "Basic-N2-a": ("10", "01"),
    "Basic-N2-b": ("01", "10"),
    "Basic-N3-a": ("10", "10", "01"),
    "Basic-N3-b": ("10", "01", "10"),
}


def catalog() -> list[PuncturingMatrix]:
    """Built-in matrices: rate-compatible tables, the worked examples and basic patterns."""
    return [PuncturingMatrix(rows, name=name) for name, rows in _CATALOG.items()]


def lookup(name: str) -> PuncturingMatrix:
    try:
        return PuncturingMatrix(_CATALOG[name], name=name)
    except KeyError:
        raise KeyError(f"unknown puncturing matrix {name!r}; known: {', '.join(_CATALOG)}") from None


def resolve_matrix(spec: str | Sequence[str] | PuncturingMatrix | None, n_rows: int) -> PuncturingMatrix:
    """Accept a catalog name, a list of row strings, or None (no puncturing)."""
    if spec is None or spec == "identity":
        return PuncturingMatrix.identity(n_rows)
    if isinstance(spec, PuncturingMatrix):
        m = spec
    elif isinstance(spec, str):
        # anything that is not a 0/1 row spec is treated as a catalog name
        if spec in _CATALOG or set(spec) - set("01/ "):
            m = lookup(spec)
        else:
            m = PuncturingMatrix(tuple(spec.split("/")))
    else:
        m = PuncturingMatrix(tuple(spec))
    if m.n_rows != n_rows:
        raise ValueError(f"matrix {m} has {m.n_rows} rows, code has {n_rows} outputs")
    return m


def basic_patterns(n_rows: int, n_zeros: int, width: int, period: int = 10,
                   start: int = 1) -> Iterable[PuncturingMatrix]:
    """Single basic patterns embedded in an otherwise all-ones N x period matrix.

    Zeros occupy at most ``width`` consecutive columns from ``start``, with at
    least one zero in column ``start``; placements breaking the
    two-transition rule are skipped.
    """
    from itertools import combinations

    if width < 1:
        raise ValueError("pattern width must be at least one column")
    if start + width > period:
        raise ValueError("pattern does not fit in the period")
    cells = [(i, j) for j in range(width) for i in range(n_rows)]
    for combo in combinations(cells, n_zeros):
        if not any(j == 0 for _, j in combo):
            continue
        mask = np.ones((n_rows, period), dtype=np.uint8)
        for i, j in combo:
            mask[i, start + j] = 0
        try:
            m = PuncturingMatrix.from_array(mask)
            frame_layout(m, 3 * period, strict=False)
        except ValueError:
            continue
        yield m
