"""Diversity analysis, beta sweeps and puncturing-pattern search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erfc

from .decoder import MetricConfig
from .harness.config import SimScenario
from .harness.engine import Link, PointResult, run_batches
from .puncturing import PuncturingMatrix, basic_patterns, frame_layout, spanning_events


def diversity_bound(l_blocks: int, n_tx: int, rate: Fraction | str | float) -> int:
    """``1 + floor(L * N * (1 - R))`` with exact rational arithmetic."""
    rate = Fraction(rate) if not isinstance(rate, float) else Fraction(rate).limit_denominator(10**6)
    if l_blocks < 1 or n_tx < 1:
        raise ValueError("L and N must be positive")
    if not 0 < rate <= 1:
        raise ValueError("rate must lie in (0, 1]")
    return 1 + math.floor(l_blocks * n_tx * (1 - rate))


def analytic_ber(channel_kind: str, eb_n0_db: float) -> float:
    """Uncoded BPSK: ``Q(sqrt(2g))`` on AWGN, ``(1 - sqrt(g/(1+g)))/2`` on Rayleigh."""
    g = 10.0 ** (eb_n0_db / 10.0)
    if channel_kind == "awgn":
        return 0.5 * float(erfc(math.sqrt(g)))
    if channel_kind == "rayleigh":
        return 0.5 * (1.0 - math.sqrt(g / (1.0 + g)))
    raise ValueError(f"unknown channel kind {channel_kind!r}")


@dataclass(frozen=True)
class DiversityEstimate:
    """Fitted order; ``stderr`` propagates binomial FER noise through the fit (nan if unknown)."""

    fitted_order: float
    fit_points: tuple[tuple[float, float], ...]
    residual: float
    flagged: bool = False
    stderr: float = float("nan")


def estimate_diversity(curve: Iterable[Sequence[float]], num_frames: int | None = None,
                       fer_range: tuple[float, float] | None = None) -> DiversityEstimate:
    """Fit ``log10(FER)`` against Eb/N0 in dB; the order is ``-10 * slope``.

    ``curve`` holds ``(eb_n0_db, fer)`` or ``(eb_n0_db, fer, frames)``.
    Points are kept when ``lo < fer < hi``; by default ``hi = 0.1`` and
    ``lo = 10 / frames`` (per point, or ``num_frames``).  A slope too flat
    to call a diversity order is flagged.
    """
    pts, counts = [], []
    for entry in curve:
        snr, fer = float(entry[0]), float(entry[1])
        frames = entry[2] if len(entry) > 2 else num_frames
        lo, hi = fer_range if fer_range else (0.0, 0.1)
        if frames:
            lo = max(lo, 10.0 / frames)
        if lo < fer < hi:
            pts.append((snr, fer))
            counts.append(frames or 0)
    if len(pts) < 2:
        raise ValueError(f"need at least 2 resolved points in the fit window, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    fer = np.array([p[1] for p in pts])
    y = np.log10(fer)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    order = -10.0 * float(slope)
    stderr = float("nan")
    n = np.array(counts, dtype=float)
    if np.all(n > 0):
        # slope = sum c_i y_i; var(log10 p_hat) ~ (1 - p) / (n p ln(10)^2)
        c = (x - x.mean()) / np.sum((x - x.mean()) ** 2)
        var_y = (1 - fer) / (n * fer * np.log(10) ** 2)
        stderr = 10.0 * float(np.sqrt(np.sum(c**2 * var_y)))
    return DiversityEstimate(order, tuple(pts), resid, flagged=order < 0.1, stderr=stderr)


@dataclass(frozen=True)
class PairedComparison:
    """Mean per-frame bit-error difference (a - b) with a normal-approximation CI."""

    mean_diff: float
    ci_low: float
    ci_high: float
    frames: int

    @property
    def a_better(self) -> bool:
        return self.ci_high < 0

    @property
    def b_better(self) -> bool:
        return self.ci_low > 0


def paired_compare(errors_a: np.ndarray, errors_b: np.ndarray, level: float = 0.95) -> PairedComparison:
    from scipy import stats

    d = np.asarray(errors_a, dtype=float) - np.asarray(errors_b, dtype=float)
    if d.size < 2:
        raise ValueError("need at least two paired frames")
    z = float(stats.norm.ppf(0.5 + level / 2))
    half = z * d.std(ddof=1) / math.sqrt(d.size)
    m = float(d.mean())
    return PairedComparison(m, m - half, m + half, int(d.size))


@dataclass
class SweepResult:
    """BER per beta on common frames; ``errors[beta]`` keeps per-frame counts."""

    points: list[PointResult]
    errors: dict[float, np.ndarray] = field(repr=False)

    @property
    def best_beta(self) -> float:
        return float(min(self.points, key=lambda p: (p.ber, float(p.beta))).beta)

    def ber(self, beta: float) -> float:
        return next(p.ber for p in self.points if float(p.beta) == beta)

    def plausible_optima(self, level: float = 0.95) -> list[float]:
        """Betas whose BER is not resolvably worse than the best one."""
        best = self.best_beta
        return sorted(b for b, e in self.errors.items()
                      if b == best or not paired_compare(e, self.errors[best], level).b_better)


def _metrics_for(sc: SimScenario, betas: Sequence[float]) -> list[MetricConfig]:
    base = sc.metric_config
    return [base.with_beta(float(b)) for b in betas]


def sweep_beta(scenario: SimScenario, beta_grid: Sequence[float], frames_per_point: int,
               eb_n0_db: float | None = None, workers: int = 1, point_index: int = 0) -> SweepResult:
    """BER versus beta at one Eb/N0, every beta decoding the same frames."""
    if not beta_grid:
        raise ValueError("empty beta grid")
    if any(not 0 <= b <= 1 for b in beta_grid):
        raise ValueError("beta grid must lie in [0, 1]")
    snr = scenario.eb_n0_db[0] if eb_n0_db is None else eb_n0_db
    link = Link.from_scenario(scenario)
    metrics = _metrics_for(scenario, beta_grid)
    errs, _ = run_batches(link, metrics, snr, scenario.seed, point_index, frames_per_point,
                          scenario.batch_size, 0, workers, scenario.noiseless)
    points = [PointResult.from_errors(scenario.id, f"{b:g}", snr, e, link.n_info)
              for b, e in zip(beta_grid, errs)]
    return SweepResult(points, {float(b): e for b, e in zip(beta_grid, errs)})


@dataclass(frozen=True)
class PatternScore:
    matrix: PuncturingMatrix
    delta: int
    sweep: SweepResult = field(repr=False, compare=False)

    @property
    def best(self) -> PointResult:
        return min(self.sweep.points, key=lambda p: (p.ber, float(p.beta)))

    @property
    def ber(self) -> float:
        return self.best.ber

    @property
    def label(self) -> str:
        return "/".join(self.matrix.rows)

    def as_point(self) -> PointResult:
        b = self.best
        return PointResult(self.label, b.beta, b.eb_n0_db, b.frames, b.bit_errors,
                           b.frame_errors, b.ber, b.fer, b.ci_low, b.ci_high)


def pattern_delta(matrix: PuncturingMatrix, n_transitions: int | None = None) -> int:
    lay = frame_layout(matrix, n_transitions or 3 * matrix.period, strict=False)
    return max((len(e) for e in spanning_events(lay)), default=0)


def search_patterns(n_tx: int, n_zeros: int, max_delta: int, scenario: SimScenario,
                    beta_grid: Sequence[float] = (0.3, 0.4, 0.5, 0.6, 0.7),
                    frames: int = 2000, period: int = 10, workers: int = 1) -> list[PatternScore]:
    """Rank single basic patterns by BER at their own best beta.

    Zeros are placed over at most ``max_delta`` consecutive columns, always
    starting at the same column of an all-ones matrix, and every pattern is
    simulated on the same frames (same seed).
    """
    if n_zeros < 1 or n_zeros > n_tx * max_delta:
        raise ValueError("cannot place that many zeros within max_delta columns")
    if scenario.conv_code.n_outputs != n_tx:
        raise ValueError("scenario code must have one output per transmit antenna")
    scores = []
    for m in basic_patterns(n_tx, n_zeros, max_delta, period):
        sc = scenario.replace(puncturing=list(m.rows))
        delta = pattern_delta(m)
        grid = beta_grid if delta else beta_grid[:1]
        scores.append(PatternScore(m, delta, sweep_beta(sc, grid, frames, workers=workers)))
    if not scores:
        raise ValueError("no feasible pattern placements")
    return sorted(scores, key=lambda s: (s.ber, s.delta, s.label))


def two_zero_pattern(delta: int, period: int = 10, start: int = 1) -> PuncturingMatrix:
    """N=2 basic pattern: antenna-1 bit erased at ``start``, antenna-2 bit ``delta`` later."""
    rows = [["1"] * period, ["1"] * period]
    rows[0][start] = "0"
    rows[1][start + delta] = "0"
    return PuncturingMatrix(("".join(rows[0]), "".join(rows[1])), name=f"2zeros-d{delta}")
