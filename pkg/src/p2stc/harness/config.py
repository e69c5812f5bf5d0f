"""JSON scenario configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

from ..convcode import ConvCode
from ..decoder import MetricConfig
from ..puncturing import PuncturingMatrix, resolve_matrix

DEFAULT_FRAME_INFO_BITS = {2: 130, 3: 120}


@dataclass(frozen=True)
class SimScenario:
    """One simulated configuration.

    ``puncturing`` is a catalog name, a list of row strings, or None for the
    unpunctured mother code.  ``beta`` is a float or ``"rule"``.
    ``block_interleave`` assigns super-symbol t to fading block ``t mod L``
    instead of cutting the frame into L consecutive blocks.  Frames are
    drawn in batches of ``batch_size`` until ``min_frame_errors`` frame
    errors are seen or ``max_frames`` is reached (``min_frame_errors=0``
    always runs the full budget).
    """

    id: str = "scenario"
    code: str = "133,171"
    puncturing: Any = None
    n_rx: int = 1
    l_blocks: int = 1
    block_interleave: bool = False
    frame_info_bits: int | None = None
    eb_n0_db: tuple[float, ...] = (0.0,)
    metric: str = "type1"
    beta: Any = "rule"
    max_frames: int = 10_000
    min_frame_errors: int = 100
    batch_size: int = 500
    seed: int = 1
    terminate: bool = True
    noiseless: bool = False

    def __post_init__(self):
        object.__setattr__(self, "eb_n0_db", tuple(float(x) for x in self.eb_n0_db))
        if isinstance(self.puncturing, list):
            object.__setattr__(self, "puncturing", tuple(self.puncturing))
        if self.frame_info_bits is None:
            n = self.conv_code.n_outputs
            object.__setattr__(self, "frame_info_bits", DEFAULT_FRAME_INFO_BITS.get(n, 120))
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.max_frames < 1 or self.batch_size < 1:
            raise ValueError("max_frames and batch_size must be positive")
        if self.frame_info_bits < 1:
            raise ValueError("frame_info_bits must be positive")
        self.matrix  # resolves catalog names
        self.metric_config

    @property
    def conv_code(self) -> ConvCode:
        return ConvCode.from_octal(self.code)

    @property
    def matrix(self) -> PuncturingMatrix:
        return resolve_matrix(self.puncturing, self.conv_code.n_outputs)

    @property
    def metric_config(self) -> MetricConfig:
        return MetricConfig.parse(self.metric, self.beta)

    @property
    def rate(self) -> Fraction:
        return self.matrix.rate

    @property
    def n_tx(self) -> int:
        return self.conv_code.n_outputs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eb_n0_db"] = list(self.eb_n0_db)
        if isinstance(self.puncturing, tuple):
            d["puncturing"] = list(self.puncturing)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimScenario":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        return cls(**d)

    def replace(self, **changes) -> "SimScenario":
        d = self.to_dict()
        d.update(changes)
        return SimScenario.from_dict(d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ConfigFile:
    """A config file: shared defaults plus one or more scenarios.

    Either a single scenario object, or ``{"defaults": {...}, "scenarios":
    [{...}, ...]}``; other top-level keys (``beta_grid``, ``workers``,
    ``period``, ``max_delta``) parametrize the analysis subcommands.
    """

    scenarios: list[SimScenario]
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ConfigFile":
        raw = dict(raw)
        extra_keys = ("beta_grid", "workers", "period", "max_delta")
        extras = {k: raw.pop(k) for k in extra_keys if k in raw}
        if "scenarios" in raw:
            entries = raw.pop("scenarios")
            defaults = raw.pop("defaults", {})
            if raw:
                raise ValueError(f"unknown top-level keys: {', '.join(sorted(raw))}")
            scenarios = [SimScenario.from_dict({**defaults, **s}) for s in entries]
        else:
            scenarios = [SimScenario.from_dict(raw)]
        ids = [s.id for s in scenarios]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")
        return cls(scenarios, extras)

    @classmethod
    def load(cls, path: str | Path) -> "ConfigFile":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
