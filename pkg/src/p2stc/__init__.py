"""Punctured pragmatic space-time codes: encoding, puncturing, channel, decoding and simulation."""

__version__ = "0.1.0"

from .convcode import ConvCode, Trellis, build_trellis, encode, free_distance  # noqa: E402
from .puncturing import (  # noqa: E402
    PuncturingMatrix,
    apply_puncture,
    check_rate_compatible,
    lookup,
    map_to_supersymbols,
    punctured_rate,
    spanning_map,
)
from .channel import ChannelConfig, eb_n0_to_es, sample_realization, transmit  # noqa: E402
from .decoder import (  # noqa: E402
    FrameDecoder,
    MetricConfig,
    MetricMode,
    compute_type2_weights,
    decode_frame,
    ml_joint_decode,
    viterbi_decode,
)

__all__ = [
    "ChannelConfig", "ConvCode", "FrameDecoder", "MetricConfig", "MetricMode",
    "PuncturingMatrix", "Trellis", "apply_puncture", "build_trellis", "check_rate_compatible",
    "compute_type2_weights", "decode_frame", "eb_n0_to_es", "encode", "free_distance", "lookup",
    "map_to_supersymbols", "ml_joint_decode", "punctured_rate", "sample_realization",
    "spanning_map", "transmit", "viterbi_decode",
]
