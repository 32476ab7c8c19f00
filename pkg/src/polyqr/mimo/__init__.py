"""Detection test bench: random channels, 16-QAM with an optional
convolutional code, hard-output detectors, and the Monte Carlo BER loop."""

from .ber import BERResult, SimConfig, SNRPoint, ber_experiment, wilson_interval
from .channel import channel_samples, draw_channel, tone_response
from .detect import (
    candidate_grid,
    grid_index_to_bits,
    ml_tone_batch,
    sc_detect,
    scaled_candidates,
    sphere_detect,
    symbols_to_grid_index,
)
from .modem import (
    CONSTELLATION,
    conv_encode,
    deinterleave,
    interleave,
    make_interleaver,
    qam16_map,
    qam16_slice,
    viterbi_decode,
)

__all__ = [
    "BERResult",
    "CONSTELLATION",
    "SNRPoint",
    "SimConfig",
    "ber_experiment",
    "candidate_grid",
    "channel_samples",
    "conv_encode",
    "deinterleave",
    "draw_channel",
    "grid_index_to_bits",
    "interleave",
    "make_interleaver",
    "ml_tone_batch",
    "qam16_map",
    "qam16_slice",
    "sc_detect",
    "scaled_candidates",
    "sphere_detect",
    "symbols_to_grid_index",
    "tone_response",
    "viterbi_decode",
]
