"""Twisted-pair superposition transmission (TPST) codes built on tail-biting convolutional codes."""

from .binlin import BitMatrix, BitVector, SelectionMatrix, build_selection_matrix, sample_structured_matrix
from .channel import ChannelParams, bpsk_awgn, channel_llr, edf, log_likelihood
from .convcode import (
    PRESETS,
    ConvSpec,
    ListEntry,
    PuncturePattern,
    encode_tbcc,
    list_viterbi_tb,
    preset_spec,
    puncture,
    viterbi_tb,
)
from .sim import (
    BoundRecord,
    ExperimentConfig,
    FerRecord,
    calibrate_threshold,
    genie_bound_layer0,
    genie_bound_layer1,
    ml_lower_bound,
    rate_allocate,
    simulate_fer,
)
from .tpst import DecodeResult, TpstSpec, build_generator, build_parity, encode, llr_layer0, llr_layer1, scl_decode

__version__ = "0.1.0"
