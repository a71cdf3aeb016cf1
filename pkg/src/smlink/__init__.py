"""Spatial-modulation link toolkit.

Joint design of a non-uniform constellation and per-antenna pre-scaling for
spatial modulation over Rayleigh MISO channels, driven by Monte-Carlo BICM
mutual-information maximization, plus baselines, a bundled LDPC BICM chain,
and a coded block-error-rate evaluation harness.
"""

from .channel import ChannelRealization, SnrPoint, draw_rayleigh, receive
from .constellation import (
    Constellation,
    PreScaling,
    QuadrantParams,
    SmSignalSet,
    build_signal_set,
    expand_quadrant,
    extract_quadrant,
    load_design,
    make_apsk_initial,
    make_initial_prescaling,
    min_euclidean_distance,
    save_design,
)
from .capacity import (
    AmiEstimate,
    estimate_bicm_ami,
    estimate_bicm_ami_fixed_channel,
    paired_ami_difference,
)
from .detection import BitLlrVector, maxlog_llrs, ml_detect

__version__ = "0.1.0"

__all__ = [
    "AmiEstimate",
    "BitLlrVector",
    "ChannelRealization",
    "Constellation",
    "PreScaling",
    "QuadrantParams",
    "SmSignalSet",
    "SnrPoint",
    "build_signal_set",
    "draw_rayleigh",
    "estimate_bicm_ami",
    "estimate_bicm_ami_fixed_channel",
    "expand_quadrant",
    "extract_quadrant",
    "load_design",
    "make_apsk_initial",
    "make_initial_prescaling",
    "maxlog_llrs",
    "min_euclidean_distance",
    "ml_detect",
    "paired_ami_difference",
    "receive",
    "save_design",
]
