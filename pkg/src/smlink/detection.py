"""ML vector detection and max-log soft demapping.

LLR sign convention: positive means bit 0 is more likely. The FEC decoder
uses the same convention; a hard decision is bit = (llr < 0).

Candidate counts are at most a few hundred at the supported orders, so both
operations run an exhaustive search over all M*N_t received candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .constellation import SmSignalSet


@dataclass(frozen=True)
class BitLlrVector:
    """Per-bit log-likelihood ratios for one received sample."""

    llrs: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.llrs, dtype=np.float64))
        v.setflags(write=False)
        object.__setattr__(self, "llrs", v)

    def hard_bits(self) -> np.ndarray:
        return (self.llrs < 0).astype(np.int64)


def ml_detect(y: complex, sig_set: SmSignalSet, channel: ChannelRealization) -> int:
    """Index of the candidate closest to y; ties go to the lowest index."""
    cand = sig_set.received_candidates(channel.gains)
    d2 = np.abs(y - cand) ** 2
    return int(np.argmin(d2))


def maxlog_llrs(
    y: complex,
    sig_set: SmSignalSet,
    channel: ChannelRealization,
    noise_var: float | None = None,
) -> BitLlrVector:
    """Max-log LLRs for every label bit of one received sample.

    llr_i = (min distance^2 over bit-1 candidates
             - min distance^2 over bit-0 candidates) / noise_var,
    where noise_var defaults to the channel's.
    """
    nv = channel.noise_var if noise_var is None else float(noise_var)
    cand = sig_set.received_candidates(channel.gains)
    d2 = np.abs(y - cand) ** 2
    return BitLlrVector(_llrs_from_d2(d2[None, :], sig_set.bit_masks(), nv)[0])


def _llrs_from_d2(d2: np.ndarray, bit_is_one: np.ndarray, noise_var: float) -> np.ndarray:
    """(..., T) squared distances -> (..., nbits) max-log LLRs."""
    out = np.empty(d2.shape[:-1] + (bit_is_one.shape[0],), dtype=np.float64)
    for i, ones in enumerate(bit_is_one):
        d1 = d2[..., ones].min(axis=-1)
        d0 = d2[..., ~ones].min(axis=-1)
        out[..., i] = (d1 - d0) / noise_var
    return out


def maxlog_llrs_block(
    y: np.ndarray,
    sig_set: SmSignalSet,
    gains: np.ndarray,
    noise_var: float,
    max_chunk: int = 1 << 22,
) -> np.ndarray:
    """Demap a batch of received samples sharing one channel realization.

    y has shape (..., S); the result appends the bits-per-use axis. Work is
    chunked so the distance matrix stays within a bounded footprint.
    """
    y = np.asarray(y, dtype=np.complex128)
    cand = sig_set.received_candidates(gains)
    flat = y.reshape(-1)
    t = cand.size
    nb = sig_set.bits_per_use
    out = np.empty((flat.size, nb), dtype=np.float64)
    rows = max(1, max_chunk // t)
    masks = sig_set.bit_masks()
    for lo in range(0, flat.size, rows):
        hi = min(lo + rows, flat.size)
        d2 = np.abs(flat[lo:hi, None] - cand[None, :]) ** 2
        out[lo:hi] = _llrs_from_d2(d2, masks, noise_var)
    return out.reshape(*y.shape, nb)
