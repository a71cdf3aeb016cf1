"""Reference schemes: uniform-QAM spatial modulation and phase pre-scaling.

The phase pre-scaling baseline assigns antenna k (1-based) the angle
theta_k = 2*pi*(k-1) / (M*N_t), an equal spacing inside one symbol-phase
sector. With receiver-side channel knowledge fed back, the coefficient also
cancels the channel phase, so the noiseless received points become
|h_k| * exp(j*theta_k) * s_m; without feedback only the fixed angles remain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .constellation import Constellation, PreScaling, SmSignalSet, build_signal_set, gray_code


@dataclass(frozen=True)
class SmpConfig:
    """Phase pre-scaling setup for a given (M, N_t)."""

    mode: str  # "perfect-csi" or "no-feedback"
    m_order: int
    n_t: int

    def __post_init__(self):
        if self.mode not in ("perfect-csi", "no-feedback"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def theta(self) -> np.ndarray:
        k = np.arange(self.n_t)
        return 2.0 * np.pi * k / (self.m_order * self.n_t)


def smp_coefficients(config: SmpConfig, channel: ChannelRealization | None = None) -> PreScaling:
    """Pre-scaling coefficients of the phase baseline.

    perfect-csi: alpha_k = exp(j*(theta_k - angle(h_k))), needs a channel.
    no-feedback: alpha_k = exp(j*theta_k).
    """
    theta = config.theta
    if config.mode == "perfect-csi":
        if channel is None:
            raise ValueError("perfect-csi pre-scaling requires a channel realization")
        if channel.n_t != config.n_t:
            raise ValueError("channel dimension does not match config")
        phases = theta - np.angle(channel.gains)
    else:
        phases = theta
    return PreScaling(np.exp(1j * phases))


def square_qam(m_order: int) -> Constellation:
    """Gray-labeled square QAM with unit average power."""
    if m_order not in (4, 16, 64):
        raise ValueError(f"square QAM provided for orders 4, 16, 64; got {m_order}")
    bits = m_order.bit_length() - 1
    half = bits // 2
    side = 1 << half
    levels = np.arange(side) * 2.0 - (side - 1)
    levels /= np.sqrt(np.mean(levels**2) * 2.0)
    # Axis index is Gray-decoded from its bit group, so neighbors differ in one bit.
    inv_gray = np.empty(side, dtype=np.int64)
    inv_gray[gray_code(np.arange(side))] = np.arange(side)
    words = np.arange(m_order)
    i_idx = inv_gray[words >> half]
    q_idx = inv_gray[words & (side - 1)]
    symbols = levels[i_idx] + 1j * levels[q_idx]
    # Symbol index equals its word; the labeling is then the identity.
    return Constellation(symbols, words)


def conventional_sm_set(m_order: int, n_t: int) -> SmSignalSet:
    """Plain spatial modulation: square QAM on every antenna, unit coefficients."""
    return build_signal_set(square_qam(m_order), PreScaling(np.ones(n_t)), n_t)


def smp_sm_set(m_order: int, n_t: int) -> SmSignalSet:
    """Phase-pre-scaled spatial modulation without feedback (static coefficients)."""
    cfg = SmpConfig("no-feedback", m_order, n_t)
    return build_signal_set(square_qam(m_order), smp_coefficients(cfg), n_t)
