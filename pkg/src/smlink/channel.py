"""Rayleigh MISO channel draws, AWGN, and the received-sample model.

Conventions used throughout the package:

* Channel gains h_k are i.i.d. circularly symmetric complex Gaussian with
  unit variance (E|h_k|^2 = 1).
* ``noise_var`` is the total complex noise variance E|z|^2, i.e. each real
  dimension carries noise_var / 2.
* SNR is E|h alpha s|^2 / E|z|^2. With the unit-power signal convention and
  unit-variance gains this reduces to noise_var = 10^(-snr_db / 10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import SmSignalSet


@dataclass(frozen=True)
class SnrPoint:
    """Operating point in dB under the unit transmit-power convention."""

    snr_db: float

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """One set of per-antenna complex gains plus the noise level in force."""

    gains: np.ndarray
    noise_var: float = 1.0

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.complex128)
        if g.ndim != 1 or g.size < 1:
            raise ValueError("gains must be a non-empty 1-D array")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        g = np.ascontiguousarray(g)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def n_t(self) -> int:
        return self.gains.size


def complex_normal(rng: np.random.Generator, shape, var_total: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian with E|x|^2 = var_total."""
    scale = np.sqrt(var_total / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_rayleigh(n_t: int, rng: np.random.Generator, noise_var: float = 1.0) -> ChannelRealization:
    """Draw one flat Rayleigh realization with unit-variance gains."""
    if n_t < 1:
        raise ValueError("need at least one antenna")
    return ChannelRealization(complex_normal(rng, n_t), noise_var)


def receive(
    sig_set: SmSignalSet,
    vector_index: int,
    channel: ChannelRealization,
    rng: np.random.Generator | None = None,
) -> complex:
    """Received scalar y = h_k alpha_k s_m + z for one transmit vector.

    With ``rng`` None the noise is disabled and the noiseless point is
    returned exactly.
    """
    t = sig_set.n_vectors
    if not 0 <= vector_index < t:
        raise ValueError(f"vector index {vector_index} out of range 0..{t - 1}")
    if channel.n_t != sig_set.n_t:
        raise ValueError("channel dimension does not match signal set")
    noiseless = sig_set.received_candidates(channel.gains)[vector_index]
    if rng is None:
        return complex(noiseless)
    return complex(noiseless + complex_normal(rng, (), channel.noise_var))
