import numpy as np
import pytest
from scipy import stats

import smlink.rng as rngmod
from smlink import (
    ChannelRealization,
    PreScaling,
    SnrPoint,
    build_signal_set,
    draw_rayleigh,
    make_apsk_initial,
    receive,
)
from smlink.channel import complex_normal


def test_snr_point_noise_var():
    assert SnrPoint(0.0).noise_var == 1.0
    assert SnrPoint(10.0).noise_var == pytest.approx(0.1, rel=1e-15)
    assert SnrPoint(-40.0).noise_var == pytest.approx(1e4, rel=1e-15)


def test_fixed_seed_reproducible():
    h1 = draw_rayleigh(4, rngmod.stream(123))
    h2 = draw_rayleigh(4, rngmod.stream(123))
    assert np.array_equal(h1.gains, h2.gains)


def test_unit_gain_variance():
    h = draw_rayleigh(1_000_000, rngmod.stream(7))
    assert np.mean(np.abs(h.gains) ** 2) == pytest.approx(1.0, abs=0.01)


def test_phase_uniformity_ks():
    h = draw_rayleigh(1_000_000, rngmod.stream(9))
    phases = np.mod(np.angle(h.gains), 2 * np.pi) / (2 * np.pi)
    d = stats.kstest(phases, "uniform").statistic
    crit_1pct = 1.6276 / np.sqrt(phases.size)
    assert d < crit_1pct


def test_noise_variance_per_dimension():
    z = complex_normal(rngmod.stream(11), 1_000_000, var_total=0.5)
    assert np.var(z.real) == pytest.approx(0.25, rel=0.01)
    assert np.var(z.imag) == pytest.approx(0.25, rel=0.01)


def test_noise_var_must_be_positive():
    with pytest.raises(ValueError):
        ChannelRealization(np.ones(2, dtype=complex), 0.0)


class TestReceive:
    def test_identity_channel_noiseless(self, qpsk_set):
        ch = ChannelRealization(np.array([1.0 + 0j]), 1.0)
        for m in range(4):
            assert receive(qpsk_set, m, ch) == qpsk_set.constellation.symbols[m]

    def test_noisy_reproducible(self, initial_16_2):
        ch = ChannelRealization(np.array([0.3 - 0.8j, 1.1 + 0.2j]), 0.1)
        y1 = receive(initial_16_2, 5, ch, rngmod.stream(3))
        y2 = receive(initial_16_2, 5, ch, rngmod.stream(3))
        assert y1 == y2

    def test_noiseless_linear_in_coefficients(self):
        c = make_apsk_initial(4)
        base = build_signal_set(c, PreScaling(np.array([np.exp(0.4j), np.exp(-0.9j)])), 2)
        rot = build_signal_set(
            c, PreScaling(base.pre_scaling.coefficients * np.exp(1.1j)), 2
        )
        ch = ChannelRealization(np.array([0.5 + 0.5j, -0.2 + 0.9j]), 1.0)
        for idx in range(8):
            y0 = receive(base, idx, ch)
            y1 = receive(rot, idx, ch)
            assert y1 == pytest.approx(y0 * np.exp(1.1j), rel=1e-12)

    def test_index_bounds(self, qpsk_set):
        ch = ChannelRealization(np.array([1.0 + 0j]), 1.0)
        with pytest.raises(ValueError):
            receive(qpsk_set, 4, ch)

    def test_dimension_mismatch(self, qpsk_set):
        ch = ChannelRealization(np.ones(2, dtype=complex), 1.0)
        with pytest.raises(ValueError):
            receive(qpsk_set, 0, ch)

    def test_empirical_noise_level(self, qpsk_set):
        nv = 0.2
        ch = ChannelRealization(np.array([1.0 + 0j]), nv)
        gen = rngmod.stream(21)
        noiseless = qpsk_set.constellation.symbols[2]
        zs = np.array([receive(qpsk_set, 2, ch, gen) - noiseless for _ in range(20000)])
        assert np.var(zs.real) == pytest.approx(nv / 2, rel=0.05)
        assert np.var(zs.imag) == pytest.approx(nv / 2, rel=0.05)
