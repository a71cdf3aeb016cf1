import numpy as np
import pytest

import smlink.rng as rngmod
from smlink import draw_rayleigh
from smlink.baselines import SmpConfig, conventional_sm_set, smp_coefficients, smp_sm_set, square_qam


class TestSmpAngles:
    def test_m4_two_antennas(self):
        cfg = SmpConfig("no-feedback", 4, 2)
        assert np.allclose(cfg.theta, [0.0, np.pi / 4], atol=1e-15)

    @pytest.mark.parametrize("m,n_t", [(4, 2), (16, 4), (64, 4)])
    def test_strictly_increasing_within_sector(self, m, n_t):
        theta = SmpConfig("no-feedback", m, n_t).theta
        assert np.all(np.diff(theta) > 0)
        assert theta[0] == 0.0
        assert theta[-1] < 2 * np.pi / m

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            SmpConfig("oracle", 4, 2)


class TestSmpCoefficients:
    def test_perfect_csi_needs_channel(self):
        with pytest.raises(ValueError, match="channel"):
            smp_coefficients(SmpConfig("perfect-csi", 4, 2))

    def test_perfect_csi_cancels_channel_phase(self):
        cfg = SmpConfig("perfect-csi", 16, 4)
        ch = draw_rayleigh(4, rngmod.stream(2))
        alpha = smp_coefficients(cfg, ch).coefficients
        got = np.angle(ch.gains * alpha)
        assert np.allclose(np.mod(got - cfg.theta, 2 * np.pi), 0.0, atol=1e-12) or np.allclose(
            np.minimum(np.mod(got - cfg.theta, 2 * np.pi), 2 * np.pi - np.mod(got - cfg.theta, 2 * np.pi)),
            0.0,
            atol=1e-12,
        )

    def test_zero_phase_channel_equals_no_feedback(self):
        cfg_csi = SmpConfig("perfect-csi", 4, 2)
        cfg_nf = SmpConfig("no-feedback", 4, 2)
        from smlink import ChannelRealization

        ch = ChannelRealization(np.array([0.5 + 0j, 2.0 + 0j]), 1.0)
        a = smp_coefficients(cfg_csi, ch).coefficients
        b = smp_coefficients(cfg_nf).coefficients
        assert np.allclose(a, b, atol=1e-15)

    def test_received_points_follow_magnitude_phase_form(self):
        # noiseless candidate for (k, m) is |h_k| * exp(j theta_k) * s_m
        cfg = SmpConfig("perfect-csi", 16, 2)
        qam = square_qam(16)
        from smlink import PreScaling, build_signal_set

        gen = rngmod.stream(3)
        for _ in range(10):
            ch = draw_rayleigh(2, gen)
            sig = build_signal_set(qam, smp_coefficients(cfg, ch), 2)
            cand = sig.received_candidates(ch.gains)
            want = (np.abs(ch.gains) * np.exp(1j * cfg.theta))[:, None] * qam.symbols[None, :]
            assert np.allclose(cand, want.reshape(-1), atol=1e-12)


class TestSquareQam:
    def test_qpsk_points(self):
        c = square_qam(4)
        want = {(1 + 1j), (1 - 1j), (-1 + 1j), (-1 - 1j)}
        got = {complex(np.round(s * np.sqrt(2), 12)) for s in c.symbols}
        assert got == want

    def test_16qam_unit_power_by_direct_sum(self):
        c = square_qam(16)
        assert abs(sum(abs(s) ** 2 for s in c.symbols) / 16 - 1.0) < 1e-12

    @pytest.mark.parametrize("m", [4, 16, 64])
    def test_gray_neighbors_differ_in_one_bit(self, m):
        c = square_qam(m)
        side = int(np.sqrt(m))
        levels = np.unique(np.round(c.symbols.real, 12))
        assert levels.size == side
        spacing = levels[1] - levels[0]
        for i, s in enumerate(c.symbols):
            for j, t in enumerate(c.symbols):
                if abs(abs(s - t) - spacing) < 1e-9:
                    assert bin(int(c.labels[i]) ^ int(c.labels[j])).count("1") == 1

    def test_unsupported_order(self):
        with pytest.raises(ValueError):
            square_qam(32)


class TestBaselineSets:
    def test_conventional_counts_and_unit_alpha(self):
        ss = conventional_sm_set(4, 2)
        assert ss.n_vectors == 8
        assert np.all(ss.pre_scaling.coefficients == 1.0)
        mags = np.abs(ss.vectors[ss.vectors != 0])
        assert np.allclose(mags, 1.0, atol=1e-12)

    def test_conventional_16qam_power(self):
        ss = conventional_sm_set(16, 4)
        assert ss.n_vectors == 64
        assert abs(np.sum(np.abs(ss.vectors) ** 2) / 64 - 1.0) < 1e-12

    def test_smp_static_set_uses_sector_phases(self):
        ss = smp_sm_set(4, 2)
        assert np.allclose(np.angle(ss.pre_scaling.coefficients), [0.0, np.pi / 4], atol=1e-15)
