import numpy as np
import pytest

from _oracles import bicm_ami_quadrature
from smlink import (
    ChannelRealization,
    PreScaling,
    SnrPoint,
    build_signal_set,
    estimate_bicm_ami,
    estimate_bicm_ami_fixed_channel,
    make_apsk_initial,
    make_initial_prescaling,
    paired_ami_difference,
)
from smlink.baselines import square_qam

UNIT_CHANNEL = ChannelRealization(np.array([1.0 + 0j]), 1.0)


def single_antenna_set(constellation):
    return build_signal_set(constellation, PreScaling([1.0]), 1)


def test_matches_quadrature_oracle_qpsk():
    sig = single_antenna_set(make_apsk_initial(4))
    snr = SnrPoint(5.0)
    oracle = bicm_ami_quadrature(
        sig.constellation.symbols, sig.constellation.labels, snr.noise_var
    )
    est = estimate_bicm_ami_fixed_channel(sig, UNIT_CHANNEL, snr, 200_000, seed=2)
    assert abs(est.value - oracle) < 3 * est.std_error + 1e-6


def test_matches_quadrature_oracle_16qam():
    sig = single_antenna_set(square_qam(16))
    snr = SnrPoint(10.0)
    oracle = bicm_ami_quadrature(
        sig.constellation.symbols, sig.constellation.labels, snr.noise_var
    )
    est = estimate_bicm_ami_fixed_channel(sig, UNIT_CHANNEL, snr, 200_000, seed=3)
    assert abs(est.value - oracle) < 3 * est.std_error + 1e-6


def test_noise_dominated_limit(initial_16_2):
    est = estimate_bicm_ami(initial_16_2, SnrPoint(-40.0), 50_000, seed=1)
    assert est.value <= 3 * est.std_error + 1e-9


def test_saturation_limit(initial_16_2):
    est = estimate_bicm_ami(initial_16_2, SnrPoint(60.0), 50_000, seed=1)
    assert est.value >= est.bits_per_use - 3 * est.std_error - 1e-9


def test_zero_channel_gives_zero(initial_16_2):
    dead = ChannelRealization(np.zeros(2, dtype=complex) + 0j, 1.0)
    est = estimate_bicm_ami_fixed_channel(initial_16_2, dead, SnrPoint(10.0), 20_000, seed=4)
    assert est.value <= 3 * est.std_error + 1e-9


def test_same_seed_same_estimate(initial_16_4):
    a = estimate_bicm_ami(initial_16_4, SnrPoint(8.0), 30_000, seed=11)
    b = estimate_bicm_ami(initial_16_4, SnrPoint(8.0), 30_000, seed=11)
    assert a.value == b.value and a.std_error == b.std_error


def test_zero_samples_rejected(initial_16_2):
    with pytest.raises(ValueError):
        estimate_bicm_ami(initial_16_2, SnrPoint(0.0), 0, seed=0)


def test_below_saturation_at_finite_snr(initial_16_2):
    est = estimate_bicm_ami(initial_16_2, SnrPoint(15.0), 100_000, seed=5)
    assert est.value < est.bits_per_use - est.std_error


def test_per_bit_terms_in_expected_range(initial_16_4):
    est = estimate_bicm_ami(initial_16_4, SnrPoint(6.0), 50_000, seed=6)
    assert est.bit_terms.shape == (est.bits_per_use,)
    lo = -3 * est.bit_term_ses
    hi = 1 + 3 * est.bit_term_ses
    assert np.all(est.bit_terms >= lo) and np.all(est.bit_terms <= hi)
    # per-bit decomposition reassembles the total estimate
    assert est.value == pytest.approx(est.bits_per_use - est.bit_terms.sum(), abs=1e-9)


def test_std_error_scales_with_samples(initial_16_2):
    snr = SnrPoint(5.0)
    ratios = []
    for seed in range(5):
        se_n = estimate_bicm_ami(initial_16_2, snr, 20_000, seed=seed).std_error
        se_2n = estimate_bicm_ami(initial_16_2, snr, 40_000, seed=seed + 100).std_error
        ratios.append(se_2n / se_n)
    target = 1 / np.sqrt(2)
    assert target * 0.8 < np.mean(ratios) < target * 1.2


def test_antenna_relabeling_within_mc_error():
    c = make_apsk_initial(16)
    ps = make_initial_prescaling(16, 2)
    fwd = build_signal_set(c, ps, 2)
    rev = build_signal_set(c, PreScaling(ps.coefficients[::-1]), 2)
    snr = SnrPoint(10.0)
    a = estimate_bicm_ami(fwd, snr, 100_000, seed=13)
    b = estimate_bicm_ami(rev, snr, 100_000, seed=13)
    combined = np.hypot(a.std_error, b.std_error)
    assert abs(a.value - b.value) < 5 * combined


def test_worker_split_reproducible_and_consistent(initial_16_2):
    snr = SnrPoint(5.0)
    one = estimate_bicm_ami(initial_16_2, snr, 60_000, seed=17, n_workers=1)
    three = estimate_bicm_ami(initial_16_2, snr, 60_000, seed=17, n_workers=3)
    three_again = estimate_bicm_ami(initial_16_2, snr, 60_000, seed=17, n_workers=3)
    assert three.value == three_again.value
    assert three.n_workers == 3
    combined = np.hypot(one.std_error, three.std_error)
    assert abs(one.value - three.value) < 5 * combined


def test_paired_difference_of_identical_sets_is_zero(initial_16_2):
    diff, se = paired_ami_difference(initial_16_2, initial_16_2, SnrPoint(8.0), 20_000, seed=3)
    assert diff == 0.0 and se == 0.0


def test_workers_env_override(initial_16_2, monkeypatch):
    monkeypatch.setenv("SMLINK_WORKERS", "2")
    est = estimate_bicm_ami(initial_16_2, SnrPoint(0.0), 10_000, seed=0)
    assert est.n_workers == 2
