"""Independent reference implementations used only by the test suite.

Everything here is deliberately written as plain, direct translations of the
defining formulas (loops, quadrature, closed forms), separate from the
package's vectorized production paths.
"""

import math

import numpy as np


def bicm_ami_quadrature(symbols, labels, noise_var, degree=48):
    """BICM mutual information of a scalar AWGN channel by Gauss-Hermite quadrature.

    symbols: complex constellation points, equiprobable.
    labels: bit word of each symbol.
    noise_var: total complex noise variance (per-dimension variance is half).
    Returns bits per channel use.
    """
    symbols = np.asarray(symbols, dtype=complex)
    labels = np.asarray(labels, dtype=int)
    m = symbols.size
    nbits = m.bit_length() - 1
    nodes, weights = np.polynomial.hermite.hermgauss(degree)
    # E[f(z)] for complex z with E|z|^2 = noise_var, via z = sqrt(noise_var) * (u + j v)
    scale = math.sqrt(noise_var)

    total_loss = 0.0
    for i in range(nbits):
        bit_of = (labels >> (nbits - 1 - i)) & 1
        acc = 0.0
        for s_idx in range(m):
            b = bit_of[s_idx]
            sub = symbols[bit_of == b]
            for a, wa in zip(nodes, weights):
                y_row = symbols[s_idx] + scale * (a + 1j * nodes)
                d_all = np.abs(y_row[:, None] - symbols[None, :]) ** 2
                num = np.exp(-d_all / noise_var).sum(axis=1)
                d_sub = np.abs(y_row[:, None] - sub[None, :]) ** 2
                den = np.exp(-d_sub / noise_var).sum(axis=1)
                acc += wa * float(np.dot(weights, np.log2(num / den)))
        total_loss += acc / (m * math.pi)
    return nbits - total_loss


def brute_force_ml(y, candidates):
    """Plain-loop nearest-candidate search with lowest-index tie break."""
    best = 0
    best_d = abs(y - candidates[0])
    for j in range(1, len(candidates)):
        d = abs(y - candidates[j])
        if d < best_d:
            best, best_d = j, d
    return best


def qfunc(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def qfunc_inv(p):
    from scipy.stats import norm

    return float(norm.isf(p))


def uncoded_qpsk_block_snr_db(n_bits, bler_target):
    """SNR (dB) at which an uncoded Gray-QPSK block of n_bits hits bler_target.

    Block error = any bit error; per-bit error Q(1/sqrt(noise_var)) under the
    unit-power, total-noise-variance convention.
    """
    p_bit = 1.0 - (1.0 - bler_target) ** (1.0 / n_bits)
    x = qfunc_inv(p_bit)
    noise_var = 1.0 / (x * x)
    return -10.0 * math.log10(noise_var)


def uncoded_qpsk_bler(n_bits, snr_db):
    noise_var = 10.0 ** (-snr_db / 10.0)
    p_bit = qfunc(1.0 / math.sqrt(noise_var))
    return 1.0 - (1.0 - p_bit) ** n_bits
