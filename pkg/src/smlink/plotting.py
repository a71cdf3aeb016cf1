"""Figure rendering for reports: constellations, BLER curves, traces.

All functions draw to files through the Agg backend; nothing opens a
display. Figures are written next to the delimited outputs they illustrate.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*"]


def plot_constellation(sig_set, path, title=None):
    """Scatter of the effective per-antenna symbols alpha_k * s_m."""
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    symbols = sig_set.constellation.symbols
    for k, alpha in enumerate(sig_set.pre_scaling.coefficients):
        pts = alpha * symbols
        ax.scatter(
            pts.real,
            pts.imag,
            marker=_MARKERS[k % len(_MARKERS)],
            s=28,
            alpha=0.85,
            label=f"antenna {k + 1}",
        )
    lim = 1.1 * float(np.abs(symbols).max()) * float(np.abs(sig_set.pre_scaling.coefficients).max())
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.axhline(0, color="0.8", lw=0.6)
    ax.axvline(0, color="0.8", lw=0.6)
    ax.set_xlabel("in-phase")
    ax.set_ylabel("quadrature")
    ax.legend(fontsize=8, loc="upper right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bler_curves(rows, path, title=None, target=None):
    """Semilog BLER vs SNR, one line per scheme, Wilson bars where informative."""
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    schemes = sorted({r.scheme for r in rows})
    for scheme in schemes:
        pts = sorted((r for r in rows if r.scheme == scheme), key=lambda r: r.snr_db)
        snr = [r.snr_db for r in pts]
        bler = [max(r.bler, 1e-7) for r in pts]
        lo = [max(r.bler - r.ci_low, 0.0) for r in pts]
        hi = [max(r.ci_high - r.bler, 0.0) for r in pts]
        ax.errorbar(snr, bler, yerr=[lo, hi], marker="o", ms=3.5, capsize=2, label=scheme)
    if target is not None:
        ax.axhline(target, color="k", ls=":", lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("BLER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ami_curve(points, path, title=None, targets=None):
    """Mutual information vs SNR with standard-error bars.

    points: iterable of estimates carrying snr_db, value, std_error.
    targets: optional horizontal reference lines (rate targets).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.4))
    pts = sorted(points, key=lambda e: e.snr_db)
    snr = [e.snr_db for e in pts]
    val = [e.value for e in pts]
    err = [3 * e.std_error for e in pts]
    ax.errorbar(snr, val, yerr=err, marker="o", ms=3.5, capsize=2)
    for t in targets or []:
        ax.axhline(t, color="k", ls=":", lw=0.8)
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("mutual information [bits/use]")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_optimization_trace(state, path, title=None):
    """Two panels: swarm best per inner iteration, threshold per outer iteration."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    outers = sorted({o for o, _, _ in state.ami_history})
    for o in outers:
        inner = [(i, v) for oo, i, v in state.ami_history if oo == o]
        ax1.plot([i for i, _ in inner], [v for _, v in inner], label=f"round {o}")
    ax1.set_xlabel("swarm iteration")
    ax1.set_ylabel("best mutual information [bits/use]")
    ax1.grid(True, alpha=0.3)
    if len(outers) > 1:
        ax1.legend(fontsize=8)
    ax2.plot(range(len(state.snr_trace)), state.snr_trace, marker="o")
    ax2.set_xlabel("outer iteration")
    ax2.set_ylabel("threshold SNR [dB]")
    ax2.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
