"""End-to-end coded BLER simulation, scheme comparison, and result export.

The simulated chain per block: draw one Rayleigh realization (block fading),
encode, interleave, map bits onto transmit vectors, add noise, max-log
demap, deinterleave, decode, and count a block error if any information bit
differs. Blocks are processed in batches; with a fixed seed the draw order
(channel, info bits, noise) is identical regardless of scheme, so schemes
evaluated under the same seed see the same channels and noise.

Exported results are delimited text plus rendered figures: ``results.csv``
(one row per measurement), ``plot_data.csv`` (wide-form BLER vs SNR),
``manifest.json``, and a ``bler_curves.png`` alongside.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .baselines import SmpConfig, conventional_sm_set, smp_sm_set
from .capacity import default_workers
from .channel import SnrPoint, complex_normal
from .constellation import SmSignalSet, load_design
from .detection import _llrs_from_d2
from .fec import FecConfig, build_fec_config, decode, encode, interleave, deinterleave, mcs_entry

_WILSON_Z = 1.959963984540054  # two-sided 95%
_DEMAP_BUDGET = 1 << 23  # distance-matrix entries per demap chunk


@dataclass(frozen=True)
class StopRule:
    """Stop a BLER measurement at target_errors block errors or max_blocks."""

    target_errors: int = 100
    max_blocks: int = 100_000

    def __post_init__(self):
        if self.target_errors < 1 or self.max_blocks < 1:
            raise ValueError("stop rule bounds must be positive")


@dataclass(frozen=True)
class BlerRow:
    """One measured BLER point with its Wilson 95% interval."""

    scheme: str
    mcs: int
    n_t: int
    snr_db: float
    blocks: int
    block_errors: int
    bler: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if not (0.0 <= self.ci_low <= self.bler <= self.ci_high <= 1.0):
            raise ValueError("confidence interval must bracket the estimate inside [0, 1]")


CSV_COLUMNS = ["scheme", "mcs", "n_t", "snr_db", "blocks", "block_errors", "bler", "ci_low", "ci_high"]


def wilson_interval(errors: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # Degenerate counts can round the bound a ulp past the point estimate.
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class SchemeSpec:
    """A named transmit scheme: its signal set plus optional per-block CSI phasing."""

    name: str
    sig_set: SmSignalSet
    csi_prescaling: SmpConfig | None = None


def build_scheme(name: str, m_order: int, n_t: int, design_path=None) -> SchemeSpec:
    """Construct one of the standard schemes by name.

    sm: square QAM, unit coefficients. smp-no-feedback: square QAM with the
    static phase offsets. smp-perfect-csi: same, plus per-block channel phase
    cancellation. proposed: a design file produced by the optimizer.
    """
    if name == "sm":
        return SchemeSpec(name, conventional_sm_set(m_order, n_t))
    if name == "smp-no-feedback":
        return SchemeSpec(name, smp_sm_set(m_order, n_t))
    if name == "smp-perfect-csi":
        return SchemeSpec(
            name, conventional_sm_set(m_order, n_t), SmpConfig("perfect-csi", m_order, n_t)
        )
    if name == "proposed":
        if design_path is None:
            raise ValueError("scheme 'proposed' needs a design file")
        sig_set = load_design(design_path)
        if sig_set.order != m_order or sig_set.n_t != n_t:
            raise ValueError(
                f"design file is ({sig_set.order}, {sig_set.n_t}), expected ({m_order}, {n_t})"
            )
        return SchemeSpec(name, sig_set)
    raise ValueError(f"unknown scheme {name!r}")


def _effective_gains(h: np.ndarray, scheme: SchemeSpec) -> np.ndarray:
    """(B, N_t) per-block products h_k * alpha_k, honoring per-block CSI phasing."""
    if scheme.csi_prescaling is None:
        return h * scheme.sig_set.pre_scaling.coefficients
    theta = scheme.csi_prescaling.theta
    return np.abs(h) * np.exp(1j * theta)[None, :]


def _map_words(bits: np.ndarray, bits_per_use: int) -> np.ndarray:
    """(B, S*nb) bits -> (B, S) label words, first bit most significant."""
    b, total = bits.shape
    s = total // bits_per_use
    groups = bits.reshape(b, s, bits_per_use)
    powers = 1 << np.arange(bits_per_use - 1, -1, -1)
    return groups @ powers


def simulate_bler(
    scheme: SchemeSpec | SmSignalSet,
    fec_config: FecConfig,
    snr: SnrPoint,
    stop_rule: StopRule = StopRule(),
    seed: int = 0,
    channel_mode: str = "rayleigh",
    mcs: int = -1,
    batch: int = 512,
) -> BlerRow:
    """Measure coded BLER for one scheme at one SNR point.

    channel_mode "rayleigh" draws one realization per block; "awgn" pins all
    gains to one (useful for oracle checks against closed forms).
    """
    if isinstance(scheme, SmSignalSet):
        scheme = SchemeSpec("ad-hoc", scheme)
    sig_set = scheme.sig_set
    nb = sig_set.bits_per_use
    n_pad = fec_config.padded_length(nb)
    s_per_block = n_pad // nb
    n_t = sig_set.n_t
    nv = snr.noise_var
    idx_of_word = sig_set.index_of_word()
    masks = sig_set.bit_masks()
    symbols = sig_set.constellation.symbols

    # The per-eval stream is keyed on the SNR grid decile so repeated
    # evaluations of the same point (any scheme) share their draws.
    gen = rngmod.stream(seed, rngmod.DOMAIN_BLER, int(round(snr.snr_db * 10)))

    blocks = errors = 0
    while errors < stop_rule.target_errors and blocks < stop_rule.max_blocks:
        b = min(batch, stop_rule.max_blocks - blocks)
        if channel_mode == "rayleigh":
            h = complex_normal(gen, (b, n_t))
        elif channel_mode == "awgn":
            h = np.ones((b, n_t), dtype=np.complex128)
        else:
            raise ValueError(f"unknown channel mode {channel_mode!r}")
        info = gen.integers(0, 2, size=(b, fec_config.k), dtype=np.uint8)
        noise = complex_normal(gen, (b, s_per_block), nv)

        coded = encode(info, fec_config)
        tx_bits = interleave(coded, fec_config.interleaver_seed)
        if n_pad > fec_config.n:
            pad = np.zeros((b, n_pad - fec_config.n), dtype=np.uint8)
            tx_bits = np.concatenate([tx_bits, pad], axis=1)
        words = _map_words(tx_bits, nb)
        tx_idx = idx_of_word[words]

        gains = _effective_gains(h, scheme)
        cand = (gains[:, :, None] * symbols[None, None, :]).reshape(b, -1)
        y = np.take_along_axis(cand, tx_idx, axis=1) + noise

        llrs = np.empty((b, s_per_block, nb), dtype=np.float64)
        rows = max(1, _DEMAP_BUDGET // (s_per_block * cand.shape[1]))
        for lo in range(0, b, rows):
            hi = min(lo + rows, b)
            diff = y[lo:hi, :, None] - cand[lo:hi, None, :]
            d2 = diff.real**2 + diff.imag**2
            llrs[lo:hi] = _llrs_from_d2(d2, masks, nv)

        rx_llrs = llrs.reshape(b, -1)[:, : fec_config.n]
        rx_llrs = deinterleave(rx_llrs, fec_config.interleaver_seed)
        decoded, _ = decode(rx_llrs, fec_config)
        errors += int(np.any(decoded != info, axis=1).sum())
        blocks += b

    bler = errors / blocks
    lo, hi = wilson_interval(errors, blocks)
    return BlerRow(scheme.name, mcs, n_t, snr.snr_db, blocks, errors, bler, lo, hi)


def sweep_bler(
    scheme: SchemeSpec,
    fec_config: FecConfig,
    snrs_db,
    stop_rule: StopRule = StopRule(),
    seed: int = 0,
    mcs: int = -1,
    channel_mode: str = "rayleigh",
) -> list[BlerRow]:
    return [
        simulate_bler(scheme, fec_config, SnrPoint(s), stop_rule, seed, channel_mode, mcs)
        for s in snrs_db
    ]


@dataclass(frozen=True)
class WaterfallEntry:
    scheme: str
    snr_db: float
    gain_db: float | None  # vs the plain-SM reference, None if no reference ran


def compare_schemes(
    mcs: int,
    n_t: int,
    schemes: list[SchemeSpec],
    bler_target: float = 1e-2,
    seed: int = 0,
    stop_rule: StopRule = StopRule(),
    search_cfg=None,
    fec_config: FecConfig | None = None,
) -> list[WaterfallEntry]:
    """Waterfall SNR of each scheme at the target BLER, plus gains vs plain SM.

    Every scheme runs under the same seed (hence the same channel and noise
    draws), so threshold differences come from the schemes alone.
    """
    from .optimizer import SearchConfig, find_waterfall_snr

    entry = mcs_entry(mcs, n_t)
    if fec_config is None:
        fec_config = build_fec_config(entry.rate_sm)
    cfg = SearchConfig() if search_cfg is None else search_cfg
    thresholds = {}
    hint = None
    for scheme in schemes:
        thresholds[scheme.name] = find_waterfall_snr(
            scheme, fec_config, bler_target, cfg,
            seed=seed, stop_rule=stop_rule, mcs=mcs, hint_db=hint,
        )
        hint = thresholds[scheme.name]
    ref = thresholds.get("sm")
    return [
        WaterfallEntry(name, snr, None if ref is None else ref - snr)
        for name, snr in thresholds.items()
    ]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def build_manifest(config: dict, input_files: dict[str, str] | None = None) -> dict:
    """Everything needed to reproduce a run: config, its hash, inputs, environment."""
    inputs = {}
    for name, path in (input_files or {}).items():
        inputs[name] = {"path": str(path), "sha256": _sha256_file(path)}
    from . import __version__

    return {
        "tool": "smlink",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "workers": default_workers(),
        "config": config,
        "config_hash": config_hash(config),
        "inputs": inputs,
    }


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def write_rows(rows: list[BlerRow], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([getattr(r, c) for c in CSV_COLUMNS])


def read_rows(path) -> list[BlerRow]:
    rows = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                BlerRow(
                    rec["scheme"],
                    int(rec["mcs"]),
                    int(rec["n_t"]),
                    float(rec["snr_db"]),
                    int(rec["blocks"]),
                    int(rec["block_errors"]),
                    float(rec["bler"]),
                    float(rec["ci_low"]),
                    float(rec["ci_high"]),
                )
            )
    return rows


def write_plot_data(rows: list[BlerRow], path) -> None:
    """Wide-form companion file: one SNR column plus one BLER column per scheme."""
    schemes = sorted({r.scheme for r in rows})
    snrs = sorted({r.snr_db for r in rows})
    table = {s: {r.snr_db: r.bler for r in rows if r.scheme == s} for s in schemes}
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db"] + schemes)
        for snr in snrs:
            writer.writerow([snr] + [table[s].get(snr, "") for s in schemes])


def export_results(rows: list[BlerRow], out_dir, config: dict, input_files=None) -> dict:
    """Write CSV, plot data, manifest, and the rendered BLER figure.

    Returns a dict of the created paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out / "results.csv",
        "plot_data": out / "plot_data.csv",
        "manifest": out / "manifest.json",
        "figure": out / "bler_curves.png",
    }
    write_rows(rows, paths["results"])
    write_plot_data(rows, paths["plot_data"])
    write_manifest(build_manifest(config, input_files), paths["manifest"])
    from .plotting import plot_bler_curves

    plot_bler_curves(rows, paths["figure"])
    return {k: str(v) for k, v in paths.items()}
