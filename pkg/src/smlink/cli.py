"""Command-line interface.

Subcommands: ``capacity`` (mutual-information sweeps), ``optimize`` (joint
constellation / pre-scaling design), ``baseline`` (emit reference designs),
``bler`` (coded BLER sweeps), and ``compare`` (waterfall thresholds and
gains). Report paths write delimited files plus rendered figures into the
output directory. The SMLINK_WORKERS environment variable sets the logical
Monte-Carlo worker count recorded in manifests.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .capacity import estimate_bicm_ami
from .channel import SnrPoint
from .constellation import load_design, make_apsk_initial, make_initial_prescaling, save_design
from .constellation import build_signal_set
from .fec import DEFAULT_BLOCK_LENGTH, MCS_IDS, build_fec_config, mcs_entry
from .harness import (
    SchemeSpec,
    StopRule,
    build_manifest,
    build_scheme,
    export_results,
    simulate_bler,
    write_manifest,
    write_rows,
)
from .optimizer import (
    OptimizerConfig,
    PsoHyperParams,
    SearchConfig,
    find_waterfall_snr,
    optimize,
)


def _parse_snrs(spec: str) -> list[float]:
    """Comma list ("0,5,10") or start:stop:step range ("0:20:2", stop inclusive)."""
    if ":" in spec:
        parts = [float(p) for p in spec.split(":")]
        if len(parts) != 3:
            raise click.BadParameter("range form is start:stop:step")
        start, stop, step = parts
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return [float(p) for p in spec.split(",")]


def _scheme_option(scheme: str, m_order: int, n_t: int, design) -> SchemeSpec:
    return build_scheme(scheme, m_order, n_t, design_path=design)


@click.group()
@click.version_option(version=__version__, prog_name="smlink")
def main():
    """Spatial-modulation constellation and pre-scaling design toolkit."""


@main.command()
@click.option("--design", type=click.Path(exists=True, dir_okay=False), help="Design file to evaluate.")
@click.option("--scheme", type=str, default=None, help="Alternatively: sm or smp-no-feedback.")
@click.option("--m", "m_order", type=int, default=None, help="Constellation order for --scheme.")
@click.option("--nt", "n_t", type=int, default=None, help="Antenna count for --scheme.")
@click.option("--snrs", default="0:20:2", show_default=True, help="SNR list or start:stop:step [dB].")
@click.option("--samples", default=200_000, show_default=True, help="Monte-Carlo samples per point.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write capacity.csv, ami_curve.png, manifest.json here (default: CSV to stdout).")
def capacity(design, scheme, m_order, n_t, snrs, samples, seed, out_dir):
    """Estimate BICM mutual information over Rayleigh fading at the given SNRs."""
    if design is not None:
        sig_set = load_design(design)
        label = Path(design).stem
    elif scheme is not None:
        if m_order is None or n_t is None:
            raise click.UsageError("--scheme needs --m and --nt")
        sig_set = _scheme_option(scheme, m_order, n_t, None).sig_set
        label = scheme
    else:
        raise click.UsageError("provide --design or --scheme")

    points = []
    for snr_db in _parse_snrs(snrs):
        est = estimate_bicm_ami(sig_set, SnrPoint(snr_db), samples, seed)
        points.append(est)

    header = ["snr_db", "ami", "std_error", "n_samples"]
    records = [[e.snr_db, f"{e.value:.6f}", f"{e.std_error:.6f}", e.n_samples] for e in points]
    if out_dir is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(records)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "capacity.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(records)
    from .plotting import plot_ami_curve

    plot_ami_curve(points, out / "ami_curve.png", title=f"{label}: mutual information")
    config = {
        "command": "capacity", "design": design, "scheme": scheme, "m": sig_set.order,
        "n_t": sig_set.n_t, "snrs": snrs, "samples": samples, "seed": seed,
    }
    inputs = {"design": design} if design else None
    write_manifest(build_manifest(config, inputs), out / "manifest.json")
    click.echo(f"wrote {out / 'capacity.csv'}")


@main.command("optimize")
@click.option("--m", "m_order", type=click.Choice(["4", "16", "64"]), required=True)
@click.option("--nt", "n_t", type=int, required=True)
@click.option("--mcs", type=int, default=None, help=f"MCS id from {MCS_IDS}.")
@click.option("--rate", "rate_sm", type=float, default=None,
              help="Explicit code rate over the SM bits (alternative to --mcs).")
@click.option("--mode", type=click.Choice(["capacity-anchor", "coded"]), default="capacity-anchor",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--particles", default=40, show_default=True)
@click.option("--iterations", default=150, show_default=True, help="Swarm iterations per round.")
@click.option("--samples", default=200_000, show_default=True, help="MC samples per objective evaluation.")
@click.option("--threshold-samples", default=100_000, show_default=True)
@click.option("--xi", default=0.1, show_default=True, help="Stop once the threshold improves less than this [dB].")
@click.option("--outer-cap", default=10, show_default=True)
@click.option("--block-length", default=DEFAULT_BLOCK_LENGTH, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def optimize_cmd(m_order, n_t, mcs, rate_sm, mode, seed, particles, iterations, samples,
                 threshold_samples, xi, outer_cap, block_length, out_dir):
    """Jointly optimize the constellation and pre-scaling for one operating point."""
    m_order = int(m_order)
    if (mcs is None) == (rate_sm is None):
        raise click.UsageError("provide exactly one of --mcs or --rate")
    if mcs is not None:
        entry = mcs_entry(mcs, n_t)
        if entry.m_order != m_order:
            raise click.UsageError(f"MCS {mcs} uses order {entry.m_order}, not {m_order}")
        rate_sm = entry.rate_sm
    target_bits = rate_sm * np.log2(m_order * n_t)

    initial = build_signal_set(
        make_apsk_initial(m_order), make_initial_prescaling(m_order, n_t), n_t
    )
    fec_cfg = build_fec_config(rate_sm, n=block_length) if mode == "coded" else None
    config = OptimizerConfig(
        mode=mode,
        hyper=PsoHyperParams(n_particles=particles, n_iterations=iterations),
        n_samples_opt=samples,
        n_samples_threshold=threshold_samples,
        xi_db=xi,
        outer_cap=outer_cap,
    )
    best_set, state = optimize(initial, target_bits, config, seed=seed, fec_config=fec_cfg)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_design(best_set, out / "design.txt")
    with open(out / "trace.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outer_iteration", "best_ami", "snr_db"])
        finals = {o: v for o, _, v in state.ami_history}
        writer.writerow([0, "", state.snr_trace[0]])
        for o in range(1, state.outer_iterations + 1):
            writer.writerow([o, f"{finals[o]:.6f}", state.snr_trace[o]])
    with open(out / "trace_inner.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outer_iteration", "inner_iteration", "best_ami"])
        for o, i, v in state.ami_history:
            writer.writerow([o, i, f"{v:.6f}"])
    run_config = {
        "command": "optimize", "m": m_order, "n_t": n_t, "mcs": mcs, "rate_sm": rate_sm,
        "mode": mode, "seed": seed, "particles": particles, "iterations": iterations,
        "samples": samples, "threshold_samples": threshold_samples, "xi_db": xi,
        "outer_cap": outer_cap, "block_length": block_length if mode == "coded" else None,
        "stop_reason": state.stop_reason, "snr_trace": state.snr_trace,
    }
    write_manifest(build_manifest(run_config), out / "manifest.json")
    from .plotting import plot_constellation, plot_optimization_trace

    plot_constellation(best_set, out / "constellation.png",
                       title=f"optimized design M={m_order} Nt={n_t}")
    plot_optimization_trace(state, out / "trace.png")
    click.echo(
        f"threshold trace [dB]: {' -> '.join(f'{s:.1f}' for s in state.snr_trace)} "
        f"({state.stop_reason}); design written to {out / 'design.txt'}"
    )


@main.command()
@click.option("--scheme", type=click.Choice(["sm", "smp-no-feedback"]), required=True)
@click.option("--m", "m_order", type=int, required=True)
@click.option("--nt", "n_t", type=int, required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--plot/--no-plot", default=False, show_default=True)
def baseline(scheme, m_order, n_t, out_path, plot):
    """Emit a reference design file (the CSI-dependent scheme has no static file)."""
    spec = _scheme_option(scheme, m_order, n_t, None)
    save_design(spec.sig_set, out_path)
    if plot:
        from .plotting import plot_constellation

        plot_constellation(spec.sig_set, str(out_path) + ".png", title=f"{scheme} M={m_order} Nt={n_t}")
    click.echo(f"wrote {out_path}")


def _common_bler_options(fn):
    for deco in (
        click.option("--mcs", type=int, required=True),
        click.option("--nt", "n_t", type=int, required=True),
        click.option("--design", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Design file backing the 'proposed' scheme."),
        click.option("--seed", default=0, show_default=True),
        click.option("--errors", default=100, show_default=True, help="Stop after this many block errors."),
        click.option("--max-blocks", default=100_000, show_default=True),
        click.option("--block-length", default=DEFAULT_BLOCK_LENGTH, show_default=True),
        click.option("--out-dir", type=click.Path(file_okay=False), required=True),
    ):
        fn = deco(fn)
    return fn


@main.command()
@_common_bler_options
@click.option("--scheme", "schemes", multiple=True, default=("sm",), show_default=True,
              help="Repeatable: sm, smp-no-feedback, smp-perfect-csi, proposed.")
@click.option("--snrs", required=True, help="SNR list or start:stop:step [dB].")
def bler(mcs, n_t, design, seed, errors, max_blocks, block_length, out_dir, schemes, snrs):
    """Coded BLER sweep for one MCS over the given SNR grid."""
    entry = mcs_entry(mcs, n_t)
    fec_cfg = build_fec_config(entry.rate_sm, n=block_length)
    stop = StopRule(errors, max_blocks)
    rows = []
    for name in schemes:
        spec = _scheme_option(name, entry.m_order, n_t, design)
        for snr_db in _parse_snrs(snrs):
            row = simulate_bler(spec, fec_cfg, SnrPoint(snr_db), stop, seed, mcs=mcs)
            rows.append(row)
            click.echo(f"{name} @ {snr_db:.1f} dB: BLER {row.bler:.4g} ({row.blocks} blocks)")
    config = {
        "command": "bler", "mcs": mcs, "n_t": n_t, "schemes": list(schemes), "snrs": snrs,
        "seed": seed, "stop_rule": {"target_errors": errors, "max_blocks": max_blocks},
        "fec": {"codec": fec_cfg.codec, "k": fec_cfg.k, "n": fec_cfg.n},
        "design": design, "channel": "rayleigh-block",
    }
    paths = export_results(rows, out_dir, config, {"design": design} if design else None)
    click.echo(f"wrote {paths['results']}")


@main.command()
@_common_bler_options
@click.option("--schemes", default="sm,smp-no-feedback,smp-perfect-csi", show_default=True,
              help="Comma list of schemes to rank.")
@click.option("--target", default=1e-2, show_default=True, help="BLER level defining thresholds.")
@click.option("--snr-min", default=-10.0, show_default=True)
@click.option("--snr-max", default=45.0, show_default=True)
def compare(mcs, n_t, design, seed, errors, max_blocks, block_length, out_dir, schemes, target,
            snr_min, snr_max):
    """Waterfall thresholds at the target BLER and gains versus plain SM."""
    entry = mcs_entry(mcs, n_t)
    fec_cfg = build_fec_config(entry.rate_sm, n=block_length)
    stop = StopRule(errors, max_blocks)
    search = SearchConfig(snr_min_db=snr_min, snr_max_db=snr_max)
    names = [s.strip() for s in schemes.split(",") if s.strip()]
    rows = []
    thresholds = {}
    hint = None
    for name in names:
        spec = _scheme_option(name, entry.m_order, n_t, design)
        collected = []
        thresholds[name] = find_waterfall_snr(
            spec, fec_cfg, target, search, seed=seed, stop_rule=stop, mcs=mcs,
            hint_db=hint, rows_out=collected,
        )
        hint = thresholds[name]
        rows.extend(collected)
        click.echo(f"{name}: threshold {thresholds[name]:.1f} dB")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref = thresholds.get("sm")
    with open(out / "waterfalls.csv", "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "threshold_snr_db", "gain_db"])
        for name in names:
            gain = "" if ref is None else f"{ref - thresholds[name]:.1f}"
            writer.writerow([name, f"{thresholds[name]:.1f}", gain])
    config = {
        "command": "compare", "mcs": mcs, "n_t": n_t, "schemes": names, "target": target,
        "seed": seed, "stop_rule": {"target_errors": errors, "max_blocks": max_blocks},
        "fec": {"codec": fec_cfg.codec, "k": fec_cfg.k, "n": fec_cfg.n},
        "search": {"snr_min": snr_min, "snr_max": snr_max}, "design": design,
        "channel": "rayleigh-block",
    }
    export_results(rows, out_dir, config, {"design": design} if design else None)
    click.echo(f"wrote {out / 'waterfalls.csv'}")


if __name__ == "__main__":
    main()
