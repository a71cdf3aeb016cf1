"""Joint constellation / pre-scaling optimization.

A particle position is the flat real vector

    [free-point I/Q pairs (M/4 of them) | pre-scaling I/Q pairs (N_t of them)]

decoded by expanding the free points through the four-fold symmetry and
normalizing both parts, so every decoded position is a feasible signal set
by construction (projection, never rejection).

The inner loop is standard inertia-weight particle-swarm search maximizing
the Monte-Carlo mutual information at a fixed anchor SNR; one shared sample
stream per inner run makes the objective deterministic, so particle
rankings are exact and the global best is monotone. The outer loop
re-anchors: measure the operating SNR threshold of the incumbent design,
optimize at that anchor, re-measure, and stop once the threshold stops
improving by more than xi (including the case where it got worse).

Thresholds come either from coded BLER simulation (waterfall search) or, as
a fast documented surrogate, from the SNR at which the estimated mutual
information reaches the target information rate ("capacity-anchor" mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .capacity import estimate_bicm_ami
from .channel import SnrPoint
from .constellation import (
    PreScaling,
    QuadrantParams,
    SmSignalSet,
    build_signal_set,
    expand_quadrant,
    extract_quadrant,
)
from .fec import FecConfig
from .harness import SchemeSpec, StopRule, simulate_bler


class SearchRangeError(RuntimeError):
    """The threshold search exhausted its SNR range without success."""


@dataclass(frozen=True)
class PsoHyperParams:
    """Swarm settings; the defaults are standard constricted-PSO values."""

    n_particles: int = 40
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp: float = 0.5
    n_iterations: int = 150
    init_sigma: float = 0.05


@dataclass(frozen=True)
class SearchConfig:
    """Threshold search window and resolution."""

    snr_min_db: float = -10.0
    snr_max_db: float = 45.0
    coarse_step_db: float = 1.0
    grid_step_db: float = 0.1


@dataclass(frozen=True)
class OptimizerConfig:
    """Outer-loop settings for the full optimization."""

    mode: str = "capacity-anchor"  # or "coded"
    hyper: PsoHyperParams = field(default_factory=PsoHyperParams)
    search: SearchConfig = field(default_factory=SearchConfig)
    n_samples_opt: int = 200_000
    n_samples_threshold: int = 100_000
    xi_db: float = 0.1
    outer_cap: int = 10
    bler_target: float = 1e-2
    stop_rule: StopRule = field(default_factory=StopRule)

    def __post_init__(self):
        if self.mode not in ("capacity-anchor", "coded"):
            raise ValueError(f"unknown mode {self.mode!r}")


# ---------------------------------------------------------------------------
# Position encoding and feasibility projection
# ---------------------------------------------------------------------------


def _complex_to_pairs(c: np.ndarray) -> np.ndarray:
    out = np.empty(2 * c.size)
    out[0::2] = c.real
    out[1::2] = c.imag
    return out


def _pairs_to_complex(x: np.ndarray) -> np.ndarray:
    return x[0::2] + 1j * x[1::2]


def encode_position(free_points: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    return np.concatenate([_complex_to_pairs(np.asarray(free_points, dtype=complex)),
                           _complex_to_pairs(np.asarray(coefficients, dtype=complex))])


def split_position(x: np.ndarray, n_free: int) -> tuple[np.ndarray, np.ndarray]:
    return _pairs_to_complex(x[: 2 * n_free]), _pairs_to_complex(x[2 * n_free :])


def project_feasible(x: np.ndarray, n_free: int) -> np.ndarray:
    """Rescale both position blocks onto their unit-power shells (idempotent)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("position contains non-finite entries")
    free, alpha = split_position(x, n_free)
    p_free = np.mean(np.abs(free) ** 2)
    p_alpha = np.mean(np.abs(alpha) ** 2)
    if p_free == 0:
        raise ValueError("all-zero constellation block has no feasible projection")
    if p_alpha == 0:
        raise ValueError("all-zero pre-scaling block has no feasible projection")
    return encode_position(free / math.sqrt(p_free), alpha / math.sqrt(p_alpha))


def position_to_set(x: np.ndarray, n_free: int, n_t: int) -> SmSignalSet:
    free, alpha = split_position(x, n_free)
    return build_signal_set(
        expand_quadrant(QuadrantParams(free)), PreScaling.normalized(alpha), n_t
    )


def initial_position(initial_set: SmSignalSet) -> np.ndarray:
    """Seed position: first-quadrant representatives plus the starting coefficients."""
    free = extract_quadrant(initial_set.constellation).free_points
    return encode_position(free, initial_set.pre_scaling.coefficients)


# ---------------------------------------------------------------------------
# Particle swarm core (objective-agnostic; used with a projection hook here,
# and bare by sanity tests on toy objectives)
# ---------------------------------------------------------------------------


@dataclass
class PsoState:
    positions: np.ndarray
    velocities: np.ndarray
    values: np.ndarray
    pbest_positions: np.ndarray
    pbest_values: np.ndarray
    gbest_position: np.ndarray
    gbest_value: float
    iteration: int = 0
    history: list[float] = field(default_factory=list)


def init_swarm(x0, objective, hyper: PsoHyperParams, rng: np.random.Generator, project=None):
    """Swarm of hyper.n_particles: the seed position plus Gaussian perturbations."""
    x0 = np.asarray(x0, dtype=float)
    if project is not None:
        x0 = project(x0)
    d = x0.size
    positions = np.tile(x0, (hyper.n_particles, 1))
    if hyper.n_particles > 1:
        positions[1:] += rng.normal(0.0, hyper.init_sigma, size=(hyper.n_particles - 1, d))
        if project is not None:
            for i in range(1, hyper.n_particles):
                positions[i] = project(positions[i])
    values = np.array([objective(p) for p in positions])
    best = int(np.argmax(values))
    state = PsoState(
        positions=positions,
        velocities=np.zeros_like(positions),
        values=values,
        pbest_positions=positions.copy(),
        pbest_values=values.copy(),
        gbest_position=positions[best].copy(),
        gbest_value=float(values[best]),
    )
    state.history.append(state.gbest_value)
    return state


def pso_step(state: PsoState, objective, hyper: PsoHyperParams, rng: np.random.Generator, project=None):
    """One velocity/position update plus re-evaluation; maximizes the objective."""
    p, d = state.positions.shape
    r_cog = rng.random((p, d))
    r_soc = rng.random((p, d))
    state.velocities = (
        hyper.inertia * state.velocities
        + hyper.cognitive * r_cog * (state.pbest_positions - state.positions)
        + hyper.social * r_soc * (state.gbest_position[None, :] - state.positions)
    )
    np.clip(state.velocities, -hyper.velocity_clamp, hyper.velocity_clamp, out=state.velocities)
    state.positions = state.positions + state.velocities
    if project is not None:
        for i in range(p):
            state.positions[i] = project(state.positions[i])
    state.values = np.array([objective(x) for x in state.positions])

    improved = state.values > state.pbest_values
    state.pbest_positions[improved] = state.positions[improved]
    state.pbest_values[improved] = state.values[improved]
    best = int(np.argmax(state.pbest_values))
    if state.pbest_values[best] > state.gbest_value:
        state.gbest_value = float(state.pbest_values[best])
        state.gbest_position = state.pbest_positions[best].copy()
    state.iteration += 1
    state.history.append(state.gbest_value)
    return state


# ---------------------------------------------------------------------------
# Threshold searches
# ---------------------------------------------------------------------------


def _grid_bisect(satisfies, lo_idx: int, hi_idx: int) -> int:
    """Smallest grid index in (lo_idx, hi_idx] satisfying, given monotone behavior."""
    while hi_idx - lo_idx > 1:
        mid = (lo_idx + hi_idx) // 2
        if satisfies(mid):
            hi_idx = mid
        else:
            lo_idx = mid
    return hi_idx


def _threshold_search(measure_ok, cfg: SearchConfig, hint_db: float | None, what: str) -> float:
    """Locate the smallest grid SNR where ``measure_ok`` holds.

    measure_ok(idx) evaluates the criterion at snr = idx * grid step; results
    are cached so the coarse scan and bisection never re-measure a point.
    """
    step = cfg.grid_step_db
    lo_idx = round(cfg.snr_min_db / step)
    hi_idx = round(cfg.snr_max_db / step)
    coarse = max(1, round(cfg.coarse_step_db / step))
    cache: dict[int, bool] = {}

    def ok(idx: int) -> bool:
        if idx not in cache:
            cache[idx] = measure_ok(idx)
        return cache[idx]

    start = lo_idx if hint_db is None else min(max(round(hint_db / step), lo_idx), hi_idx)
    if ok(start):
        # Walk down for the bracket's failing side.
        good = start
        while good > lo_idx:
            idx = max(lo_idx, good - coarse)
            if not ok(idx):
                return step * _grid_bisect(ok, idx, good)
            good = idx
        return step * lo_idx
    idx = start
    while idx < hi_idx:
        nxt = min(hi_idx, idx + coarse)
        if ok(nxt):
            return step * _grid_bisect(ok, idx, nxt)
        idx = nxt
    raise SearchRangeError(
        f"{what} not reached anywhere in [{cfg.snr_min_db}, {cfg.snr_max_db}] dB"
    )


def find_waterfall_snr(
    scheme: SchemeSpec | SmSignalSet,
    fec_config: FecConfig,
    bler_target: float,
    search_cfg: SearchConfig = SearchConfig(),
    seed: int = 0,
    stop_rule: StopRule = StopRule(),
    channel_mode: str = "rayleigh",
    mcs: int = -1,
    hint_db: float | None = None,
    rows_out: list | None = None,
) -> float:
    """Smallest grid SNR at which measured coded BLER is at or below the target.

    Coarse scan plus bisection on the grid; each SNR point is measured once
    under the stop rule, with draws keyed by (seed, SNR) so repeated searches
    and different schemes share their randomness. Measured rows can be
    collected via ``rows_out``.
    """
    if not 0.0 < bler_target <= 1.0:
        raise ValueError("bler_target must be in (0, 1]")
    if isinstance(scheme, SmSignalSet):
        scheme = SchemeSpec("ad-hoc", scheme)
    step = search_cfg.grid_step_db

    def measure_ok(idx: int) -> bool:
        row = simulate_bler(
            scheme, fec_config, SnrPoint(idx * step), stop_rule, seed, channel_mode, mcs
        )
        if rows_out is not None:
            rows_out.append(row)
        return row.bler <= bler_target

    return _threshold_search(measure_ok, search_cfg, hint_db, f"BLER {bler_target}")


def find_ami_threshold_snr(
    sig_set: SmSignalSet,
    target_bits: float,
    search_cfg: SearchConfig = SearchConfig(),
    seed: int = 0,
    n_samples: int = 100_000,
    hint_db: float | None = None,
) -> float:
    """Smallest grid SNR where the estimated mutual information reaches target_bits.

    The fast surrogate anchor used instead of coded waterfall measurement;
    one shared sample seed across SNR points keeps the scan consistent.
    """
    if not 0.0 < target_bits < sig_set.bits_per_use:
        raise ValueError(
            f"target of {target_bits} bits not attainable with {sig_set.bits_per_use} bits per use"
        )
    step = search_cfg.grid_step_db

    def measure_ok(idx: int) -> bool:
        est = estimate_bicm_ami(sig_set, SnrPoint(idx * step), n_samples, seed)
        return est.value >= target_bits

    return _threshold_search(measure_ok, search_cfg, hint_db, f"{target_bits:.3f} bits")


# ---------------------------------------------------------------------------
# Full optimization loop
# ---------------------------------------------------------------------------


@dataclass
class OptimizationState:
    """Swarm state of the last inner run plus the outer-loop record."""

    swarm: PsoState
    xi_db: float
    snr_trace: list[float] = field(default_factory=list)
    ami_history: list[tuple[int, int, float]] = field(default_factory=list)  # outer, inner, best
    anchor_trace: list[float] = field(default_factory=list)
    outer_iterations: int = 0
    stop_reason: str = ""
    best_snr_db: float = math.inf


def _threshold_fn(config: OptimizerConfig, target_bits, fec_config, seed):
    if config.mode == "coded":
        if fec_config is None:
            raise ValueError("coded mode needs a FEC configuration")

        def fn(sig_set, hint):
            return find_waterfall_snr(
                SchemeSpec("candidate", sig_set),
                fec_config,
                config.bler_target,
                config.search,
                seed=seed,
                stop_rule=config.stop_rule,
                hint_db=hint,
            )

    else:

        def fn(sig_set, hint):
            return find_ami_threshold_snr(
                sig_set,
                target_bits,
                config.search,
                seed=seed,
                n_samples=config.n_samples_threshold,
                hint_db=hint,
            )

    return fn


def optimize(
    initial_set: SmSignalSet,
    target_bits: float,
    config: OptimizerConfig = OptimizerConfig(),
    seed: int = 0,
    fec_config: FecConfig | None = None,
) -> tuple[SmSignalSet, OptimizationState]:
    """Alternate swarm optimization at the anchor SNR with threshold re-measurement.

    target_bits is the information rate (bits per channel use) that defines
    the capacity-anchor threshold; coded mode uses the bundled FEC waterfall
    instead. Returns the best design found (the one with the lowest measured
    threshold, never worse than the initial set) and the full state.
    """
    n_free = initial_set.order // 4
    n_t = initial_set.n_t
    threshold = _threshold_fn(config, target_bits, fec_config, seed)

    def project(x):
        return project_feasible(x, n_free)

    def decode(x):
        return position_to_set(x, n_free, n_t)

    x0 = project(initial_position(initial_set))
    snr_0 = threshold(initial_set, None)

    state = OptimizationState(swarm=None, xi_db=config.xi_db)  # swarm filled below
    state.snr_trace.append(snr_0)
    state.best_snr_db = snr_0
    best_set = initial_set
    best_x = x0

    for outer in range(1, config.outer_cap + 1):
        anchor = state.snr_trace[-1]
        state.anchor_trace.append(anchor)
        snr = SnrPoint(anchor)
        obj_seed = int(
            np.random.SeedSequence(seed, spawn_key=(rngmod.DOMAIN_SWARM, outer)).generate_state(1)[0]
        )

        def objective(x):
            return estimate_bicm_ami(decode(x), snr, config.n_samples_opt, obj_seed).value

        move_rng = rngmod.stream(seed, rngmod.DOMAIN_SWARM, outer)
        swarm = init_swarm(best_x, objective, config.hyper, move_rng, project)
        state.ami_history.append((outer, 0, swarm.gbest_value))
        for inner in range(1, config.hyper.n_iterations + 1):
            pso_step(swarm, objective, config.hyper, move_rng, project)
            state.ami_history.append((outer, inner, swarm.gbest_value))
        state.swarm = swarm
        state.outer_iterations = outer

        candidate = decode(swarm.gbest_position)
        snr_i = threshold(candidate, state.snr_trace[-1])
        improvement = state.snr_trace[-1] - snr_i
        state.snr_trace.append(snr_i)
        if snr_i < state.best_snr_db:
            state.best_snr_db = snr_i
            best_set = candidate
            best_x = swarm.gbest_position.copy()
        if improvement <= config.xi_db:
            state.stop_reason = "threshold-increased" if improvement < 0 else "converged"
            break
    else:
        state.stop_reason = "iteration-cap"

    return best_set, state
