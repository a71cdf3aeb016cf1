"""Constellations, pre-scaling vectors, and the composed transmit-vector set.

A spatial-modulation signal set pairs an M-point complex constellation
(shared by every transmit antenna) with one complex pre-scaling coefficient
per antenna. Power normalization is factored: the constellation has unit
average power and the pre-scaling vector has unit mean-square magnitude, so
the composed set of M*N_t single-active-antenna vectors automatically has
unit average power as well.

Four-fold (quadrant) symmetry is the parameterization used by the optimizer:
M/4 free points expand to the full constellation through the images
s, -conj(s), conj(s), -s placed at index offsets 0, M/4, M/2, 3M/4.

Serialization: designs are stored in a line-based text format (see
``save_design``) with I/Q values printed at 17 significant digits, which
round-trips float64 values exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POWER_TOL = 1e-12


def gray_code(x):
    """Binary-reflected Gray code of x (int or ndarray)."""
    return x ^ (x >> 1)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Constellation:
    """M labeled complex symbols with unit average power.

    ``labels[i]`` is the log2(M)-bit word carried by symbol ``symbols[i]``;
    the label assignment is a bijection onto 0..M-1.
    """

    symbols: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=np.complex128)
        lab = np.asarray(self.labels, dtype=np.int64)
        m = sym.size
        if not (_is_pow2(m) and m >= 4):
            raise ValueError(f"constellation order must be a power of two >= 4, got {m}")
        if lab.shape != (m,) or sorted(lab.tolist()) != list(range(m)):
            raise ValueError("labels must be a bijection onto 0..M-1")
        power = np.mean(np.abs(sym) ** 2)
        if abs(power - 1.0) > POWER_TOL:
            raise ValueError(f"constellation average power {power!r} is not 1 within {POWER_TOL}")
        object.__setattr__(self, "symbols", _readonly(sym))
        object.__setattr__(self, "labels", _readonly(lab))

    @property
    def order(self) -> int:
        return self.symbols.size

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    def index_of_label(self) -> np.ndarray:
        """Inverse labeling: word -> symbol index."""
        inv = np.empty(self.order, dtype=np.int64)
        inv[self.labels] = np.arange(self.order)
        return inv

    def is_quadrant_symmetric(self) -> bool:
        """True if the index layout satisfies the four-fold image relation exactly."""
        m = self.order
        q = m // 4
        s = self.symbols
        base = s[:q]
        return (
            np.array_equal(s[q : 2 * q], -np.conj(base))
            and np.array_equal(s[2 * q : 3 * q], np.conj(base))
            and np.array_equal(s[3 * q :], -base)
        )


@dataclass(frozen=True)
class QuadrantParams:
    """M/4 first-quadrant representative points of a four-fold symmetric set."""

    free_points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.free_points, dtype=np.complex128)
        if pts.ndim != 1 or not _is_pow2(pts.size):
            raise ValueError("free_points must be a 1-D array with power-of-two length")
        if not np.all(np.isfinite(pts)):
            raise ValueError("free_points must be finite")
        if np.any(pts == 0):
            raise ValueError("zero free point would collapse symmetry images onto each other")
        object.__setattr__(self, "free_points", _readonly(pts))

    @property
    def order(self) -> int:
        return 4 * self.free_points.size


@dataclass(frozen=True)
class PreScaling:
    """Per-antenna complex coefficients with unit mean-square magnitude."""

    coefficients: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=np.complex128)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("coefficients must be a non-empty 1-D array")
        power = np.mean(np.abs(a) ** 2)
        if abs(power - 1.0) > POWER_TOL:
            raise ValueError(f"pre-scaling mean-square magnitude {power!r} is not 1 within {POWER_TOL}")
        object.__setattr__(self, "coefficients", _readonly(a))

    @property
    def n_antennas(self) -> int:
        return self.coefficients.size

    @classmethod
    def normalized(cls, raw) -> "PreScaling":
        """Scale an arbitrary nonzero vector onto the unit-power shell."""
        a = np.asarray(raw, dtype=np.complex128)
        power = np.mean(np.abs(a) ** 2)
        if power == 0:
            raise ValueError("cannot normalize an all-zero pre-scaling vector")
        return cls(a / math.sqrt(power))


@dataclass(frozen=True)
class SmSignalSet:
    """The M*N_t effective transmit vectors with their bit labeling.

    Vector index (k, m) lives at flat position k*M + m and has its single
    nonzero entry alpha_k * s_m at antenna k. Label words put the log2(N_t)
    antenna bits (natural binary) in front of the log2(M) symbol bits.
    """

    n_t: int
    constellation: Constellation
    pre_scaling: PreScaling
    vectors: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not _is_pow2(self.n_t):
            raise ValueError(f"antenna count must be a power of two, got {self.n_t}")
        if self.pre_scaling.n_antennas != self.n_t:
            raise ValueError("pre-scaling length does not match antenna count")
        t = self.n_vectors
        vec = np.asarray(self.vectors, dtype=np.complex128)
        lab = np.asarray(self.labels, dtype=np.int64)
        if vec.shape != (t, self.n_t):
            raise ValueError(f"vectors must have shape {(t, self.n_t)}")
        if sorted(lab.tolist()) != list(range(t)):
            raise ValueError("vector labels must be a bijection onto 0..M*N_t-1")
        power = np.sum(np.abs(vec) ** 2) / t
        if abs(power - 1.0) > POWER_TOL:
            raise ValueError(f"joint average power {power!r} is not 1 within {POWER_TOL}")
        object.__setattr__(self, "vectors", _readonly(vec))
        object.__setattr__(self, "labels", _readonly(lab))
        # Hot-path lookups used by detection and the capacity estimator.
        nb = self.bits_per_use
        shifts = nb - 1 - np.arange(nb)
        bits = (lab[None, :] >> shifts[:, None]) & 1
        object.__setattr__(self, "_bit_is_one", _readonly(bits.astype(bool)))
        inv = np.empty(t, dtype=np.int64)
        inv[lab] = np.arange(t)
        object.__setattr__(self, "_index_of_word", _readonly(inv))

    @property
    def order(self) -> int:
        return self.constellation.order

    @property
    def n_vectors(self) -> int:
        return self.order * self.n_t

    @property
    def bits_per_use(self) -> int:
        return self.n_vectors.bit_length() - 1

    def index_of_word(self) -> np.ndarray:
        """Inverse labeling: bit word -> vector index."""
        return self._index_of_word

    def bit_masks(self) -> np.ndarray:
        """(bits_per_use, M*N_t) booleans; row i is True where bit i of the label is 1.

        Bit 0 is the first (most significant) bit of the word.
        """
        return self._bit_is_one

    def received_candidates(self, gains: np.ndarray) -> np.ndarray:
        """Noiseless received scalar for every vector under channel ``gains``.

        ``gains`` may be a single length-N_t vector or a (..., N_t) batch; the
        result appends an axis of length M*N_t ordered like the vector index.
        """
        g = np.asarray(gains, dtype=np.complex128)
        scaled = g * self.pre_scaling.coefficients
        cand = scaled[..., :, None] * self.constellation.symbols[..., None, :]
        return cand.reshape(*g.shape[:-1], self.n_vectors)


def make_apsk_initial(m_order: int) -> Constellation:
    """Ring-structured starting constellation for the optimizer.

    2^(b/2-1) rings (b = log2 M) with radii proportional to 1, 2, ...; each
    ring carries 2^(b/2+1) equally spaced symbols starting half a step off
    the positive real axis, and every second ring is rotated by a further
    half step so neighboring rings interleave. Labels are Gray-coded on the
    ring index and, independently, on the within-ring position.
    """
    if m_order not in (4, 16, 64):
        raise ValueError(
            f"unsupported order {m_order}: ring construction needs an even number "
            "of bits per symbol and is provided for orders 4, 16, and 64"
        )
    b = m_order.bit_length() - 1
    n_rings = 2 ** (b // 2 - 1)
    per_ring = 2 ** (b // 2 + 1)
    step = 2 * np.pi / per_ring
    radii = np.arange(1, n_rings + 1, dtype=float)
    radii /= math.sqrt(np.mean(radii**2))

    phase_bits = per_ring.bit_length() - 1
    symbols = np.empty(m_order, dtype=np.complex128)
    labels = np.empty(m_order, dtype=np.int64)
    for r in range(n_rings):
        offset = step / 2 + (step / 2) * (r % 2)
        i = np.arange(per_ring)
        phases = offset + i * step
        symbols[r * per_ring : (r + 1) * per_ring] = radii[r] * np.exp(1j * phases)
        labels[r * per_ring : (r + 1) * per_ring] = (gray_code(r) << phase_bits) | gray_code(i)
    return Constellation(symbols, labels)


def make_initial_prescaling(m_order: int, n_t: int) -> PreScaling:
    """Unit-modulus starting coefficients: small per-antenna phase increments.

    Antenna k (1-based) gets phase pi*(k-1) / (2^(b/2) * N_t) where
    b = log2(M); with M-fold-ish phase granularity this spreads the antennas
    across a fraction of one symbol-phase step.
    """
    if not (_is_pow2(m_order) and m_order >= 4):
        raise ValueError(f"order must be a power of two >= 4, got {m_order}")
    b = m_order.bit_length() - 1
    if b % 2 != 0:
        raise ValueError(f"order {m_order} has an odd number of bits per symbol")
    if n_t < 1:
        raise ValueError("need at least one antenna")
    k = np.arange(n_t)
    phases = np.pi * k / (2 ** (b // 2) * n_t)
    return PreScaling(np.exp(1j * phases))


def expand_quadrant(params: QuadrantParams) -> Constellation:
    """Expand M/4 free points into the full four-fold symmetric constellation.

    The free points are rescaled to give the expanded set unit average power
    first, so the image relation holds bit-exactly on the stored symbols.
    Labels place the two image-selector bits (which flip one at a time across
    each axis reflection) in front of a Gray-coded free-point index.
    """
    free = params.free_points
    q = free.size
    power = np.mean(np.abs(free) ** 2)
    base = free / math.sqrt(power)
    symbols = np.concatenate([base, -np.conj(base), np.conj(base), -base])
    fb = q.bit_length() - 1
    f = np.arange(q)
    word = gray_code(f)
    labels = np.concatenate([word, (1 << fb) | word, (2 << fb) | word, (3 << fb) | word])
    return Constellation(symbols, labels)


def extract_quadrant(constellation: Constellation) -> QuadrantParams:
    """First-quadrant representatives (phase in [0, pi/2)), in index order.

    Inverse of ``expand_quadrant`` up to renormalization and point order for
    constellations whose free points lie in the open first quadrant.
    """
    s = constellation.symbols
    in_q1 = (s.real > 0) & (s.imag >= 0)
    pts = s[in_q1]
    want = constellation.order // 4
    if pts.size != want:
        raise ValueError(
            f"found {pts.size} first-quadrant representatives, expected {want}; "
            "constellation is not four-fold reducible"
        )
    return QuadrantParams(pts)


def build_signal_set(constellation: Constellation, pre_scaling: PreScaling, n_t: int) -> SmSignalSet:
    """Compose constellation and pre-scaling into the M*N_t transmit vectors."""
    if not _is_pow2(n_t):
        raise ValueError(f"antenna count must be a power of two, got {n_t}")
    if pre_scaling.n_antennas != n_t:
        raise ValueError("pre-scaling length does not match antenna count")
    m = constellation.order
    vectors = np.zeros((n_t * m, n_t), dtype=np.complex128)
    scaled = pre_scaling.coefficients[:, None] * constellation.symbols[None, :]
    for k in range(n_t):
        vectors[k * m : (k + 1) * m, k] = scaled[k]
    sym_bits = constellation.bits_per_symbol
    k_idx = np.repeat(np.arange(n_t), m)
    labels = (k_idx << sym_bits) | np.tile(constellation.labels, n_t)
    return SmSignalSet(n_t, constellation, pre_scaling, vectors, labels)


def min_euclidean_distance(sig_set: SmSignalSet, gains: np.ndarray) -> float:
    """Smallest squared distance between distinct received candidates.

    Diagnostic only: the classical pre-scaling objective, not the one this
    package optimizes.
    """
    g = np.asarray(gains, dtype=np.complex128)
    if g.shape != (sig_set.n_t,):
        raise ValueError(f"gains must have shape ({sig_set.n_t},)")
    r = sig_set.received_candidates(g)
    d2 = np.abs(r[:, None] - r[None, :]) ** 2
    np.fill_diagonal(d2, np.inf)
    return float(d2.min())


# ---------------------------------------------------------------------------
# Design file format (version 1):
#   line 1:  sm-design/1
#   line 2:  order <M>
#   line 3:  antennas <N_t>
#   line 4:  labels <M integers: bit word of each symbol index>
#   M lines: symbol <I> <Q>
#   N_t lines: prescale <I> <Q>
# I/Q values are printed with %.17g, which round-trips float64 bit-exactly.
# ---------------------------------------------------------------------------

FORMAT_TAG = "sm-design/1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def design_text(sig_set: SmSignalSet) -> str:
    """Render a signal set in the design file format."""
    lines = [FORMAT_TAG]
    lines.append(f"order {sig_set.order}")
    lines.append(f"antennas {sig_set.n_t}")
    lines.append("labels " + " ".join(str(int(v)) for v in sig_set.constellation.labels))
    for s in sig_set.constellation.symbols:
        lines.append(f"symbol {_fmt(s.real)} {_fmt(s.imag)}")
    for a in sig_set.pre_scaling.coefficients:
        lines.append(f"prescale {_fmt(a.real)} {_fmt(a.imag)}")
    return "\n".join(lines) + "\n"


def save_design(sig_set: SmSignalSet, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(design_text(sig_set))


def load_design(path) -> SmSignalSet:
    """Parse a design file back into a signal set."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != FORMAT_TAG:
        raise ValueError(f"not a {FORMAT_TAG} file: {path}")
    header = {}
    for ln in lines[1:3]:
        key, val = ln.split(maxsplit=1)
        header[key] = val
    m = int(header["order"])
    n_t = int(header["antennas"])
    lab_line = lines[3].split()
    if lab_line[0] != "labels":
        raise ValueError("missing labels line")
    labels = np.array([int(v) for v in lab_line[1:]], dtype=np.int64)
    body = lines[4:]
    if len(body) != m + n_t:
        raise ValueError(f"expected {m} symbol and {n_t} prescale lines, got {len(body)}")
    symbols = np.empty(m, dtype=np.complex128)
    for i, ln in enumerate(body[:m]):
        tag, re_s, im_s = ln.split()
        if tag != "symbol":
            raise ValueError(f"expected symbol line, got {ln!r}")
        symbols[i] = complex(float(re_s), float(im_s))
    coeffs = np.empty(n_t, dtype=np.complex128)
    for i, ln in enumerate(body[m:]):
        tag, re_s, im_s = ln.split()
        if tag != "prescale":
            raise ValueError(f"expected prescale line, got {ln!r}")
        coeffs[i] = complex(float(re_s), float(im_s))
    return build_signal_set(Constellation(symbols, labels), PreScaling(coeffs), n_t)
