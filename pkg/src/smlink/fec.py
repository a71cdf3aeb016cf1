"""BICM chain plumbing: MCS table, bit interleaver, and a bundled LDPC codec.

The bundled code is a repeat-accumulate-structured LDPC: information columns
carry weight 3 (placed quasi-regularly, avoiding short cycles), and parity
columns form an accumulator chain, which makes encoding a sparse XOR plus a
running prefix sum. One code is built per (k, n, seed) triple, so any target
rate in the MCS table is hit directly instead of by puncturing a mother
code. This is a deliberately small stand-in for a standardized LDPC: it
produces a usable waterfall for relative scheme comparisons, not
standard-conformant absolute thresholds.

Decoding is normalized min-sum belief propagation, vectorized over a batch
of codewords, with per-codeword early stopping on parity satisfaction.

LLR sign convention matches the demapper: positive means bit 0.

Parity matrices can be exported/imported as sparse index lists::

    ldpc-parity/1
    n <N> k <K>
    row <var index> <var index> ...     (one line per check)

MCS operating points ship as a CSV data file (columns mcs, modulation_order,
code_rate); the SM-chain rate for a given antenna count follows from keeping
the information bits per channel use equal to the single-antenna value:
rate_sm * log2(M * N_t) = code_rate * log2(M).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import rng as rngmod

DEFAULT_BLOCK_LENGTH = 5040  # divisible by every bits-per-use in 2..8
MCS_IDS = (0, 4, 9, 10, 13, 16, 17, 22, 28)


@dataclass(frozen=True)
class McsEntry:
    """One modulation-and-coding operating point, specialized to an antenna count."""

    mcs: int
    m_order: int
    rate: float
    n_t: int
    rate_sm: float

    def __post_init__(self):
        lhs = self.rate_sm * math.log2(self.m_order * self.n_t)
        rhs = self.rate * math.log2(self.m_order)
        if abs(lhs - rhs) > 1e-9:
            raise ValueError("rate_sm does not preserve information bits per channel use")

    @property
    def target_bits_per_use(self) -> float:
        """Information bits per channel use: rate * log2(M), independent of N_t."""
        return self.rate * math.log2(self.m_order)


def load_mcs_table() -> dict[int, tuple[int, float]]:
    """mcs id -> (modulation order, code rate) from the bundled data file."""
    table = {}
    with resources.files("smlink.data").joinpath("mcs_table.csv").open("r") as fh:
        for row in csv.DictReader(fh):
            table[int(row["mcs"])] = (int(row["modulation_order"]), float(row["code_rate"]))
    return table


def mcs_entry(mcs: int, n_t: int) -> McsEntry:
    table = load_mcs_table()
    if mcs not in table:
        raise ValueError(f"unknown MCS id {mcs}; available: {sorted(table)}")
    m_order, rate = table[mcs]
    rate_sm = rate * math.log2(m_order) / math.log2(m_order * n_t)
    return McsEntry(mcs, m_order, rate, n_t, rate_sm)


@dataclass(frozen=True)
class FecConfig:
    """Codec selection plus the knobs that define one code instance."""

    codec: str  # "ldpc" or "none"
    k: int
    n: int
    interleaver_seed: int = 0
    construction_seed: int = 0
    max_iters: int = 30
    norm_factor: float = 0.8

    def __post_init__(self):
        if self.codec not in ("ldpc", "none"):
            raise ValueError(f"unknown codec {self.codec!r}")
        if self.codec == "none" and self.k != self.n:
            raise ValueError("pass-through codec requires k == n")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k} n={self.n}")

    @property
    def rate(self) -> float:
        return self.k / self.n

    def padded_length(self, bits_per_use: int) -> int:
        """Codeword length after zero-padding to a whole number of channel uses."""
        return -(-self.n // bits_per_use) * bits_per_use


def build_fec_config(
    rate_sm: float,
    n: int = DEFAULT_BLOCK_LENGTH,
    interleaver_seed: int = 0,
    construction_seed: int = 0,
    codec: str = "ldpc",
    max_iters: int = 30,
    norm_factor: float = 0.8,
) -> FecConfig:
    """Config with k chosen to approximate the target SM-chain rate."""
    if codec == "none":
        return FecConfig("none", n, n, interleaver_seed, construction_seed, max_iters, norm_factor)
    k = int(round(rate_sm * n))
    k = min(max(k, 1), n - 1)
    return FecConfig("ldpc", k, n, interleaver_seed, construction_seed, max_iters, norm_factor)


# ---------------------------------------------------------------------------
# Code construction
# ---------------------------------------------------------------------------


class LdpcCode:
    """Sparse parity structure plus the edge orderings the decoder uses.

    Edges are stored sorted by check (with start offsets per check) and a
    permutation into variable-sorted order (with start offsets per variable),
    so message updates run as segment reductions.
    """

    def __init__(self, n: int, k: int, info_rows: np.ndarray, info_cols: np.ndarray):
        self.n = n
        self.k = k
        self.m = n - k
        self.info_rows = info_rows
        self.info_cols = info_cols
        self._build_edges()

    def _build_edges(self):
        m, k = self.m, self.k
        acc_rows = np.concatenate([np.arange(m), np.arange(1, m)])
        acc_cols = np.concatenate([np.arange(m), np.arange(m - 1)]) + k
        rows = np.concatenate([self.info_rows, acc_rows]).astype(np.int64)
        cols = np.concatenate([self.info_cols, acc_cols]).astype(np.int64)
        order = np.lexsort((cols, rows))
        self.edge_check = rows[order].astype(np.int32)
        self.edge_var = cols[order].astype(np.int32)
        self.n_edges = self.edge_check.size
        check_deg = np.bincount(self.edge_check, minlength=m)
        var_deg = np.bincount(self.edge_var, minlength=self.n)
        if np.any(check_deg == 0) or np.any(var_deg == 0):
            raise ValueError("every check and every variable must carry at least one edge")
        self.dc_max = int(check_deg.max())
        self.dv_max = int(var_deg.max())
        # Slot of each edge within its check / variable, for padded layouts.
        check_starts = np.searchsorted(self.edge_check, np.arange(m))
        self.check_slot = (np.arange(self.n_edges) - check_starts[self.edge_check]).astype(np.int32)
        to_var = np.argsort(self.edge_var, kind="stable")
        var_sorted = self.edge_var[to_var]
        var_starts = np.searchsorted(var_sorted, np.arange(self.n))
        slots = np.arange(self.n_edges) - var_starts[var_sorted]
        self.var_slot = np.empty(self.n_edges, dtype=np.int32)
        self.var_slot[to_var] = slots

    def parity_rows(self) -> list[np.ndarray]:
        """Variable indices of each check, for export and verification."""
        out = [[] for _ in range(self.m)]
        for c, v in zip(self.edge_check, self.edge_var):
            out[int(c)].append(int(v))
        return [np.array(sorted(r), dtype=np.int64) for r in out]

    def parity_matrix(self) -> np.ndarray:
        """Dense 0/1 parity-check matrix (small codes only; used by tests)."""
        h = np.zeros((self.m, self.n), dtype=np.uint8)
        h[self.edge_check, self.edge_var] = 1
        return h


def _pick_rows(gen, degrees, dv, forbidden_pairs, tries=60):
    """dv distinct, non-consecutive check rows, avoiding reused row pairs."""
    m = degrees.size
    for attempt in range(tries):
        if attempt < tries // 2:
            key = degrees + gen.random(m)
        else:
            key = gen.random(m)
        rows = np.sort(np.argpartition(key, dv)[:dv])
        if np.any(np.diff(rows) <= 1):
            continue
        pairs = [(int(rows[a]), int(rows[b])) for a in range(dv) for b in range(a + 1, dv)]
        if any(p in forbidden_pairs for p in pairs):
            continue
        return rows, pairs
    # Dense corner cases: accept a pair reuse but keep rows distinct and spread.
    rows = np.sort(gen.choice(m, size=dv, replace=False))
    while np.any(np.diff(rows) <= 1):
        rows = np.sort(gen.choice(m, size=dv, replace=False))
    pairs = [(int(rows[a]), int(rows[b])) for a in range(dv) for b in range(a + 1, dv)]
    return rows, pairs


def build_ldpc(k: int, n: int, construction_seed: int = 0, dv: int = 3) -> LdpcCode:
    """Construct the repeat-accumulate-structured code for one (k, n) pair."""
    m = n - k
    if m < 2 * dv + 2:
        raise ValueError(f"too few checks ({m}) for column weight {dv}")
    gen = rngmod.stream(construction_seed, rngmod.DOMAIN_FEC, k, n)
    degrees = np.zeros(m, dtype=np.float64)
    used_pairs: set[tuple[int, int]] = set()
    rows_out = np.empty(k * dv, dtype=np.int64)
    cols_out = np.repeat(np.arange(k, dtype=np.int64), dv)
    for j in range(k):
        rows, pairs = _pick_rows(gen, degrees, dv, used_pairs)
        rows_out[j * dv : (j + 1) * dv] = rows
        used_pairs.update(pairs)
        degrees[rows] += 1.0
    return LdpcCode(n, k, rows_out, cols_out)


_CODE_CACHE: dict[tuple[int, int, int], LdpcCode] = {}


def get_code(config: FecConfig) -> LdpcCode:
    key = (config.k, config.n, config.construction_seed)
    if key not in _CODE_CACHE:
        _CODE_CACHE[key] = build_ldpc(config.k, config.n, config.construction_seed)
    return _CODE_CACHE[key]


# ---------------------------------------------------------------------------
# Encode / decode
# ---------------------------------------------------------------------------


def encode(info_bits: np.ndarray, config: FecConfig) -> np.ndarray:
    """Systematic codeword(s) for info bits of shape (k,) or (B, k)."""
    u = np.asarray(info_bits, dtype=np.uint8)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    if u.shape[1] != config.k:
        raise ValueError(f"expected {config.k} info bits per block, got {u.shape[1]}")
    if config.codec == "none":
        c = u.copy()
    else:
        code = get_code(config)
        s = np.zeros((code.m, u.shape[0]), dtype=np.int64)
        np.add.at(s, code.info_rows, u.T[code.info_cols])
        parity = (np.cumsum(s & 1, axis=0) & 1).astype(np.uint8)
        c = np.concatenate([u, parity.T], axis=1)
    return c[0] if single else c


def decode(
    llrs: np.ndarray,
    config: FecConfig,
    max_iters: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Min-sum decode of LLRs shaped (n,) or (B, n).

    Returns (info bits, converged flags); a flag is True when every parity
    check held at some iteration (pass-through codec: always True).
    """
    l_in = np.asarray(llrs, dtype=np.float64)
    single = l_in.ndim == 1
    if single:
        l_in = l_in[None, :]
    if l_in.shape[1] != config.n:
        raise ValueError(f"expected {config.n} LLRs per block, got {l_in.shape[1]}")
    if config.codec == "none":
        bits = (l_in < 0).astype(np.uint8)
        ok = np.ones(l_in.shape[0], dtype=bool)
        return (bits[0], ok[0]) if single else (bits, ok)

    code = get_code(config)
    iters = config.max_iters if max_iters is None else int(max_iters)
    bits, ok = _min_sum(code, l_in, iters, config.norm_factor)
    info = bits[:, : config.k]
    return (info[0], ok[0]) if single else (info, ok)


def _min_sum(code: LdpcCode, llrs: np.ndarray, max_iters: int, alpha: float):
    b = llrs.shape[0]
    ech, esl = code.edge_check, code.check_slot
    eva, evs = code.edge_var, code.var_slot
    alpha32 = np.float32(alpha)
    inf32 = np.float32(np.inf)

    out_bits = np.zeros((b, code.n), dtype=np.uint8)
    converged = np.zeros(b, dtype=bool)
    active = np.arange(b)

    lam = llrs.T.astype(np.float32)  # (n, B)
    c2v = np.zeros((code.n_edges, b), dtype=np.float32)

    for it in range(max_iters + 1):
        width = lam.shape[1]
        var_pad = np.zeros((code.n, code.dv_max, width), dtype=np.float32)
        var_pad[eva, evs] = c2v
        total = lam + var_pad.sum(axis=1)
        bits = (total < 0).astype(np.uint8)

        chk_u8 = np.zeros((code.m, code.dc_max, width), dtype=np.uint8)
        chk_u8[ech, esl] = bits[eva]
        satisfied = ~np.any(chk_u8.sum(axis=1, dtype=np.uint8) & 1, axis=0)
        # Zero totals are undecided bits; a word "satisfying" parity through
        # ties (e.g. an all-zero LLR input) is not a converged decode.
        satisfied &= ~np.any(total == 0, axis=0)

        if np.any(satisfied):
            done_cols = active[satisfied]
            out_bits[done_cols] = bits.T[satisfied]
            converged[done_cols] = True
            keep = ~satisfied
            if not keep.any():
                return out_bits, converged
            active = active[keep]
            lam = np.ascontiguousarray(lam[:, keep])
            c2v = np.ascontiguousarray(c2v[:, keep])
            total = np.ascontiguousarray(total[:, keep])
            bits = np.ascontiguousarray(bits[:, keep])
        if it == max_iters:
            break

        width = lam.shape[1]
        v2c = total[eva] - c2v
        absv = np.abs(v2c)
        neg = (v2c < 0).astype(np.uint8)

        mag = np.full((code.m, code.dc_max, width), inf32, dtype=np.float32)
        mag[ech, esl] = absv
        min1 = mag.min(axis=1)
        is_min = absv == min1[ech]
        tie_u8 = np.zeros((code.m, code.dc_max, width), dtype=np.uint8)
        tie_u8[ech, esl] = is_min
        tie = tie_u8.sum(axis=1, dtype=np.uint8) > 1
        mag[ech, esl] = np.where(is_min, inf32, absv)
        min2 = mag.min(axis=1)
        min2 = np.where(tie, min1, min2)
        excl_min = np.where(is_min, min2[ech], min1[ech])

        neg_u8 = np.zeros((code.m, code.dc_max, width), dtype=np.uint8)
        neg_u8[ech, esl] = neg
        excl_neg = (neg_u8.sum(axis=1, dtype=np.uint8)[ech] - neg) & 1
        sign = np.float32(1.0) - np.float32(2.0) * excl_neg
        c2v = alpha32 * sign * excl_min

    # Unconverged columns keep their final hard decisions.
    out_bits[active] = bits.T
    return out_bits, converged


# ---------------------------------------------------------------------------
# Interleaver
# ---------------------------------------------------------------------------


def _permutation(n: int, seed: int) -> np.ndarray:
    return rngmod.stream(seed, rngmod.DOMAIN_FEC).permutation(n)


def interleave(bits: np.ndarray, seed: int) -> np.ndarray:
    """Seeded pseudorandom permutation along the last axis."""
    bits = np.asarray(bits)
    return np.take(bits, _permutation(bits.shape[-1], seed), axis=-1)


def deinterleave(bits: np.ndarray, seed: int) -> np.ndarray:
    bits = np.asarray(bits)
    perm = _permutation(bits.shape[-1], seed)
    out = np.empty_like(bits)
    out[..., perm] = bits
    return out


# ---------------------------------------------------------------------------
# Parity-matrix text format
# ---------------------------------------------------------------------------

PARITY_TAG = "ldpc-parity/1"


def save_parity(code: LdpcCode, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(PARITY_TAG + "\n")
        fh.write(f"n {code.n} k {code.k}\n")
        for row in code.parity_rows():
            fh.write("row " + " ".join(str(v) for v in row) + "\n")


def load_parity(path) -> LdpcCode:
    """Rebuild a code from its sparse row lists.

    The accumulator layout of the bundled construction (parity column j in
    checks j and j+1) is verified so the loaded code stays encodable.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != PARITY_TAG:
        raise ValueError(f"not a {PARITY_TAG} file: {path}")
    hdr = lines[1].split()
    n, k = int(hdr[1]), int(hdr[3])
    m = n - k
    if len(lines) != 2 + m:
        raise ValueError(f"expected {m} row lines, found {len(lines) - 2}")
    info_rows, info_cols = [], []
    acc = np.zeros((m, m), dtype=np.uint8)
    for i, ln in enumerate(lines[2:]):
        parts = ln.split()
        if parts[0] != "row":
            raise ValueError(f"expected row line, got {ln!r}")
        for tok in parts[1:]:
            v = int(tok)
            if v < k:
                info_rows.append(i)
                info_cols.append(v)
            else:
                acc[i, v - k] = 1
    expected = np.zeros((m, m), dtype=np.uint8)
    expected[np.arange(m), np.arange(m)] = 1
    expected[np.arange(1, m), np.arange(m - 1)] = 1
    if not np.array_equal(acc, expected):
        raise ValueError("parity part is not the accumulator chain this codec encodes")
    return LdpcCode(n, k, np.array(info_rows, dtype=np.int64), np.array(info_cols, dtype=np.int64))
