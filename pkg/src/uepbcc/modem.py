"""Constellations, labelings, per-class framing and soft demapping.

Square QAM uses a product labeling: the in-phase coordinate carries the
high half of the label, the quadrature coordinate the low half. Cross QAM
(odd number of bits) starts from a 2^(m+1) x 2^m rectangle with the same
product labeling and folds the outer in-phase columns onto the top and
bottom strips.

Two per-axis labelings are available:

* ``gray``: binary reflected Gray code, neighbours differ in one bit.
* ``yarg``: anti-Gray code. Even positions carry ``0 | gray_{m-1}(j)``,
  odd positions the bit complement of the preceding even one, so
  neighbours alternately differ in m and m-1 bits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

MAX_LLR = 50.0
SUPPORTED_ORDERS = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096)

PER_INFO_BIT = "per_info_bit"
PER_CODED_BIT = "per_coded_bit"


def gray_sequence(m: int) -> np.ndarray:
    i = np.arange(1 << m)
    return i ^ (i >> 1)


def yarg_sequence(m: int) -> np.ndarray:
    if m == 0:
        return np.zeros(1, dtype=int)
    even = gray_sequence(m - 1)
    out = np.empty(1 << m, dtype=int)
    out[0::2] = even
    out[1::2] = even ^ ((1 << m) - 1)
    return out


_SEQUENCES = {"gray": gray_sequence, "yarg": yarg_sequence}


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy point set with a bit labeling.

    ``points[i]`` carries the label ``labels[i]`` (an integer whose binary
    expansion, MSB first, is the bit tuple); ``bits[i]`` is that tuple.
    """

    points: np.ndarray
    labels: np.ndarray
    kind: str
    labeling: str

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def bits(self) -> np.ndarray:
        m = self.bits_per_symbol
        return ((self.labels[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)

    @property
    def by_label(self) -> np.ndarray:
        """Points indexed by label value."""
        out = np.empty_like(self.points)
        out[self.labels] = self.points
        return out

    def energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def to_csv(self, path) -> None:
        m = self.bits_per_symbol
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "label", "bits", "re", "im"])
            for i, (p, lab) in enumerate(zip(self.points, self.labels)):
                w.writerow([i, int(lab), format(int(lab), f"0{m}b"), repr(p.real), repr(p.imag)])


def _square(m: int, seq) -> tuple[np.ndarray, np.ndarray]:
    L = 1 << m
    amp = 2 * np.arange(L) - (L - 1)
    lab = seq(m)
    I, Q = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    points = amp[I] + 1j * amp[Q]
    labels = (lab[I] << m) | lab[Q]
    return points.ravel(), labels.ravel()


def _cross(m: int, seq) -> tuple[np.ndarray, np.ndarray]:
    # 2^(2m+1) points, m >= 2: fold a 2^(m+1) x 2^m rectangle into a cross
    LI, LQ = 1 << (m + 1), 1 << m
    ai = 2 * np.arange(LI) - (LI - 1)
    aq = 2 * np.arange(LQ) - (LQ - 1)
    I, Q = np.meshgrid(np.arange(LI), np.arange(LQ), indexing="ij")
    x = ai[I].ravel().astype(float)
    y = aq[Q].ravel().astype(float)
    labels = ((seq(m + 1)[I] << m) | seq(m)[Q]).ravel()
    edge = 3 * (1 << (m - 1)) - 1  # largest |coordinate| of the cross
    out = np.abs(x) > edge
    xs, ys = x[out], y[out]
    x[out] = np.sign(xs) * (LQ - np.abs(ys))
    y[out] = np.sign(ys) * (np.abs(xs) - (1 << (m - 1)))
    return x + 1j * y, labels


def build_constellation(order: int, labeling: str = "gray") -> Constellation:
    """BPSK, square QAM (even bits/symbol) or cross QAM (odd, >= 32)."""
    if order not in SUPPORTED_ORDERS or order in (8,):
        raise ValueError(f"unsupported constellation order {order}")
    if labeling not in _SEQUENCES:
        raise ValueError(f"unknown labeling {labeling!r}")
    seq = _SEQUENCES[labeling]
    bits = int(np.log2(order))
    if order == 2:
        return Constellation(np.array([1.0 + 0j, -1.0 + 0j]), np.array([0, 1]), "bpsk", labeling)
    if bits % 2 == 0:
        pts, labs = _square(bits // 2, seq)
        kind = "square_qam"
    else:
        pts, labs = _cross(bits // 2, seq)
        kind = "cross_qam"
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(pts, labs.astype(np.int64), kind, labeling)


BPSK = build_constellation(2)


def modulate(bits: np.ndarray, const: Constellation) -> np.ndarray:
    """Map (..., N*m) bits to (..., N) symbols, MSB first within a group."""
    m = const.bits_per_symbol
    b = np.asarray(bits, dtype=np.int64)
    g = b.reshape(b.shape[:-1] + (-1, m))
    idx = g @ (1 << np.arange(m - 1, -1, -1))
    return const.by_label[idx]


def symbol_metrics(y, h, n0, const: Constellation) -> np.ndarray:
    """Log-likelihoods -|y - h s|^2 / N0 for every point, shape (..., N, M)."""
    y = np.asarray(y)
    h = np.asarray(h)
    if h.ndim:
        h = h.reshape(h.shape + (1,) * (y.ndim - h.ndim))
    ref = h[..., None] * const.points
    return -np.abs(y[..., None] - ref) ** 2 / n0


def demap(y, h, n0, const: Constellation, exact: bool = True, max_llr: float = MAX_LLR,
          known_zero: np.ndarray | None = None) -> np.ndarray:
    """Per-bit LLRs log P(b=0|y) / P(b=1|y) for symbols ``y`` (..., N).

    ``known_zero`` optionally marks label bits (boolean, length m) that are
    known filler zeros for the *last* symbol of each row.
    """
    if n0 <= 0:
        raise ValueError("noise spectral density must be positive")
    y = np.asarray(y, dtype=complex)
    metrics = symbol_metrics(y, h, n0, const)
    bits = const.bits.astype(bool)
    if known_zero is not None and np.any(known_zero):
        allowed = ~np.any(bits[:, known_zero], axis=1)
        metrics[..., -1, ~allowed] = -np.inf
    m = const.bits_per_symbol
    out = np.empty(metrics.shape[:-1] + (m,))
    for j in range(m):
        one = bits[:, j]
        if exact:
            l0 = logsumexp(metrics[..., ~one], axis=-1)
            l1 = logsumexp(metrics[..., one], axis=-1)
        else:
            l0 = metrics[..., ~one].max(axis=-1)
            l1 = metrics[..., one].max(axis=-1)
        with np.errstate(invalid="ignore"):
            out[..., j] = l0 - l1
    # -inf - -inf only arises for filler bits that are never 1
    out = np.nan_to_num(out, nan=max_llr, posinf=max_llr, neginf=-max_llr)
    np.clip(out, -max_llr, max_llr, out=out)
    return out.reshape(out.shape[:-2] + (-1,))


@dataclass(frozen=True)
class ModulationPlan:
    """Constellation per protection class.

    Symbols of a frame are emitted class by class (PC1, PC2, PC3). Each
    class's bits are grouped by its constellation's bits per symbol; the
    last group is completed with known zero filler bits.
    """

    pc1: Constellation = BPSK
    pc2: Constellation = BPSK
    pc3: Constellation = BPSK
    snr_convention: str = PER_INFO_BIT

    def __post_init__(self):
        if self.pc1.order != 2:
            raise ValueError("PC1 is always BPSK")
        if self.snr_convention not in (PER_INFO_BIT, PER_CODED_BIT):
            raise ValueError(f"unknown SNR convention {self.snr_convention!r}")

    @classmethod
    def qam(cls, order: int, labeling: str = "yarg", parity_on_qam: bool = False,
            snr_convention: str = PER_INFO_BIT) -> "ModulationPlan":
        c = build_constellation(order, labeling)
        return cls(BPSK, c, c if parity_on_qam else BPSK, snr_convention)

    def classes(self, code) -> list[tuple[np.ndarray, Constellation]]:
        return [(code.pc1_cols, self.pc1), (code.pc2_cols, self.pc2), (code.pc3_cols, self.pc3)]

    def symbols_per_class(self, code) -> list[int]:
        return [-(-cols.size // c.bits_per_symbol) for cols, c in self.classes(code)]

    def n_symbols(self, code) -> int:
        return sum(self.symbols_per_class(code))

    def describe(self) -> dict:
        return {
            "pc1": f"{self.pc1.order}-{self.pc1.labeling}",
            "pc2": f"{self.pc2.order}-{self.pc2.labeling}",
            "pc3": f"{self.pc3.order}-{self.pc3.labeling}",
            "snr_convention": self.snr_convention,
        }


def _padded(bits: np.ndarray, m: int) -> np.ndarray:
    pad = (-bits.shape[-1]) % m
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), dtype=bits.dtype)], axis=-1)
    return bits


def map_frame(codeword, code, plan: ModulationPlan) -> np.ndarray:
    """Codeword(s) (..., n) to the symbol frame (..., n_symbols)."""
    c = np.asarray(codeword, dtype=np.uint8)
    if c.shape[-1] != code.n:
        raise ValueError(f"codeword length {c.shape[-1]} != {code.n}")
    parts = [modulate(_padded(c[..., cols], const.bits_per_symbol), const)
             for cols, const in plan.classes(code)]
    return np.concatenate(parts, axis=-1)


def demap_soft(received, h, n0, plan: ModulationPlan, code, exact: bool = True,
               max_llr: float = MAX_LLR) -> np.ndarray:
    """Channel LLRs (..., n) in codeword order for a received frame.

    ``h`` is the per-frame fading coefficient (scalar or shape (...,)).
    """
    if n0 <= 0:
        raise ValueError("noise spectral density must be positive")
    y = np.asarray(received, dtype=complex)
    out = np.empty(y.shape[:-1] + (code.n,))
    start = 0
    for (cols, const), ns in zip(plan.classes(code), plan.symbols_per_class(code)):
        if cols.size == 0:
            continue
        m = const.bits_per_symbol
        pad = ns * m - cols.size
        known = None
        if pad:
            known = np.zeros(m, dtype=bool)
            known[m - pad:] = True
        llr = demap(y[..., start:start + ns], h, n0, const, exact=exact, max_llr=max_llr,
                    known_zero=known)
        out[..., cols] = llr[..., : cols.size]
        start += ns
    return out


def adjacent_pairs(const: Constellation) -> list[tuple[int, int]]:
    """Index pairs of horizontally or vertically neighbouring points."""
    pts = const.points
    if const.order == 2:
        return [(0, 1)]
    d = np.abs(pts[:, None] - pts[None, :])
    dmin = d[d > 0].min()
    i, j = np.nonzero(np.triu(np.isclose(d, dmin)))
    return list(zip(i.tolist(), j.tolist()))


def mean_adjacent_distance(const: Constellation) -> float:
    """Mean Hamming distance between labels of neighbouring points."""
    lab = const.labels
    return float(np.mean([bin(int(lab[a]) ^ int(lab[b])).count("1") for a, b in adjacent_pairs(const)]))


def write_constellation(const: Constellation, path) -> Path:
    const.to_csv(path)
    return Path(path)
