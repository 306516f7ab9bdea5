"""Monte Carlo estimation of per-class block error rates.

Every frame draws its message bits, fading coefficient and noise from its
own generator, seeded by (master seed, SNR index, frame index, stream).
Frames are simulated in fixed-size batches and the stop rule is checked
after each batch in frame order, so the counts do not depend on how many
worker processes share the work.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .channel import (STREAM_BITS, STREAM_FADING, STREAM_NOISE, SnrValue, complex_noise,
                      frame_rng, n0_from_snr, sample_fading)
from .decoder import SpaDecoder
from .modem import ModulationPlan, demap_soft, map_frame
from .outage import ThresholdSet


class GridError(ValueError):
    """The SNR grid does not bracket a requested crossing."""


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass
class StopRule:
    min_errors: int = 100
    max_frames: int = 10**7
    batch: int = 32
    track: tuple = ("pc1", "pc2")


@dataclass
class CurvePoint:
    snr_db: float
    frames: int = 0
    frame_err: int = 0
    pc1_err: int = 0
    pc2_err: int = 0
    bit_err: int = 0
    bits: int = 0

    def add(self, counts) -> None:
        self.frames += counts[0]
        self.frame_err += counts[1]
        self.pc1_err += counts[2]
        self.pc2_err += counts[3]
        self.bit_err += counts[4]
        self.bits += counts[5]

    def _rate(self, k):
        return k / self.frames if self.frames else float("nan")

    @property
    def P(self):
        return self._rate(self.frame_err)

    @property
    def Pp(self):
        return self._rate(self.pc1_err)

    @property
    def Ps(self):
        return self._rate(self.pc2_err)

    @property
    def ber(self):
        return self.bit_err / self.bits if self.bits else float("nan")

    def interval(self, which: str) -> tuple[float, float]:
        k = {"P": self.frame_err, "Pp": self.pc1_err, "Ps": self.pc2_err}[which]
        return wilson_interval(k, self.frames)

    def half_width(self, which: str) -> float:
        lo, hi = self.interval(which)
        return (hi - lo) / 2


CSV_FIELDS = ["snr_db", "frames", "frame_err", "pc1_err", "pc2_err",
              "P", "Pp", "Ps", "ci_p", "ci_pp", "ci_ps"]


@dataclass
class ErrorRateCurve:
    points: list[CurvePoint]
    meta: dict = field(default_factory=dict)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    def rates(self, which: str) -> np.ndarray:
        return np.array([getattr(p, which) for p in self.points])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key, val in self.meta.items():
            buf.write(f"# {key}={val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for p in self.points:
            w.writerow([repr(p.snr_db), p.frames, p.frame_err, p.pc1_err, p.pc2_err,
                        repr(p.P), repr(p.Pp), repr(p.Ps),
                        repr(p.half_width("P")), repr(p.half_width("Pp")), repr(p.half_width("Ps"))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ErrorRateCurve":
        meta, rows = {}, []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line.strip():
                rows.append(line)
        pts = []
        for rec in csv.DictReader(rows):
            pts.append(CurvePoint(float(rec["snr_db"]), int(rec["frames"]), int(rec["frame_err"]),
                                  int(rec["pc1_err"]), int(rec["pc2_err"])))
        return cls(pts, meta)

    def write_dat(self, stem) -> list[Path]:
        """Two-column ``snr_db value`` files, one per class."""
        out = []
        for which in ("P", "Pp", "Ps"):
            path = Path(f"{stem}_{which}.dat")
            lines = [f"# snr_db {which}"] + [f"{p.snr_db:.6g} {getattr(p, which):.6e}" for p in self.points]
            path.write_text("\n".join(lines) + "\n")
            out.append(path)
        return out


# ----------------------------------------------------------------------------
# frame simulation

class _Link:
    """Per-process state: code, plan and a decoder instance."""

    def __init__(self, code, plan, max_iter, decode, exact_demap, fading, master_seed, convention_n0):
        self.code = code
        self.plan = plan
        self.decoder = SpaDecoder(code.h, max_iter=max_iter) if decode else None
        self.exact = exact_demap
        self.fading = fading
        self.seed = master_seed
        self.n0 = convention_n0

    def run(self, point: int, snr_db: float, start: int, count: int):
        code, plan = self.code, self.plan
        k1, k = code.profile.k1, code.k
        n0 = self.n0(snr_db)
        ns = plan.n_symbols(code)
        u = np.empty((count, k), dtype=np.uint8)
        h = np.ones(count, dtype=complex)
        noise = np.empty((count, ns), dtype=complex)
        for i in range(count):
            f = start + i
            u[i] = frame_rng(self.seed, point, f, STREAM_BITS).integers(0, 2, k)
            if self.fading:
                h[i] = sample_fading(frame_rng(self.seed, point, f, STREAM_FADING))
            noise[i] = complex_noise(frame_rng(self.seed, point, f, STREAM_NOISE), n0, ns)
        c = code.encode(u[:, :k1], u[:, k1:])
        y = h[:, None] * map_frame(c, code, plan) + noise
        llr = demap_soft(y, h, n0, plan, code, exact=self.exact)
        if self.decoder is None:
            hard = (llr < 0).astype(np.uint8)
        else:
            hard = self.decoder.decode_batch(llr)[0]
        wrong = hard[:, :k] != u
        return (count, int(wrong.any(1).sum()), int(wrong[:, :k1].any(1).sum()),
                int(wrong[:, k1:].any(1).sum()), int(wrong.sum()), count * k)


_WORKER: _Link | None = None


def _init_worker(args):
    global _WORKER
    _WORKER = _Link(*args)


def _work(task):
    return _WORKER.run(*task)


class _N0:
    def __init__(self, plan, code):
        self.plan, self.code = plan, code

    def __call__(self, snr_db):
        return n0_from_snr(SnrValue.from_db(snr_db), self.plan, self.code)


def _stop(pt: CurvePoint, rule: StopRule, code) -> bool:
    if pt.frames >= rule.max_frames:
        return True
    counts = {"frame": pt.frame_err, "pc1": pt.pc1_err, "pc2": pt.pc2_err}
    sizes = {"frame": code.k, "pc1": code.profile.k1, "pc2": code.profile.k2}
    tracked = [counts[t] for t in rule.track if sizes[t] > 0]
    return bool(tracked) and min(tracked) >= rule.min_errors


def run_sweep(code, plan: ModulationPlan, snr_db, stop: StopRule | None = None,
              fading: bool = False, master_seed: int = 0, workers: int = 1,
              max_iter: int = 100, decode: bool = True, exact_demap: bool = True,
              progress=None) -> ErrorRateCurve:
    """Estimate P, P_p and P_s on a grid of SNRs (dB, per the plan's convention).

    With ``fading`` the grid holds average SNRs and each frame sees one
    Rayleigh coefficient. ``decode=False`` bypasses the decoder and takes
    hard decisions on the channel LLRs.
    """
    stop = stop or StopRule()
    args = (code, plan, max_iter, decode, exact_demap, fading, master_seed, _N0(plan, code))
    pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(args,)) if workers > 1 else None
    link = None if pool else _Link(*args)
    points = []
    try:
        for i, s in enumerate(np.atleast_1d(snr_db).astype(float)):
            pt = CurvePoint(float(s))
            nxt = 0
            while not _stop(pt, stop, code):
                room = stop.max_frames - nxt
                sizes = []
                for _ in range(workers):
                    b = min(stop.batch, room)
                    if b <= 0:
                        break
                    sizes.append((nxt, b))
                    nxt += b
                    room -= b
                tasks = [(i, float(s), a, b) for a, b in sizes]
                results = pool.map(_work, tasks) if pool else map(lambda t: link.run(*t), tasks)
                for res in results:
                    if _stop(pt, stop, code):
                        break
                    pt.add(res)
            points.append(pt)
            if progress:
                progress(pt)
    finally:
        if pool:
            pool.shutdown()
    budget_hit = [p.snr_db for p in points if p.frames >= stop.max_frames]
    meta = {
        "master_seed": master_seed, "fading": fading, "max_iter": max_iter,
        "decoder": "spa-flooding" if decode else "none", "demapper": "exact" if exact_demap else "max-log",
        "snr_convention": plan.snr_convention, "min_errors": stop.min_errors,
        "max_frames": stop.max_frames, "batch": stop.batch,
        "budget_exhausted": ";".join(f"{x:g}" for x in budget_hit),
        **{f"plan_{k}": v for k, v in plan.describe().items()},
    }
    return ErrorRateCurve(points, meta)


# ----------------------------------------------------------------------------
# thresholds

def crossing(snr_db, rates, level: float, kind: str) -> float:
    """SNR where a decreasing error curve crosses ``level``.

    ``kind="min"`` gives the lowest SNR from which the curve stays at or
    below ``level`` (first point <= level, interpolated with its
    predecessor). ``kind="max"`` gives the highest SNR at which the curve is
    still >= level (last such point, interpolated with its successor).
    Interpolation is linear in (dB, log10 rate); points with zero rate are
    skipped because they carry no log value.
    """
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(rates, dtype=float)
    keep = y > 0
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise GridError("need at least two points with nonzero error counts; extend the grid")
    if kind == "min":
        below = np.flatnonzero(y <= level)
        if below.size == 0:
            raise GridError(f"curve never reaches {level:g}; extend the grid upward")
        j = below[0]
        if j == 0:
            raise GridError(f"curve is already below {level:g} at the first point; extend the grid downward")
        i = j - 1
    elif kind == "max":
        above = np.flatnonzero(y >= level)
        if above.size == 0:
            raise GridError(f"curve never reaches {level:g}; extend the grid downward")
        i = above[-1]
        if i == x.size - 1:
            raise GridError(f"curve is still above {level:g} at the last point; extend the grid upward")
        j = i + 1
    else:
        raise ValueError(kind)
    l0, l1, lv = np.log10(y[i]), np.log10(y[j]), np.log10(level)
    if l0 == l1:
        return float(x[i])
    return float(x[i] + (lv - l0) * (x[j] - x[i]) / (l1 - l0))


def extract_thresholds(curve: ErrorRateCurve, delta: float = 1e-4, eps: float = 0.1) -> ThresholdSet:
    """beta_p, beta_s (P <= delta) and alpha_s (P_s >= 1 - eps) from a curve."""
    x = curve.snr_db
    beta_p = crossing(x, curve.rates("Pp"), delta, "min")
    beta_s = crossing(x, curve.rates("Ps"), delta, "min")
    alpha_s = crossing(x, curve.rates("Ps"), 1 - eps, "max")
    return ThresholdSet.from_db(beta_p, alpha_s, beta_s, delta, eps)


# ----------------------------------------------------------------------------
# fading prediction from an AWGN curve

@dataclass
class FadingPrediction:
    gamma_db: float
    P: float
    Pp: float
    Ps: float
    ci: dict
    tail_bound: float


def _average(x_db, vals, gbar, floor):
    """E[P(gamma)] for gamma ~ Exp(mean gbar), P log-interpolated on the dB grid."""
    x = 10 ** (np.asarray(x_db) / 10)
    v = np.where(np.asarray(vals) > floor, vals, 0.0)
    # saturate at the first grid value below the grid
    total = v[0] * -math.expm1(-x[0] / gbar)
    for a, b, pa, pb, xa, xb in zip(x_db[:-1], x_db[1:], v[:-1], v[1:], x[:-1], x[1:]):
        if pa <= 0 or pb <= 0:
            continue  # floor cut: zero on any segment touching a zero point
        la, lb = math.log10(pa), math.log10(pb)

        def f(t, a=a, b=b, la=la, lb=lb):
            tdb = 10 * math.log10(t)
            return 10 ** (la + (lb - la) * (tdb - a) / (b - a)) * math.exp(-t / gbar) / gbar

        total += integrate.quad(f, xa, xb, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
    return total


def predict_fading_bler(awgn: ErrorRateCurve, gamma_db: float, floor: float = 0.0) -> FadingPrediction:
    """Average an AWGN curve over the Rayleigh SNR distribution at mean ``gamma_db``.

    Above the last grid point the curve is taken as zero; when the
    exponential mass left there exceeds 1 % a warning reports the bound
    on the neglected contribution.
    """
    x_db = awgn.snr_db
    gbar = 10 ** (gamma_db / 10)
    top = 10 ** (x_db[-1] / 10)
    tail = math.exp(-top / gbar)
    out, ci = {}, {}
    for which in ("P", "Pp", "Ps"):
        vals = awgn.rates(which)
        out[which] = _average(x_db, vals, gbar, floor)
        hw = np.array([p.half_width(which) for p in awgn.points])
        ci[which] = _average(x_db, hw, gbar, 0.0)
    last = max(awgn.points[-1].P, awgn.points[-1].Pp, awgn.points[-1].Ps)
    bound = last * tail
    if tail > 0.01 and last > 0:
        warnings.warn(f"AWGN grid ends at {x_db[-1]:g} dB; {tail:.3g} of the fading mass lies above it "
                      f"(neglected error probability <= {bound:.3g})", stacklevel=2)
    return FadingPrediction(gamma_db, out["P"], out["Pp"], out["Ps"], ci, bound)
