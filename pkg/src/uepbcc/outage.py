"""Closed-form outage probabilities and security gap over quasi-static Rayleigh fading.

All formulas take linear SNRs (``SnrValue`` or plain floats); dB appears
only when building reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import SnrValue


class InfeasibleError(ValueError):
    """Thresholds leave no SNR window for the eavesdropper."""

    def __init__(self, message, margin_db=None):
        super().__init__(message)
        self.margin_db = margin_db


def _lin(x) -> float:
    return float(x.linear) if isinstance(x, SnrValue) else float(x)


@dataclass(frozen=True)
class SecrecyTargets:
    delta: float = 1e-4
    eps: float = 0.1

    def __post_init__(self):
        if not 0 < self.delta < 1 - self.eps < 1:
            raise ValueError(f"need 0 < delta < 1 - eps < 1, got delta={self.delta}, eps={self.eps}")


@dataclass(frozen=True)
class ThresholdSet:
    """SNR thresholds read off the per-class error-rate curves.

    beta_p, beta_s: minimum SNRs with P_p <= delta, P_s <= delta.
    alpha_s: maximum SNR with P_s >= 1 - eps.
    """

    beta_p: SnrValue
    alpha_s: SnrValue
    beta_s: SnrValue
    delta: float = 1e-4
    eps: float = 0.1

    @classmethod
    def from_db(cls, beta_p, alpha_s, beta_s, delta=1e-4, eps=0.1):
        return cls(SnrValue.from_db(beta_p), SnrValue.from_db(alpha_s), SnrValue.from_db(beta_s),
                   delta, eps)

    @property
    def ordered(self) -> bool:
        return self.beta_p.linear <= self.beta_s.linear

    @property
    def feasible(self) -> bool:
        return check_feasibility(self)[0]

    def to_dict(self) -> dict:
        return {"beta_p_db": self.beta_p.db, "alpha_s_db": self.alpha_s.db,
                "beta_s_db": self.beta_s.db, "delta": self.delta, "eps": self.eps,
                "feasible": self.feasible, "ordered": self.ordered}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdSet":
        return cls.from_db(d["beta_p_db"], d["alpha_s_db"], d["beta_s_db"],
                           d.get("delta", 1e-4), d.get("eps", 0.1))


def check_feasibility(t: ThresholdSet) -> tuple[bool, float]:
    """Strict rule alpha_s > beta_p; returns (feasible, margin in dB)."""
    margin = t.alpha_s.db - t.beta_p.db
    return t.alpha_s.linear > t.beta_p.linear, margin


def bob_outage(beta_s, gamma_b) -> float:
    """P{gamma_B < beta_s} for mean SNR gamma_b."""
    return -math.expm1(-_lin(beta_s) / _lin(gamma_b))


def min_bob_snr(beta_s, eta_max: float) -> SnrValue:
    """Smallest mean SNR keeping Bob's outage at or below ``eta_max``."""
    if not 0 < eta_max < 1:
        raise ValueError("eta_max must lie strictly between 0 and 1")
    return SnrValue(-_lin(beta_s) / math.log1p(-eta_max))


def eve_outage(beta_p, alpha_s, gamma_e) -> tuple[float, float, float]:
    """(omega_r, omega_s, omega) at Eve's mean SNR ``gamma_e``."""
    bp, a, g = _lin(beta_p), _lin(alpha_s), _lin(gamma_e)
    w_r = -math.expm1(-bp / g)
    w_s = math.exp(-a / g)
    return w_r, w_s, w_r + w_s


def eve_outage_derivative(beta_p, alpha_s, gamma_e) -> float:
    """d omega / d gamma_e."""
    bp, a, g = _lin(beta_p), _lin(alpha_s), _lin(gamma_e)
    return (a * math.exp(-a / g) - bp * math.exp(-bp / g)) / g**2


def optimal_eve_snr(beta_p, alpha_s) -> SnrValue:
    """Mean SNR at Eve minimising her total outage probability."""
    bp, a = _lin(beta_p), _lin(alpha_s)
    if not 0 < bp < a:
        # equal thresholds are the continuous limit, g -> beta_p
        if bp == a and bp > 0:
            return SnrValue(bp)
        raise InfeasibleError("optimal Eve SNR needs 0 < beta_p < alpha_s",
                              margin_db=10 * math.log10(a / bp) if a > 0 and bp > 0 else None)
    x = bp / a
    # (bp - a) / ln(bp / a), written to stay accurate as bp -> a
    return SnrValue(a * (x - 1.0) / math.log(x) if abs(x - 1) > 1e-8 else a * (1 + (x - 1) / 2))


def security_gap(gamma_b_min, gamma_e_opt) -> float:
    """Security gap in dB."""
    return 10.0 * math.log10(_lin(gamma_b_min) / _lin(gamma_e_opt))


@dataclass(frozen=True)
class OutageReport:
    eta: float
    eta_max: float
    gamma_b_min: SnrValue
    omega_r: float
    omega_s: float
    omega: float
    omega_min: float
    gamma_e_opt: SnrValue
    security_gap_db: float
    thresholds: ThresholdSet | None = None

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("gamma_b_min", "gamma_e_opt", "thresholds")}
        d["gamma_b_min_db"] = self.gamma_b_min.db
        d["gamma_e_opt_db"] = self.gamma_e_opt.db
        if self.thresholds is not None:
            d["thresholds"] = self.thresholds.to_dict()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def full_report(t: ThresholdSet, eta_max: float | None = None,
                eta_decimals: int | None = None) -> OutageReport:
    """Eve's optimum, her minimum outage, Bob's minimum SNR and the gap.

    Parameters
    ----------
    eta_max : float, optional
        Bob's tolerated outage. ``None`` sets it equal to Eve's minimum
        outage probability.
    eta_decimals : int, optional
        When ``eta_max`` is tied to Eve's minimum, truncate that value to
        this many decimals first (a table printed with two decimals uses 2).
    """
    ok, margin = check_feasibility(t)
    if not ok:
        raise InfeasibleError(f"alpha_s must exceed beta_p (margin {margin:.2f} dB)", margin_db=margin)
    g_e = optimal_eve_snr(t.beta_p, t.alpha_s)
    w_r, w_s, w = eve_outage(t.beta_p, t.alpha_s, g_e)
    if eta_max is None:
        eta_max = w
        if eta_decimals is not None:
            scale = 10**eta_decimals
            # nudge guards against 0.24 being stored as 0.23999...
            eta_max = math.floor(w * scale + 1e-9) / scale
    g_b = min_bob_snr(t.beta_s, eta_max)
    return OutageReport(
        eta=bob_outage(t.beta_s, g_b), eta_max=eta_max, gamma_b_min=g_b,
        omega_r=w_r, omega_s=w_s, omega=w, omega_min=w, gamma_e_opt=g_e,
        security_gap_db=security_gap(g_b, g_e), thresholds=t,
    )


def omega_curve(beta_p, alpha_s, gamma_e_db) -> np.ndarray:
    """Eve's total outage over a grid of mean SNRs in dB (vectorised)."""
    g = 10.0 ** (np.asarray(gamma_e_db, dtype=float) / 10.0)
    return -np.expm1(-_lin(beta_p) / g) + np.exp(-_lin(alpha_s) / g)


# (scheme, alpha_s, beta_s) in dB; beta_p = 0.75 dB for every row
TABLE1_INPUTS = (
    ("BPSK", 2.95, 5.35),
    ("64 QAM", 12.25, 14.12),
    ("128 QAM", 15.78, 17.67),
    ("512 QAM", 20.64, 22.94),
    ("2048 QAM", 25.27, 28.49),
)
TABLE1_BETA_P = 0.75

TABLE_COLUMNS = ("Scheme", "alpha_s", "omega_min (eta_max)", "gamma_E_opt", "beta_s",
                 "gamma_B_min", "S_g")


def table_row(name: str, rep: OutageReport) -> list[str]:
    t = rep.thresholds
    return [name, f"{t.alpha_s.db:.2f}", f"{rep.omega_min:.2f} ({rep.eta_max:.2f})",
            f"{rep.gamma_e_opt.db:.2f}", f"{t.beta_s.db:.2f}", f"{rep.gamma_b_min.db:.2f}",
            f"{rep.security_gap_db:.2f}"]


def format_table(rows: list[list[str]]) -> str:
    cells = [list(TABLE_COLUMNS)] + rows
    widths = [max(len(r[i]) for r in cells) for i in range(len(TABLE_COLUMNS))]
    line = lambda r: " | ".join(c.rjust(w) for c, w in zip(r, widths))  # noqa: E731
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(cells[0]), sep] + [line(r) for r in cells[1:]])


def reproduce_table1(eta_decimals: int | None = 2) -> list[tuple[str, OutageReport]]:
    out = []
    for name, a, b in TABLE1_INPUTS:
        t = ThresholdSet.from_db(TABLE1_BETA_P, a, b)
        out.append((name, full_report(t, eta_decimals=eta_decimals)))
    return out
