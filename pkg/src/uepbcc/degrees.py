"""Degree-distribution algebra for irregular LDPC ensembles.

Distributions are kept as exact rationals (``fractions.Fraction``) so the
edge/node conversions and the concentrated check-node synthesis carry no
rounding error. Floats are accepted on input and converted exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Union

Number = Union[int, float, str, Fraction]

EDGE = "edge"
NODE = "node"
VARIABLE = "variable"
CHECK = "check"

SUM_TOL = 1e-9
RENORM_TOL = 1e-6


class InfeasibleProfileError(ValueError):
    """Raised when a protection-class split cannot be realised."""


def as_fraction(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # repr() round-trips, so "0.0025" stays 1/400 rather than the binary value
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class DegreeDistribution:
    """Fractions of edges or nodes per degree.

    Parameters
    ----------
    coeffs : mapping degree -> fraction
        Degrees must be integers >= 2. Zero entries are dropped.
    perspective : {"edge", "node"}
    side : {"variable", "check"}
    """

    coeffs: Mapping[int, Fraction]
    perspective: str = NODE
    side: str = VARIABLE

    def __post_init__(self):
        if self.perspective not in (EDGE, NODE):
            raise ValueError(f"unknown perspective {self.perspective!r}")
        if self.side not in (VARIABLE, CHECK):
            raise ValueError(f"unknown side {self.side!r}")
        clean = {}
        for d, f in dict(self.coeffs).items():
            if int(d) != d or d < 2:
                raise ValueError(f"degree must be an integer >= 2, got {d!r}")
            f = as_fraction(f)
            if f < 0 or f > 1:
                raise ValueError(f"fraction for degree {d} outside [0, 1]: {float(f)}")
            if f != 0:
                clean[int(d)] = f
        if not clean:
            raise ValueError("empty degree distribution")
        total = sum(clean.values())
        err = abs(float(total) - 1.0)
        if err > RENORM_TOL:
            raise ValueError(f"fractions sum to {float(total):.12g}, not 1")
        if err > SUM_TOL:
            warnings.warn(
                f"degree distribution sums to {float(total):.12g}; renormalising",
                stacklevel=3,
            )
            clean = {d: f / total for d, f in clean.items()}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Number]], perspective=NODE, side=VARIABLE):
        return cls(dict(pairs), perspective=perspective, side=side)

    @classmethod
    def regular(cls, degree: int, perspective=NODE, side=VARIABLE):
        return cls({degree: Fraction(1)}, perspective=perspective, side=side)

    @property
    def degrees(self) -> list[int]:
        return list(self.coeffs)

    @property
    def max_degree(self) -> int:
        return max(self.coeffs)

    @property
    def min_degree(self) -> int:
        return min(self.coeffs)

    def mean(self) -> Fraction:
        """Average degree; only meaningful for node-perspective distributions."""
        return sum(d * f for d, f in self.coeffs.items())

    def as_floats(self) -> dict[int, float]:
        return {d: float(f) for d, f in self.coeffs.items()}

    def __getitem__(self, degree: int) -> Fraction:
        return self.coeffs.get(degree, Fraction(0))

    def to_text(self) -> str:
        return "".join(f"{d} {float(f)!r}\n" for d, f in sorted(self.coeffs.items(), reverse=True))

    def polynomial(self, ndigits: int = 4) -> str:
        # edge perspective uses x^(i-1), node perspective x^i
        shift = 1 if self.perspective == EDGE else 0
        terms = []
        for d, f in sorted(self.coeffs.items(), reverse=True):
            e = d - shift
            mono = "" if e == 0 else ("x" if e == 1 else f"x^{e}")
            terms.append(f"{float(f):.{ndigits}f}{mono}")
        return " + ".join(terms)


def read_distribution(path, perspective=NODE, side=VARIABLE) -> DegreeDistribution:
    """Read ``degree fraction`` lines; ``#`` starts a comment."""
    pairs = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        d, f = line.split()
        pairs.append((int(d), Fraction(f)))
    return DegreeDistribution.from_pairs(pairs, perspective=perspective, side=side)


def write_distribution(dist: DegreeDistribution, path) -> None:
    header = f"# {dist.side} degree distribution, {dist.perspective} perspective\n"
    Path(path).write_text(header + dist.to_text())


def _require(dist: DegreeDistribution, perspective: str):
    if dist.perspective != perspective:
        raise ValueError(f"expected a {perspective}-perspective distribution")


def edge_to_node(lam: DegreeDistribution) -> DegreeDistribution:
    """Convert edge fractions to node fractions: nu_i ∝ lambda_i / i."""
    _require(lam, EDGE)
    w = {d: f / d for d, f in lam.coeffs.items()}
    s = sum(w.values())
    return DegreeDistribution({d: x / s for d, x in w.items()}, perspective=NODE, side=lam.side)


def node_to_edge(nu: DegreeDistribution) -> DegreeDistribution:
    """Convert node fractions to edge fractions: lambda_i ∝ i * nu_i."""
    _require(nu, NODE)
    w = {d: f * d for d, f in nu.coeffs.items()}
    s = sum(w.values())
    return DegreeDistribution({d: x / s for d, x in w.items()}, perspective=EDGE, side=nu.side)


def _check_rate(rate: Number) -> Fraction:
    R = as_fraction(rate)
    if not 0 < R < 1:
        raise ValueError(f"code rate must lie in (0, 1), got {float(R)}")
    return R


def concentrated_check(nu: DegreeDistribution, rate: Number) -> DegreeDistribution:
    """Two-degree check-node distribution whose mean matches the edge count.

    The mean check degree is ``sum_j nu_j * j / (1 - R)``. When it is an
    integer the result has a single term.
    """
    _require(nu, NODE)
    R = _check_rate(rate)
    c_m = nu.mean() / (1 - R)
    lo, hi = math.floor(c_m), math.ceil(c_m)
    if lo == hi:
        return DegreeDistribution({lo: Fraction(1)}, perspective=NODE, side=CHECK)
    a = hi - c_m
    b = c_m - lo
    return DegreeDistribution({lo: a, hi: b}, perspective=NODE, side=CHECK)


@dataclass(frozen=True)
class ProtectionProfile:
    """Sizes of the three protection classes of a length-n code."""

    n: int
    k: int
    k1: int
    k2: int
    r: int
    degree_threshold: int

    def __post_init__(self):
        if min(self.n, self.k, self.k1, self.k2, self.r) < 0:
            raise ValueError("class sizes must be non-negative")
        if self.k1 + self.k2 != self.k or self.k + self.r != self.n:
            raise ValueError(f"inconsistent profile {self}")

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k, self.n)

    # public/secret naming used on the security side
    @property
    def k_public(self) -> int:
        return self.k1

    @property
    def k_secret(self) -> int:
        return self.k2

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "k1": self.k1, "k2": self.k2,
            "r": self.r, "degree_threshold": self.degree_threshold,
        }


def protection_classes(nu: DegreeDistribution, n: int, rate: Number,
                       degree_threshold: int) -> ProtectionProfile:
    """Split the information bits into a high-degree class and the rest.

    PC1 holds ``round(n * sum_{i >= threshold} nu_i)`` bits, capped at k.
    """
    _require(nu, NODE)
    R = _check_rate(rate)
    k_exact = n * R
    if k_exact.denominator != 1:
        raise ValueError(f"n * R = {float(k_exact)} is not an integer")
    k = int(k_exact)
    if degree_threshold < nu.min_degree:
        raise InfeasibleProfileError(
            f"threshold {degree_threshold} is below every degree of the distribution"
        )
    high = sum(f for d, f in nu.coeffs.items() if d >= degree_threshold)
    k1 = min(math.floor(n * high + Fraction(1, 2)), k)
    return ProtectionProfile(n=n, k=k, k1=k1, k2=k - k1, r=n - k,
                             degree_threshold=degree_threshold)


def apportion(dist: DegreeDistribution, total: int) -> dict[int, int]:
    """Integer counts per degree summing to ``total`` (largest remainder)."""
    quotas = {d: f * total for d, f in dist.coeffs.items()}
    counts = {d: math.floor(q) for d, q in quotas.items()}
    short = total - sum(counts.values())
    # ties go to the larger degree so the edge count errs high, not low
    order = sorted(quotas, key=lambda d: (quotas[d] - counts[d], d), reverse=True)
    for d in order[:short]:
        counts[d] += 1
    return counts


# Variable-node distribution of the n = 4096, R = 1/2 UEP design
REFERENCE_LAMBDA = DegreeDistribution(
    {20: "0.0025", 19: "0.0009", 18: "0.0031", 17: "0.0630",
     16: "0.3893", 3: "0.2985", 2: "0.2427"},
    perspective=EDGE,
)
REFERENCE_NU = DegreeDistribution(
    {20: "0.0005", 19: "0.0002", 18: "0.0007", 17: "0.0151",
     16: "0.0835", 3: "0.4054", 2: "0.4946"},
    perspective=NODE,
)
