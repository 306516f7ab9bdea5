"""AWGN and quasi-static Rayleigh fading, SNR units and per-frame seeding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modem import PER_CODED_BIT, PER_INFO_BIT, ModulationPlan

# stream tags for per-frame generators
STREAM_BITS = 1
STREAM_FADING = 2
STREAM_NOISE = 3


@dataclass(frozen=True, order=True)
class SnrValue:
    """An SNR stored in linear scale."""

    linear: float

    def __post_init__(self):
        if not self.linear > 0:
            raise ValueError(f"SNR must be positive, got {self.linear}")

    @classmethod
    def from_db(cls, db: float) -> "SnrValue":
        return cls(10.0 ** (db / 10.0))

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.linear)

    def __float__(self):
        return float(self.linear)

    def __repr__(self):
        return f"SnrValue({self.db:.4f} dB)"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ChannelRealization:
    h: complex
    n0: float


def frame_rng(master_seed: int, point: int, frame: int, stream: int) -> np.random.Generator:
    """Generator for one frame, independent of any other frame or stream."""
    return np.random.default_rng(np.random.SeedSequence([master_seed & (2**64 - 1), point, frame, stream]))


def sample_fading(rng: np.random.Generator, size=None):
    """h = x + iy with x, y ~ N(0, 1/2); E|h|^2 = 1."""
    x = rng.normal(0.0, math.sqrt(0.5), size)
    y = rng.normal(0.0, math.sqrt(0.5), size)
    return x + 1j * y


def complex_noise(rng: np.random.Generator, n0: float, shape) -> np.ndarray:
    """Circularly symmetric Gaussian noise with total variance n0."""
    s = math.sqrt(n0 / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit(symbols, realization: ChannelRealization, rng: np.random.Generator) -> np.ndarray:
    """y = h s + n with the same h over the whole frame."""
    s = np.asarray(symbols)
    return realization.h * s + complex_noise(rng, realization.n0, s.shape)


def energy_per_bit(plan: ModulationPlan, code) -> float:
    """Unit-energy symbols in a frame divided by the bits the SNR refers to."""
    bits = code.k if plan.snr_convention == PER_INFO_BIT else code.n
    return plan.n_symbols(code) / bits


def n0_from_snr(snr: SnrValue | float, plan: ModulationPlan, code) -> float:
    """N0 such that Eb/N0 equals ``snr`` under the plan's convention."""
    g = float(snr)
    if g <= 0:
        raise ValueError("SNR must be positive")
    return energy_per_bit(plan, code) / g


def snr_from_n0(n0: float, plan: ModulationPlan, code) -> SnrValue:
    return SnrValue(energy_per_bit(plan, code) / n0)
