"""Declarative experiment configuration.

A single YAML file describes the code, the modulation plans with their
SNR grids, the stop rule and the secrecy targets. The canonical JSON form
of the validated configuration is hashed; every artifact written from it
carries that hash, the seed and the package version.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from . import __version__
from .construction import UepCode, build
from .degrees import (
    EDGE, NODE, REFERENCE_NU, DegreeDistribution, ProtectionProfile, concentrated_check,
    edge_to_node, protection_classes,
)
from .modem import BPSK, PER_CODED_BIT, PER_INFO_BIT, ModulationPlan, build_constellation
from .montecarlo import StopRule
from .outage import SecrecyTargets


class SpecError(ValueError):
    """Inconsistent or incomplete experiment configuration."""


PRESETS = {
    "paper_4096": {
        "nu": {d: str(v) for d, v in REFERENCE_NU.coeffs.items()},
        "n": 4096, "rate": "1/2", "degree_threshold": 16, "separation_effort": 2,
    },
    "regular_3_6": {
        "nu": {3: "1"}, "n": 1024, "rate": "1/2", "degree_threshold": 3, "separation_effort": 1,
    },
}

DEFAULT_MODULATIONS = {"bpsk": {"order": 2, "snr_db": [0.0, 0.5, 1.0, 1.5, 2.0]}}


@dataclass(frozen=True)
class ModulationSpec:
    name: str
    order: int
    labeling: str = "yarg"
    parity_on_qam: bool = False
    snr_db: tuple = ()

    def plan(self, convention: str) -> ModulationPlan:
        if self.order == 2:
            return ModulationPlan(snr_convention=convention)
        c = build_constellation(self.order, self.labeling)
        return ModulationPlan(BPSK, c, c if self.parity_on_qam else BPSK, convention)


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated experiment description.

    Attributes
    ----------
    nu : DegreeDistribution
        Variable-node degree distribution (node perspective).
    n, rate, degree_threshold : int, Fraction, int
        Code length, design rate and the PC1 degree threshold.
    modulations : tuple of ModulationSpec
        One entry per simulated plan, each with its own SNR grid.
    """

    name: str
    nu: DegreeDistribution
    n: int
    rate: Fraction
    degree_threshold: int
    seed: int = 1
    separation_effort: int = 1
    modulations: tuple = ()
    delta: float = 1e-4
    eps: float = 0.1
    stop: StopRule = field(default_factory=StopRule)
    fading: bool = False
    max_iter: int = 100
    snr_convention: str = PER_INFO_BIT
    eta_decimals: int | None = 2
    eta_max: float | None = None
    output_dir: str = "results"
    workers: int = 1
    preset: str | None = None

    # -- derived objects -------------------------------------------------

    @property
    def check(self) -> DegreeDistribution:
        return concentrated_check(self.nu, self.rate)

    @property
    def profile(self) -> ProtectionProfile:
        return protection_classes(self.nu, self.n, self.rate, self.degree_threshold)

    @property
    def targets(self) -> SecrecyTargets:
        return SecrecyTargets(self.delta, self.eps)

    def build_code(self) -> UepCode:
        return build(self.nu, self.check, self.profile, seed=self.seed,
                     separation_effort=self.separation_effort)

    def modulation(self, name: str) -> ModulationSpec:
        for m in self.modulations:
            if m.name == name:
                return m
        raise SpecError(f"no modulation named {name!r}; have {[m.name for m in self.modulations]}")

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        """Canonical plain form; excludes run-only knobs (workers, output_dir)."""
        return {
            "name": self.name,
            "preset": self.preset,
            "nu": {str(d): str(v) for d, v in sorted(self.nu.coeffs.items())},
            "n": self.n,
            "rate": str(self.rate),
            "degree_threshold": self.degree_threshold,
            "seed": self.seed,
            "separation_effort": self.separation_effort,
            "modulations": [
                {"name": m.name, "order": m.order, "labeling": m.labeling,
                 "parity_on_qam": m.parity_on_qam, "snr_db": list(m.snr_db)}
                for m in self.modulations
            ],
            "targets": {"delta": self.delta, "eps": self.eps},
            "stop": {"min_errors": self.stop.min_errors, "max_frames": self.stop.max_frames,
                     "batch": self.stop.batch, "track": list(self.stop.track)},
            "fading": self.fading,
            "max_iter": self.max_iter,
            "snr_convention": self.snr_convention,
            "eta": {"decimals": self.eta_decimals, "max": self.eta_max},
        }

    @property
    def spec_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @property
    def code_hash(self) -> str:
        """Hash of the fields that determine the parity-check matrix."""
        d = self.to_dict()
        keys = ("nu", "n", "rate", "degree_threshold", "seed", "separation_effort")
        canon = json.dumps({k: d[k] for k in keys}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"spec_hash": self.spec_hash, "seed": self.seed, "version": __version__}


def _dist(raw, perspective) -> DegreeDistribution:
    try:
        coeffs = {int(d): (str(v) if isinstance(v, float) else v) for d, v in raw.items()}
        return DegreeDistribution(coeffs, perspective=perspective)
    except (TypeError, AttributeError) as exc:
        raise SpecError(f"bad degree distribution {raw!r}: {exc}") from exc


def _rate(raw) -> Fraction:
    try:
        r = Fraction(str(raw))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"bad rate {raw!r}") from exc
    if not 0 < r < 1:
        raise SpecError(f"rate must lie in (0, 1), got {raw}")
    return r


def spec_from_dict(raw: dict) -> ExperimentSpec:
    """Validate a raw mapping (as loaded from YAML) into an ExperimentSpec."""
    raw = dict(raw or {})
    code = dict(raw.get("code") or {})
    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise SpecError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = dict(PRESETS[preset])
        if "nu" in code or "lambda" in code:
            base.pop("nu", None)
        code = {**base, **code}
    if "nu" in code and "lambda" in code:
        raise SpecError("give either nu (node perspective) or lambda (edge perspective), not both")
    if "nu" in code:
        nu = _dist(code["nu"], NODE)
    elif "lambda" in code:
        nu = edge_to_node(_dist(code["lambda"], EDGE))
    else:
        raise SpecError("code section needs a degree distribution (nu or lambda) or a preset")
    for key in ("n", "rate", "degree_threshold"):
        if key not in code:
            raise SpecError(f"code.{key} is required")
    rate = _rate(code["rate"])
    n = int(code["n"])
    if n <= 0 or (n * rate).denominator != 1:
        raise SpecError(f"n={n} and rate={rate} do not give an integer number of information bits")

    mods = raw.get("modulations") or DEFAULT_MODULATIONS
    mod_specs = []
    for name, m in mods.items():
        m = dict(m or {})
        order = int(m.get("order", 2))
        grid = tuple(float(x) for x in m.get("snr_db", ()))
        if not grid:
            raise SpecError(f"modulation {name!r} needs a non-empty snr_db grid")
        if list(grid) != sorted(set(grid)):
            raise SpecError(f"modulation {name!r}: snr_db must be strictly increasing")
        ms = ModulationSpec(str(name), order, str(m.get("labeling", "yarg")),
                            bool(m.get("parity_on_qam", False)), grid)
        try:
            ms.plan(PER_INFO_BIT)
        except ValueError as exc:
            raise SpecError(f"modulation {name!r}: {exc}") from exc
        mod_specs.append(ms)

    tg = dict(raw.get("targets") or {})
    st = dict(raw.get("stop") or {})
    eta = dict(raw.get("eta") or {})
    conv = raw.get("snr_convention", PER_INFO_BIT)
    if conv not in (PER_INFO_BIT, PER_CODED_BIT):
        raise SpecError(f"snr_convention must be {PER_INFO_BIT} or {PER_CODED_BIT}")
    stop = StopRule(int(st.get("min_errors", 100)), int(st.get("max_frames", 10**7)),
                    int(st.get("batch", 32)), tuple(st.get("track", ("pc1", "pc2"))))
    if stop.min_errors < 1 or stop.max_frames < 1 or stop.batch < 1:
        raise SpecError("stop rule values must be positive")
    if not set(stop.track) <= {"frame", "pc1", "pc2"}:
        raise SpecError(f"stop.track entries must be frame, pc1 or pc2; got {stop.track}")

    spec = ExperimentSpec(
        name=str(raw.get("name", preset or "experiment")),
        nu=nu, n=n, rate=rate, degree_threshold=int(code["degree_threshold"]),
        seed=int(raw.get("seed", 1)),
        separation_effort=int(code.get("separation_effort", 1)),
        modulations=tuple(mod_specs),
        delta=float(tg.get("delta", 1e-4)), eps=float(tg.get("eps", 0.1)),
        stop=stop, fading=bool(raw.get("fading", False)),
        max_iter=int(raw.get("max_iter", 100)), snr_convention=conv,
        eta_decimals=eta.get("decimals", 2), eta_max=eta.get("max"),
        output_dir=str(raw.get("output_dir", "results")),
        workers=int(raw.get("workers", 1)), preset=preset,
    )
    if spec.separation_effort < 1 or spec.max_iter < 1 or spec.workers < 1:
        raise SpecError("separation_effort, max_iter and workers must be >= 1")
    try:
        spec.targets
        spec.profile
    except ValueError as exc:
        if type(exc).__name__ == "InfeasibleProfileError":
            raise
        raise SpecError(str(exc)) from exc
    return spec


def load_spec(path, **overrides) -> ExperimentSpec:
    """Read a YAML config; keyword overrides replace top-level keys."""
    path = Path(path)
    if not path.exists():
        raise SpecError(f"config file {path} not found")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: top level must be a mapping")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return spec_from_dict(raw)


def small_code(seed: int = 1) -> UepCode:
    """n=16, R=1/2 code with four PC1 and four PC2 columns (exhaustive-ML scale)."""
    nu = DegreeDistribution({4: "0.25", 3: "0.25", 2: "0.5"})
    prof = protection_classes(nu, 16, Fraction(1, 2), 4)
    return build(nu, concentrated_check(nu, Fraction(1, 2)), prof, seed=seed)
