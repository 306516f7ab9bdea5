"""Unequal-error-protection LDPC coding for the broadcast channel with confidential messages.

Degree design, zigzag code construction, QAM modem with Gray/Yarg
labelings, Rayleigh block-fading channel, LLR sum-product decoding, a
seeded Monte Carlo harness and closed-form outage analytics.
"""

__version__ = "0.1.0"

from .channel import SnrValue, db_to_linear, linear_to_db  # noqa: E402
from .construction import UepCode, build, load_code, save_code  # noqa: E402
from .decoder import SpaDecoder, decode  # noqa: E402
from .degrees import (  # noqa: E402
    REFERENCE_LAMBDA, REFERENCE_NU, DegreeDistribution, ProtectionProfile, concentrated_check,
    edge_to_node, node_to_edge, protection_classes,
)
from .modem import ModulationPlan, build_constellation, demap, modulate  # noqa: E402
from .montecarlo import ErrorRateCurve, StopRule, extract_thresholds, predict_fading_bler, run_sweep  # noqa: E402
from .outage import ThresholdSet, full_report, reproduce_table1  # noqa: E402

__all__ = [
    "SnrValue", "db_to_linear", "linear_to_db", "UepCode", "build", "load_code", "save_code",
    "SpaDecoder", "decode", "REFERENCE_LAMBDA", "REFERENCE_NU", "DegreeDistribution", "ProtectionProfile",
    "concentrated_check", "edge_to_node", "node_to_edge", "protection_classes", "ModulationPlan",
    "build_constellation", "demap", "modulate", "ErrorRateCurve", "StopRule", "extract_thresholds",
    "predict_fading_bler", "run_sweep", "ThresholdSet", "full_report", "reproduce_table1",
]
