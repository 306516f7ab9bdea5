"""Outage analytics: the security-gap table and the Eve outage curve."""

# %%
import numpy as np

from uepbcc.channel import SnrValue
from uepbcc.outage import format_table, omega_curve, optimal_eve_snr, reproduce_table1, table_row

rows = reproduce_table1(eta_decimals=2)
print(format_table([table_row(name, rep) for name, rep in rows]))

# %%
# Eve's outage omega(gamma_E) for the 64-QAM thresholds: one interior minimum.
bp, a = SnrValue.from_db(0.75), SnrValue.from_db(12.25)
x = np.arange(-10, 31, 2.5)
for g, w in zip(x, omega_curve(bp, a, x)):
    print(f"gamma_E {g:6.1f} dB  omega {w:.3f}")
print("minimum at", round(optimal_eve_snr(bp, a).db, 2), "dB")

# %%
# Fading prediction from a measured AWGN curve (see 03_waterfall.py):
#   from uepbcc.montecarlo import ErrorRateCurve, predict_fading_bler
#   predict_fading_bler(ErrorRateCurve.from_csv("results/paper_4096/curve_bpsk.csv"), 10.0)
