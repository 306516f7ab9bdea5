"""A short error-rate sweep of the n=4096 code with all-BPSK mapping.

A few minutes on one core; raise ``max_frames`` for smoother curves.
"""

# %%
import time

from uepbcc.construction import count_four_cycles, separation_score
from uepbcc.experiment import spec_from_dict
from uepbcc.modem import ModulationPlan
from uepbcc.montecarlo import StopRule, run_sweep

spec = spec_from_dict({"preset": "paper_4096", "seed": 1})
t0 = time.time()
code = spec.build_code()
print(f"built in {time.time() - t0:.1f} s: 4-cycles {count_four_cycles(code.h)}, "
      f"checks shared by PC1 and PC2 {separation_score(code)} of {code.r}")

# %%
curve = run_sweep(code, ModulationPlan(), [0.5, 0.75, 1.0, 1.25, 1.5],
                  StopRule(min_errors=50, max_frames=1000), master_seed=1,
                  progress=lambda p: print(f"{p.snr_db:5.2f} dB  frames {p.frames:5d}  "
                                           f"Pp {p.Pp:.2e}  Ps {p.Ps:.2e}", flush=True))

# %%
# gnuplot-ready two-column files
for path in curve.write_dat("waterfall_bpsk"):
    print("wrote", path)
