"""Gray versus Yarg labelling on square and cross QAM."""

# %%
import numpy as np

from uepbcc.modem import build_constellation, demap, mean_adjacent_distance

for order in (64, 128, 512, 2048):
    g = mean_adjacent_distance(build_constellation(order, "gray"))
    y = mean_adjacent_distance(build_constellation(order, "yarg"))
    print(f"{order:5d}-QAM  bits flipped between neighbours: gray {g:.3f}  yarg {y:.3f}")

# %%
# A noisy 64-QAM symbol: Yarg spreads uncertainty over more bits, which
# is what hurts an eavesdropper close to threshold.
rng = np.random.default_rng(0)
for lab in ("gray", "yarg"):
    c = build_constellation(64, lab)
    x = c.points[rng.integers(0, 64, 20000)]
    y = x + np.sqrt(0.02 / 2) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    llr = demap(y, 1.0, 0.02, c).reshape(-1, 6)
    print(lab, "mean |LLR| per bit:", np.round(np.abs(llr).mean(axis=0), 1))

# %%
build_constellation(128, "yarg").to_csv("qam128_yarg.csv")
print("wrote qam128_yarg.csv")
