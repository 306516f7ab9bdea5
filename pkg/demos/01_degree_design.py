"""Degree profile, check distribution and protection classes.

Run with ``python demos/01_degree_design.py``.
"""

# %%
from fractions import Fraction

from uepbcc import REFERENCE_LAMBDA, REFERENCE_NU, concentrated_check, edge_to_node, node_to_edge, protection_classes

# The published profile is given from both sides of the graph.
print("lambda(x) =", REFERENCE_LAMBDA.polynomial())
print("nu(x)     =", REFERENCE_NU.polynomial())

# %%
# Converting the edge profile to node fractions shows that the two printed
# lists are not exactly consistent on degree 16; everything below uses nu.
conv = edge_to_node(REFERENCE_LAMBDA)
for d in REFERENCE_NU.degrees:
    print(f"degree {d:2d}: printed nu {float(REFERENCE_NU[d]):.4f}  from lambda {float(conv[d]):.4f}")

# %%
# Concentrated check side at rate 1/2: mean degree 2 * sum(nu_j j).
c = concentrated_check(REFERENCE_NU, Fraction(1, 2))
print("c(x) =", c.polynomial(3), " mean", float(c.mean()))

# %%
prof = protection_classes(REFERENCE_NU, 4096, Fraction(1, 2), degree_threshold=16)
print(f"PC1 (public) {prof.k1}, PC2 (secret) {prof.k2}, PC3 (parity) {prof.r}")

# %%
# Round trip back to the edge side.
print("edge profile from nu:", node_to_edge(REFERENCE_NU).polynomial())
