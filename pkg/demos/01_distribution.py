"""
The beta-geometric law of conception delay
===========================================

A couple with per-cycle conception probability theta waits a geometric
number of failed cycles before conceiving. Letting theta vary between
couples as Beta(alpha, beta) gives the beta-geometric law. This script
tabulates it, checks it against its geometric limit and draws the pmf.

Run with ``python demos/01_distribution.py [output_dir]``.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from betageom import BetaGeometricLaw, GeometricLaw, bg_moments, geom_pmf, to_wg
from betageom.model import bg_cdf, bg_pmf_table, bg_tail

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out_dir.mkdir(exist_ok=True)

# Four populations with the same shape parameter alpha but rising mean fecundability.
laws = [BetaGeometricLaw(4, b) for b in (36, 12, 4, 2)]

for law in laws:
    m = bg_moments(law)
    wg = to_wg(law)
    print(
        f"alpha={law.alpha:g} beta={law.beta:<3g} theta={law.mean_fecundability():.4f} "
        f"mean delay={m.mean_delay:7.3f} sd={np.sqrt(m.variance):7.3f} "
        f"pi={wg.pi:.4f} shape={wg.shape:.4f}"
    )

# %%
# The first few probabilities, and how much mass lies beyond a year.
law = laws[0]
pmf = bg_pmf_table(law, 12)
print("\npmf(0..12) for", law)
print(np.round(pmf, 5))
print(f"P(X <= 12) = {bg_cdf(law, 12):.6f}, P(X > 12) = {bg_tail(law, 12):.6f}")

# %%
# Heterogeneity fattens the tail. Compare with a geometric law of the same
# mean delay: the geometric puts far less mass on very long waits.
geo = GeometricLaw(1 / (1 + law.mean_delay()))
for x in (24, 60, 120):
    geo_tail = (1 - geo.theta) ** (x + 1)
    print(f"P(X > {x:3d}): beta-geometric {bg_tail(law, x):.2e}, geometric {geo_tail:.2e}")

# %%
# With alpha and beta both huge the beta law collapses onto its mean and the
# geometric law comes back.
tight = BetaGeometricLaw(1e6, 1e6)
print("\nmax |pmf difference| vs Geometric(0.5) over 0..30:",
      max(abs(bg_pmf_table(tight, 30) - [geom_pmf(GeometricLaw(0.5), x) for x in range(31)])))

# %%
# Bar chart of the four laws.
fig, ax = plt.subplots(figsize=(7, 4))
x = np.arange(25)
width = 0.2
for k, law in enumerate(laws):
    ax.bar(x + (k - 1.5) * width, bg_pmf_table(law, 24), width, label=f"beta={law.beta:g}")
ax.set_xlabel("months to conception")
ax.set_ylabel("probability")
ax.set_title("Beta-geometric pmf, alpha = 4")
ax.legend()
fig.tight_layout()
fig.savefig(out_dir / "pmf.svg")
print(f"\nwrote {out_dir / 'pmf.svg'}")
