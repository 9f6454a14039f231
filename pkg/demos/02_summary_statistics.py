"""
Conjugate Bayes on summary statistics
=====================================

Only two numbers survive from the survey: 3767 women and a total of 78112
months of delay. That is enough for the geometric estimate and for the
conjugate Beta posterior, but not for moment or likelihood fits of the
heterogeneity, which need the individual delays.
"""

from betageom import BetaPrior, fit_geometric, posterior, shrinkage_check
from betageom.datasets import nfhs3_summary
from betageom.errors import MissingMomentsError
from betageom.estimate import fit_mme

summary = nfhs3_summary()
print(f"n = {summary.n}, total delay = {summary.sum_x}, mean delay = {summary.m1:.5f}")

# %%
# Homogeneous baseline: every couple shares one theta, so theta = 1 / (1 + mean delay).
print(f"geometric estimate: {fit_geometric(summary).theta:.8f}")

# %%
# The heterogeneity fits need the second moment, which a summary lacks.
try:
    fit_mme(summary)
except MissingMomentsError as exc:
    print("moment fit:", exc)

# %%
# Priors from moment and ML estimates reported for this survey of (alpha, beta).
for label, (mu, nu) in {"moment prior": (20.4669, 403.663), "ML prior": (20.94735, 413.6093)}.items():
    post = posterior(BetaPrior(mu, nu), summary)
    lo, hi = post.credible_interval
    print(f"{label:12s} Beta({post.a_post:.4f}, {post.b_post:.4f}) mean {post.mean:.8f}  95% [{lo:.5f}, {hi:.5f}]")

# %%
# The posterior mean sits between the prior mean and the data-only estimate;
# with 3767 women the data dominate.
w = shrinkage_check(BetaPrior(20.4669, 403.663), summary)
print(f"prior {w.prior_mean:.5f} >= posterior {w.posterior_mean:.6f} >= data {w.data_mean:.6f}")
