"""
Fitting the model to individual delays
======================================

Simulate a cohort, then recover the mixing law by moments, by maximum
likelihood, and by the conjugate posterior with an empirical prior.
"""

import numpy as np

from betageom import BetaGeometricLaw, SeedSpec, WaitSample, empirical_prior, fit_mle, fit_mme, posterior, sample_bg

truth = BetaGeometricLaw(4, 12)
delays = sample_bg(truth, SeedSpec(20240101, 0), 1000)
sample = WaitSample.from_delays(delays)
print(f"true theta = {truth.mean_fecundability():.4f}; sample mean delay {sample.m1:.3f}, max {delays.max()}")

# %%
# Moments: closed form, with a bootstrap for the spread.
mme = fit_mme(sample, n_boot=500)
print(f"MME  alpha={mme.alpha_hat:7.3f} beta={mme.beta_hat:7.3f} theta={mme.theta_hat:.4f} "
      f"95% CI [{mme.ci_theta[0]:.4f}, {mme.ci_theta[1]:.4f}]")

# %%
# Maximum likelihood: Newton on (log alpha, log beta); standard errors from
# the observed information and the delta method.
mle = fit_mle(sample)
print(f"MLE  alpha={mle.alpha_hat:7.3f} beta={mle.beta_hat:7.3f} theta={mle.theta_hat:.4f} "
      f"95% CI [{mle.ci_theta[0]:.4f}, {mle.ci_theta[1]:.4f}]  ({mle.diagnostics.iterations} iterations)")
print("MLE covariance of (alpha, beta):\n", np.array2string(mle.covariance, precision=4))
print(f"log-likelihood: MME {mme.log_likelihood:.3f} <= MLE {mle.log_likelihood:.3f}")

# %%
# The conjugate posterior treats all women as sharing one theta. With an
# empirical prior it lands near the homogeneous estimate n / (n + sum_x),
# which is biased low when theta really varies between couples.
for fit in (mme, mle):
    post = posterior(empirical_prior(fit), sample)
    print(f"Bayes with {fit.method} prior: theta={post.mean:.4f}")
print(f"n / (n + sum_x) = {sample.n / (sample.n + sample.sum_x):.4f}")
