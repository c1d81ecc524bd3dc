"""One-dimensional van Trees bound, and a case where it is attained.

For a N(theta, 1) observation and a N(0, tau^2) prior the posterior mean is
x tau^2 / (1 + tau^2), and its Bayes risk tau^2 / (1 + tau^2) equals the
bound 1 / (1/tau^2 + 1).  A compactly supported bump prior gives a strictly
smaller bound than the risk of the raw observation.
"""

from vantrees import bounds as B, families as F, prior as P
from vantrees.model import constant_statistic, identity_statistic

# the tau = 2 prior is truncated at 8 sd, so the model must cover |theta| <= 16
model = F.gaussian_location(theta_range=(-20.0, 20.0))
psi = B.identity_target()

print(f"{'tau':>6}{'bound':>16}{'posterior-mean risk':>22}{'key-eq residual':>18}")
for tau in (0.5, 1.0, 2.0):
    q = P.gaussian_prior(0.0, tau)
    post = P.posterior_mean(model, q)
    rep = B.van_trees_1d(model, q, psi, post)
    risk = rep.diagnostics["bayes_risk"]
    key = B.key_equality_residual(model, q, psi, post, clamp=40.0)
    print(f"{tau:>6.1f}{rep.bound:>16.12f}{risk:>22.12f}{key:>18.2e}")

bump = P.quartic_bump()
rep = B.van_trees_1d(model, bump, psi, identity_statistic().clamped(10.0))
print(f"\nquartic bump prior: I_Q = {rep.I_Q:.10f}, bound = {rep.bound:.10f} (1/11 = {1 / 11:.10f})")
print(f"risk of X itself  : {rep.diagnostics['bayes_risk']:.10f}")

biased = B.van_trees_corollary(model, P.gaussian_prior(1.0, 1.0), psi, constant_statistic(0.0))
print(f"\nS = 0 against a N(1, 1) prior: corollary bound {biased.bound:.6f}, "
      f"risk {biased.diagnostics['bayes_risk']:.6f}")
