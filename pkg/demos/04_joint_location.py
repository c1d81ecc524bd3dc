"""The van Trees bound as a Cramer-Rao bound.

Shift the prior and the model together: M_alpha has density
q(theta + alpha) f_{theta + alpha}(x).  Its Fisher information at alpha = 0
is I_Q + int I_P dQ, and the Cramer-Rao bound for the bias J = S - psi
reproduces the bias-corrected van Trees bound.
"""

from vantrees import bounds as B, families as F, joint as J, prior as P
from vantrees.model import indicator_statistic

joint = J.build_joint(F.gaussian_location(), P.quartic_bump(), delta=1.0)
rec = J.van_trees_as_cramer_rao(joint, indicator_statistic(0.1), B.identity_target())
fit = J.verify_delta_is_joint_derivative(joint)

print(f"Fisher of M_alpha (finite differences): {rec.fisher_fd:.10f}")
print(f"4 ||Delta||^2                         : {rec.fisher_delta:.10f}")
print(f"I_Q + int I_P dQ                      : {rec.information:.10f}")
print(f"d gamma_J / d alpha                   : {rec.dgamma_fd:.10f} (int psi' dQ = {rec.int_psi_prime_dQ:.10f})")
print(f"Cramer-Rao bound of M_alpha           : {rec.cr_bound:.10f}")
print(f"bias-corrected van Trees bound        : {rec.corollary_bound:.10f}")
print(f"second moment of J (the Bayes risk)   : {rec.second_moment:.10f}")
print(f"remainder slope for Delta             : {fit.slope:.3f}")
