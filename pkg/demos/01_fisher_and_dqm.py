"""Fisher information from root densities, and what happens when the density has a kink.

The Gaussian, Bernoulli and exponential families are smooth, so the L2
remainder of the root density decays like h^2.  The squared-triangle
location family is only differentiable in quadratic mean: its remainder
decays like h^1.5, yet its Fisher information (12) is still well defined.
"""

from vantrees import families as F
from vantrees.model import dqm_certify, fisher_information, score_orthogonality

cases = [("gaussian_location", 0.0), ("bernoulli", 0.3), ("exponential_rate", 2.0),
         ("triangular_location", 0.0)]

print(f"{'family':<22}{'theta':>7}{'Fisher':>16}{'int xi_dot xi':>16}{'slope':>9}")
for name, theta in cases:
    m = F.FAMILIES[name]()
    fi = fisher_information(m, theta)[0, 0]
    orth = abs(score_orthogonality(m, theta)[0])
    slope = dqm_certify(m, theta, 0).slope
    print(f"{name:<22}{theta:>7.2f}{fi:>16.10f}{orth:>16.2e}{slope:>9.3f}")

print("\nThe triangular family sits at slope ~1.5: L2-differentiable but not smooth.")
print("Its Fisher value carries an O(spacing) error from the trapezoid rule at the kinks.")
