"""Multivariate bound through a Schur complement.

For N(theta, I_2) with a product bump prior the bound is I / 11.  The
block matrix [[risk, G^T], [G, J]] must be positive semidefinite, and so
must risk - G^T J^-1 G.
"""

import numpy as np

from vantrees import bounds as B, families as F, prior as P
from vantrees.model import identity_statistic

model = F.gaussian_location_nd(2)
prior = P.product_prior([P.quartic_bump(nodes=24)] * 2)
vm = B.van_trees_matrix(model, prior, B.identity_target(2), identity_statistic(2))

np.set_printoptions(precision=10, suppress=True)
print("Schur bound * 11:\n", vm.schur_bound * 11)
print("Bayes risk of X:\n", vm.risk)
print(f"block min eigenvalue     : {vm.block_psd.min_eigenvalue:.6f}")
print(f"risk - bound min eigval  : {vm.gap_psd.min_eigenvalue:.6f}")
print(f"pseudo-inverse needed    : {vm.pinv_used}")
