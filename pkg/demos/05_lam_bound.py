"""Local asymptotic minimax bound and a degenerate direction.

Gaussian location: Gamma(c, n) = (1 + I_H / c^2)^-1 increases to the limit 1,
which the sample mean attains.  When I_P has a kernel, a loss looking along
the kernel sees the bound grow like c^2 instead of converging.
"""

from vantrees import families as F, lam as L
from vantrees.model import sample_mean

inst = L.LamInstance(F.gaussian_location(), 0.0, c_grid=(1.0, 2.0, 5.0, 10.0), n_grid=(10_000,))
table = L.lam_bound(inst)
print(f"I_H = {inst.I_H[0, 0]:.6f}, limit bound = {table.limit:.10f}")
for row in table.rows:
    print(f"  c = {row['c']:>4g}  n = {row['n']:>6d}  finite bound = {row['bound_finite']:.10f}")

small = L.LamInstance(F.gaussian_location(), 0.0, c_grid=(1.0,), n_grid=(200,))
mm = L.local_minimax_risk(small, 1.0, 200, sample_mean(1), seed=7, n_draws=20_000)
print(f"\nsample mean, n = 200: local minimax risk {mm.sup:.4f} +- {mm.se:.4f}")

probe_inst = L.LamInstance(F.first_coordinate_gaussian(), [0.0, 0.0], c_grid=(5.0,), n_grid=(10_000,))
probe = L.singular_probe(probe_inst, [0.0, 1.0], c_values=(2.5, 5.0, 10.0, 20.0))
print("\nloss (theta_2)^2 with I_P = diag(1, 0):")
for c, b, cf in zip(probe.c, probe.bounds, probe.closed_form):
    print(f"  c = {c:>5g}  bound = {b:>10.4f}  c^2 / I_H = {cf:>10.4f}")
print("successive ratios:", [round(float(r), 6) for r in probe.ratios()])
