"""
Finite-size key rates
=====================

The asymptotic threshold is 1 - H_Sh(e) - theta_EC - 2 mu; the finite-size
calculator instantiates every correction explicitly and reports it.
"""

import numpy as np

from eatkit import QKDParams, qkd_asymptotic_threshold, qkd_finite_key_length
from eatkit.applications import FQRACParams, fqrac_bound

e, theta, mu = 0.05, 0.2, 0.05
threshold = qkd_asymptotic_threshold(e, theta, mu)
print(f"asymptotic threshold at e={e}, theta_EC={theta}, mu={mu}: {threshold:.4f}\n")

print(f"{'n':>12} {'key bits':>16} {'rate':>10}")
for n in np.geomspace(1e5, 1e9, 9):
    report = qkd_finite_key_length(QKDParams(n=int(n), mu=mu, e=e, theta_ec=theta,
                                             epsilon=1e-6, p_omega=0.5))
    marker = " (vacuous)" if report.vacuous else ""
    print(f"{int(n):>12,} {report.key_bits:>16,.0f} {report.rate:>10.4f}{marker}")

report = qkd_finite_key_length(QKDParams(n=10**6, mu=mu, e=e, theta_ec=theta,
                                         epsilon=1e-6, p_omega=0.5))
print("\nbreakdown at n = 1e6:")
for key, value in report.breakdown.items():
    print(f"  {key:>22}: {value:,.4f}")

print("\nfully quantum random access codes: f^2 bound")
for (m, n, k) in ((1000, 100, 500), (1000, 500, 400), (2000, 100, 800)):
    rep = fqrac_bound(FQRACParams(m=m, n=n, k=k))
    marker = " (vacuous)" if rep.vacuous else ""
    print(f"  m={m:5d} n={n:4d} k={k:4d}:  f^2 < {rep.bound_on_fsq:.6f}{marker}")
