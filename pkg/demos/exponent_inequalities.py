"""
Eigenvalue products versus volume growth
========================================

Compare the Haar mean of log |lambda_1 ... lambda_k| of U A with the mean
log volume growth of A on a random k-plane.
"""

import numpy as np

from dslab.matnum import RngStream, haar_orthogonal
from dslab.verify import estimate_inequality, random_exponent_sphere

A = np.diag([4.0, 2.0, 1.0])

for field in ("complex", "real"):
    for k in (1, 2, 3):
        r = estimate_inequality(A, field, k, "log", 100_000, RngStream(10 * k))
        e = r.extras
        print(f"{field:7s} k={k}  lhs {e['lhs']:.4f}  rhs {e['rhs']:.4f}  "
              f"gap {r.estimate:+.4f} +- {r.std_error:.4f}")

# mean log stretch of a uniformly random unit vector, after scaling to |det| = 1
for M in (np.diag([2.0, 0.5]), haar_orthogonal(3, 0), np.diag([3.0, 1.0, 0.2])):
    r = random_exponent_sphere(M, 100_000, RngStream(5))
    print(f"{r.estimate:+.5f} +- {r.std_error:.5f}")
