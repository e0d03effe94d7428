"""
Invariant measures on the real projective line
==============================================

R_theta diag(a, 1/a) acts on lines through the origin.  Through the Cayley
transform this becomes a Blaschke factor on the unit circle.
"""

import math

import numpy as np

from dslab import gl2r
from dslab.matnum import RngStream

# classification changes with theta
for theta in (0.1, 0.8, 1.5):
    A = gl2r.rotation(theta) @ np.diag([2.0, 0.5])
    print(theta, gl2r.classify(A))

# the conjugate circle map and its physical fixed point
b = gl2r.cayley_blaschke(1.3, 1.0)
alpha = gl2r.physical_fixed_point(b)
print("c =", b.c, " alpha =", alpha, " |alpha| =", abs(alpha))

# elliptic case: a Poisson kernel density in the angle of the line
ac = gl2r.acip_of_matrix(gl2r.rotation(1.0) @ np.diag([1.3, 1 / 1.3]))
w = np.linspace(-1.5, 1.5, 7)
print(np.c_[w, ac.density_angle(w), ac.cdf_angle(w)].round(4))

# averaging the pushforwards over theta flattens everything out
dt = gl2r.theta_average_pushforward(gl2r.cayley_blaschke(2.0, 0.0), n_iter=10,
                                    grid_size=20_000, theta_samples=200, bins=20)
print("sup |density - 1| =", round(dt.sup_deviation(), 4))

# negative determinant: spectral radius law and the weighted angle check
a = 0.5
for rho in (1.0, 1.25, 1.5, 1.75, 2.0):
    print(rho, round(float(gl2r.negdet_rho_cdf(a, rho)), 4))
r = gl2r.verify_ds_gl2r_negdet(a, 200_000, RngStream(0))
print("weighted angle KS", round(r.ks_distance, 4))

# spectral radius against norm growth
for f in ("log", "id"):
    r = gl2r.rho_norm_equality(np.diag([2.0, 0.5]), f)
    print(f, round(r.extras["lhs"], 6), round(r.extras["rhs"], 6))
print("log(5/4) =", round(math.log(1.25), 6))
