"""
Averaging eigenvector measures over Haar cosets
===============================================

For a fixed matrix A, each product U A (U Haar on the unitary group) gets
an atomic measure on its eigenvector flags.  Averaging over U recovers the
uniform measure.  Equal atom weights do not.
"""

import numpy as np

from dslab.dsmeasure import ds_measure_flag, ds_perm_weights
from dslab.matnum import RngStream, eig_by_modulus_batch, haar_unitary_batch
from dslab.verify import verify_ds_property_cp, verify_ds_property_flag, weighted_ks

# the weight of each flag ordering depends only on the eigenvalue moduli
print(ds_perm_weights([2.0, 1.0]).weights)
print(ds_perm_weights([4.0, 2.0, 1.0]).as_array().round(4))

# one measure: six flags, each invariant under A
A = np.diag([4.0, 2.0, 1.0])
mu = ds_measure_flag(A)
print(len(mu), mu.weights.round(4))

# the coset average on the projective line, d = 2
r = verify_ds_property_cp(np.diag([2.0, 0.5]), 200_000, RngStream(0))
print(r.name, "weighted KS", round(r.ks_distance, 4), "pass" if r.passed else "FAIL")

# control: equal weights on both eigenvectors
U = haar_unitary_batch(200_000, 2, RngStream(1))
_, vecs, ok = eig_by_modulus_batch(U @ np.diag([2.0, 0.5]))
s = np.abs(vecs[ok][:, 0, :]) ** 2
print("equal weights KS", round(weighted_ks(s.ravel(), None, lambda x: x), 4))

# the same on complete flags in dimension 3
for rep in verify_ds_property_flag(A, 100_000, rng=RngStream(2)):
    print(rep.name, f"{rep.estimate:+.5f} +- {rep.std_error:.5f}")
