"""Numerical laboratory for eigenvector measures averaged over Haar cosets.

Modules
-------
matnum
    Haar sampling, eigen-systems ordered by modulus, Gram determinants.
dsmeasure
    Permutation weights and atomic measures on flags and projective space.
verify
    Monte Carlo checks of the Haar averaging property and related means.
gl2r
    GL(2, R) on the projective line: Blaschke conjugacy, Poisson densities,
    negative-determinant laws.
arnold
    The Arnold circle-map family: tongues, rotation curves, leftover density.
cli
    Command-line front end (``dslab`` / ``python -m dslab``).
"""
__version__ = "0.1.0"
