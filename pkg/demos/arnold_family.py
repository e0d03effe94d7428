"""
Mode locking in the Arnold family
=================================

x -> x + c + eps sin(2 pi x) on the circle.  Parameters split into
tongues with rational rotation number and the elliptic rest.
"""

from dslab import arnold

eps = 0.05

for t in arnold.tongues_up_to(eps, 5):
    print(f"{t.p}/{t.q}  [{t.c_lo:+.6f}, {t.c_hi:+.6f}]  width {t.measure:.3e}")

# rotation number as a function of c: flat steps on the tongues
cs = [0.0, 0.1, 0.3, 0.3355, 0.5, 0.618]
print(arnold.rotation_numbers(eps, cs, 20_000).round(5))

# the fixed-point curve of the 0/1 tongue is c = -eps sin(2 pi x)
cv = arnold.trace_rotation_curve(eps, 0, 1, 8)
print(cv.x.round(4), cv.c.round(4), cv.stability)

# hyperbolic density against the elliptic leftover, small budget
rep = arnold.obstruction_check(eps, q_max=3, bins=20, n_params=1000, n_iter=5000)
print("elliptic fraction", round(rep.elliptic_fraction, 3))
print("bins with H < E:", rep.violation_bins)
