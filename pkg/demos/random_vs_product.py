"""Corner counts of random sets versus product sets of the same density.

A random set of density delta has about delta^3 T(N) corners, where T(N) is
the corner count of the full grid.  A product E1 x E2 with |Ei| = beta N has
density beta^2 but about beta^4 T(N) corners, far more than delta^3 T(N).
"""
from cornerlab.constructions import expected_corner_report, product_corner_report

N, trials = 64, 100
rand = expected_corner_report(N, 0.25, trials, seed=0)
prod = product_corner_report(N, 0.5, 0.5, trials, seed=0)
T = rand.details["T"]
print(f"T({N}) = {T}")
print(f"random, delta=0.25 : mean {rand.mean:9.1f} +- {rand.stderr:6.1f}   delta^3 T = {rand.expected:9.1f}  z={rand.z:+.2f}")
print(f"product, beta=0.5  : mean {prod.mean:9.1f} +- {prod.stderr:6.1f}   beta^4 T  = {prod.expected:9.1f}  z={prod.z:+.2f}")
print(f"                     same-density random prediction {prod.details['uniform_value']:.1f}"
      f"  z={prod.details['z_uniform']:+.1f}")
