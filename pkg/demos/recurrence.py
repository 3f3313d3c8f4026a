"""Simultaneous returns of two commuting torus translations.

For Y of measure mu(Y), the points of Y whose first t joint iterates never
land in Y x Y have measure at most L(t), the largest corner-free density of
[1, t]^2 (3/4 for t = 2, 7/9 for t = 3).
"""
import numpy as np

from cornerlab.recurrence import covering_number, recurrence_constants, simultaneous_return_set, torus_system

rng = np.random.default_rng(0)
for m in (5, 8, 13):
    sys_ = torus_system(m, m)
    for p in (0.3, 0.6, 0.9):
        Y = np.flatnonzero(rng.random(sys_.size) < p).tolist()
        row = []
        for t in (1, 2, 3):
            rep = simultaneous_return_set(sys_, Y, t)
            row.append(f"t={t}: {rep.mu_Yt:.3f} <= {rep.bound}")
        print(f"m={m:2d} mu(Y)={len(Y) / sys_.size:.2f}   " + "   ".join(row))

sys_ = torus_system(6, 6)
rc = recurrence_constants(sys_, 3)
print("\nrecurrence constants on Z_6^2 (N=3): single", rc.single.max(), " simultaneous", rc.simultaneous.max())
for eps in (0.34, 0.67, 1.0):
    cov = covering_number(range(sys_.size), sys_, eps)
    print(f"covering number at eps={eps}: {cov.size}{'' if cov.exact else ' (greedy)'}")
