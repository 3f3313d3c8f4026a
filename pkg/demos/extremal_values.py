"""Largest corner-free subsets of small grids, next to Behrend-induced sets."""
from cornerlab.constructions import behrend_corner_free
from cornerlab.grid import is_corner_free, max_corner_free

print("exact maxima (d > 0 corners)")
for N in range(1, 7):
    res = max_corner_free(N, budget=5_000_000)
    flag = "" if res.exact else "  (budget hit, lower bound)"
    print(f"  N={N}: |A|={res.size:3d}  L={str(res.L):>6s} = {float(res.L):.4f}  nodes={res.nodes}{flag}")

print("\nBehrend-induced corner-free sets in [1, N]^2")
for N in (16, 64, 256, 1024):
    A = behrend_corner_free(N)
    assert is_corner_free(A, "nonzero_d")
    print(f"  N={N:5d}: |A|={len(A):7d}  density={len(A) / N ** 2:.4f}")
