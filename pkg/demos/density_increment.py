"""Run the increment driver on a Behrend-induced corner-free set and print its trace."""
import sys

from cornerlab.constructions import behrend_corner_free
from cornerlab.increment import driver

N = int(sys.argv[1]) if len(sys.argv) > 1 else 128
A = behrend_corner_free(N)
print(f"N={N}  |A|={len(A)}  density in [1,N]^2 = {len(A) / N ** 2:.4f}")
out = driver(A, N)
print(f"outcome: {out.kind} ({out.reason})")
print("densities per accepted iteration:", ", ".join(f"{d:.4f}" for d in out.densities))
for r in out.trace:
    print(f"  step {r.step:2d}  {r.lemma:>20s}  case {r.case!s:>13s}  {r.before:.4f} -> {r.after:.4f}"
          f"  Bohr d={r.bohr['dim']} N={r.bohr['N']}")
