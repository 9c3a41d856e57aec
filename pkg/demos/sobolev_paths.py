"""Kernel-path increments in H^r and the point-mass membership scan.

The d=2 kernel starts from a point mass, so the right increments level off at
the squared norm of the point mass instead of tending to zero; the
"limit" start convention gives a path that is right-continuous but has no jump.
"""
import numpy as np

from levywave.sobolev import delta_membership_scan, kernel_path_profile

hs = 2.0 ** -np.arange(1, 11)
for d, r, start in ((1, 0.0, "point-mass"), (1, 0.2, "point-mass"),
                    (2, -1.5, "point-mass"), (2, -1.5, "limit")):
    p = kernel_path_profile(d, r, hs, at_start=start)
    print(f"d={d} r={r:+.1f} {start:<10}  right-continuous={p.right_continuous!s:<5}  "
          f"jump={p.jump:.4f}  last increments: {np.array2string(p.right[-3:], precision=4)}")

for r in (-1.5, -1.25, -1.0):
    v = delta_membership_scan(2, r)
    print(f"point mass in H^{r}: converges={v.converges}  "
          f"partial={v.partial[-1]:.3f}  limit={v.limit}")
