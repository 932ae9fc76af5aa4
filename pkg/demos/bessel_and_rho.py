"""
Log-scaled Bessel values and the square-root symbol
===================================================

J_k(w) is returned as (s, d, L) with J_k = s exp(L), so orders and arguments
far beyond double-precision range stay usable.
"""
# %%
import numpy as np

from tefree.csbessel import jn_scaled
from tefree.symbolcore import BoundaryGeometry, SpectralPoint, check_lemma31, rho

# %%
# J_5(3) is an ordinary number; J_500(40j) would overflow without the scale.
for k, w in ((5, 3.0), (500, 40j), (2000, 1e4j)):
    s, d, L = jn_scaled(k, w)
    print(f"k={k:5d} w={w!s:>8}  s={complex(s):.6f}  L={float(L):.3f}")

# %%
# rho(r0, m, z) is the root of rho^2 = m z - r0 with positive imaginary part.
for z, zone in ((1 + 0.5j, "Z1"), (-1.0, "Z2"), (0.3 + 1j, "Z3")):
    r = rho(np.linspace(0, 4, 5), 1.0, z)
    print(zone, np.round(r, 4))

# %%
# Lower-bound ratios for a few points; all should be >= 1.
rep = check_lemma31(SpectralPoint(0.1, 1 + 0.2j, "Z1"), BoundaryGeometry(1.0), 1.0, n_r0=2000)
print(rep.ratio_32, rep.C_33, rep.ratio_34, rep.passed)
