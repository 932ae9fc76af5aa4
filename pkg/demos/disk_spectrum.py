"""
Transmission eigenvalues of two concentric media on the unit disk
=================================================================

Count eigenvalues in a rectangle with the argument principle, mode by mode,
then compare the counting function with its Weyl prediction.
"""
# %%
import numpy as np

from tefree.diskmodel import DiskConfig
from tefree.regions import exponent_fit, weyl_compare
from tefree.rootscan import spectrum

cfg = DiskConfig.from_tuple((1.0, 1.0, 1.0, 4.0))
sp = spectrum(cfg, (-600, 600, -600, 600), workers=4)
lam = sp.lambdas
print(len(sp), "distinct roots, multiplicity", sp.total_multiplicity(), "modes up to", sp.k_max)

# %%
real = np.sort(lam[lam.imag == 0].real)
print("smallest real eigenvalues:", np.round(real[:5], 6))
print("largest |Im| among complex ones:", np.abs(lam.imag).max())

# %%
for row in weyl_compare(sp, cfg, [10.0, 20.0]):
    print(f"r={row.r:5.1f}  N={row.n_total:5d}  ratio={row.ratio_total:.3f}")

# %%
# The imaginary parts grow slower than |lambda| in the right half plane.
fit = exponent_fit([r for r in sp if abs(r.lam) <= 600], "re_nonneg", window=10, bins_per_decade=1)
print("envelope exponent", round(fit.beta, 3))
