"""
Eigenvalues on the negative axis
================================

With (c1, n1, c2, n2) = (1, 4, 2, 1) the speeds differ and a sequence of
real negative eigenvalues appears, counted by 2 r sqrt(2/3).
"""
# %%
import math

from tefree.diskmodel import DiskConfig
from tefree.regions import weyl_compare
from tefree.rootscan import spectrum

cfg = DiskConfig.from_tuple((1.0, 4.0, 2.0, 1.0))
sp = spectrum(cfg, (-1000, 0, -50, 50), workers=4)
neg = sorted(r.lam.real for r in sp if r.lam.real < 0)
print(len(neg), "negative eigenvalues; first few:", [round(x, 4) for x in neg[-4:]])

# %%
for row in weyl_compare(sp, cfg, [15.0, 25.0]):
    print(f"r={row.r}  N-={row.n_minus}  predicted {2 * row.r * math.sqrt(2 / 3):.2f}")
