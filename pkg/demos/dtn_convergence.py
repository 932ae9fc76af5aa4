"""
How well does rho approximate the disk Dirichlet-to-Neumann symbol?
===================================================================

At z = -1 on the unit disk the exact symbol is i I_k'(1/h)/I_k(1/h)-like.
We tabulate the weighted per-mode error of three approximations.
"""
# %%
import numpy as np

from tefree.diskmodel import dtn_compare, exact_dtn
from tefree.symbolcore import SpectralPoint

hs = 2.0 ** -np.arange(4, 11)
rows = []
for h in hs:
    sp = SpectralPoint(h, -1.0, "Z2")
    rows.append([dtn_compare(sp, 1.0, 1.0, correction=c).max_error for c in ("none", "lemma35", "transport")])
rows = np.array(rows)

# %%
print("     h        rho      rho+h*b   transport")
for h, r in zip(hs, rows):
    print(f"{h:9.2e}  {r[0]:9.3e}  {r[1]:9.3e}  {r[2]:9.3e}")
for j, name in enumerate(("none", "lemma35", "transport")):
    print(name, "slope", round(np.polyfit(np.log(hs), np.log(rows[:, j]), 1)[0], 3))

# %%
# The zero mode against its two-term expansion i(1 - h/2).
for h in hs[::2]:
    v = exact_dtn(0, SpectralPoint(h, -1.0, "Z2"), 1.0, 1.0, 1.0)
    print(f"h={h:.2e}  (Im v - 1 + h/2)/h^2 = {(v.imag - 1 + h / 2) / h**2:.5f}")
