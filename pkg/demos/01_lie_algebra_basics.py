# %% [markdown]
# # Lie algebra basics
# Brackets, the invariant inner product, exponentials, centralizers and the
# invariant polynomials that feed every integral family.

# %%
import numpy as np

from geoflow.liealg import (
    Ad, algebra, bracket, cartan_element, centralizer, exp_to_group, grad_invariant_poly,
    inner, invariant_poly, is_regular, random_element, random_group_element, rank_of_algebra,
)

su2 = algebra("su", 2)
e1, e2, e3 = (su2.basis_element(i) for i in range(3))
print("[e1, e2] =", bracket(e1, e2).coords)        # 2 e3
print("<e3, e3> =", inner(e3, e3))                  # 2, since <X,Y> = -Re tr(XY)
print("exp(pi/2 e3) =\n", exp_to_group(e3, np.pi / 2).matrix.round(12))

# %% Ranks: sampled minimum centralizer dimension vs closed form
for fam, n in [("su", 2), ("su", 3), ("sp", 2), ("so", 5)]:
    print(f"rank {fam}({n}) =", rank_of_algebra(algebra(fam, n)))

# %% Regular vs singular Cartan elements in su(3)
su3 = algebra("su", 3)
for params in ([1, 2, -3], [1, 1, -2]):
    xi = cartan_element(su3, params)
    print(params, "centralizer dim", centralizer(xi).dim, "regular:", is_regular(xi))

# %% Invariant polynomials are conjugation invariant; their gradients commute with xi
rng = np.random.default_rng(0)
xi = random_element(su3, rng)
g = random_group_element(su3, rng)
for k in su3.degrees:
    print(f"p{k}: {invariant_poly(k, xi):+.12f}  after Ad_g: {invariant_poly(k, Ad(g, xi)):+.12f}  "
          f"|[xi, grad p{k}]| = {bracket(xi, grad_invariant_poly(k, xi)).norm():.1e}")
