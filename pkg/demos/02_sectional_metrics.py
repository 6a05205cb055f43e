# %% [markdown]
# # Sectional operators and the sum metric
# phi = D on a Cartan subalgebra t and ad_a^{-1} ad_b on its complement.
# Choosing b = f(a) with f increasing makes phi positive definite.

# %%
import numpy as np

from geoflow.dynamics import CotangentState
from geoflow.errors import NotRegular
from geoflow.liealg import Subspace, algebra, random_element, random_group_element
from geoflow.metrics import (
    MetricSpec, build_sectional, default_sectional, hamiltonian, is_positive_definite, velocity,
)

su2 = algebra("su", 2)
e1, e3 = su2.basis_element(0), su2.basis_element(2)
phi = build_sectional(Subspace.span(su2, [e3]), e3, 2 * e3, [[1.0]])
print("phi(e1) =", phi.apply(e1).coords, " phi(e3) =", phi.apply(e3).coords)
print("positive definite:", is_positive_definite(phi))
print("b = -a:", is_positive_definite(build_sectional(Subspace.span(su2, [e3]), e3, -1 * e3, [[1.0]])))

# %% A positive-definite pair on SU(3)
su3 = algebra("su", 3)
a1 = np.array([1.0, 2.0, -3.0]); b1 = a1 + 0.2 * a1 ** 2
a2 = np.array([3.0, -1.0, -2.0]); b2 = a2 + 0.1 * a2 ** 3
left = default_sectional(su3, a1, b1 - b1.mean(), [[1.5, 0.2], [0.2, 1.0]])
right = default_sectional(su3, a2, b2 - b2.mean(), 1.2 * np.eye(2))
print("min eigenvalues:", is_positive_definite(left)[1], is_positive_definite(right)[1])

try:
    default_sectional(su3, [1, 1, -2], [1, 2, -3])
except NotRegular as exc:
    print("singular a rejected:", exc)

# %% H = 1/2 <phi_L m, m> + 1/2 <phi_R n, n>, with n = Ad_g m
metric = MetricSpec(left, right)
rng = np.random.default_rng(1)
x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
print("H =", hamiltonian(metric, x))
print("Omega = dH/dm =", velocity(metric, x).coords.round(4))
