# %% [markdown]
# # Two-sided actions and bi-quotients
# (g1, g2) . g = g1 g g2^{-1}. Generators in the left trivialization are
# Ad_{g^-1} a1 - a2; the moment components are <n, a1> - <m, a2>.

# %%
import numpy as np

from geoflow.actions import (
    builtin_scenarios, infinitesimal_freeness, moment, sample_horizontal, u_xi_dim, vertical_horizontal,
)
from geoflow.dynamics import CotangentState

for name, entry in builtin_scenarios().items():
    action = entry.build()
    vh = vertical_horizontal(action)
    print(f"{entry.signature():60s} vertical {vh.vertical.dim}, horizontal {vh.horizontal.dim}, "
          f"abelian {action.is_abelian()}, closure residual {action.closure_residual():.1e}")

# %% Horizontal vectors at the identity lie in the zero level of the moment map
action = builtin_scenarios()["eschenburg"].build(k=1, l=-1, p=2, q=2)
xis = sample_horizontal(action, seed=0, count=5)
print("moments:", [float(moment(action, CotangentState.at_identity(x))[0]) for x in xis])
print("dim u_xi:", [u_xi_dim(action, x) for x in xis])

# %% Local freeness probe (smallest generator singular value over random g)
print("freeness:", infinitesimal_freeness(action, seed=0, samples=100))
