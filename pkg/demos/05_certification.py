# %% [markdown]
# # Certifying integrability
# ddim/dind of integral families, the completeness test ddim + dind = dim T*G,
# horizontal regularity, and the torus-dimension formula rank G - min dim u_xi.

# %%
from geoflow.actions import eschenburg, flag, gromoll_meyer
from geoflow.dynamics import IntegratorConfig
from geoflow.liealg import algebra
from geoflow.metrics import MetricSpec
from geoflow.verify import (
    bi_invariant_family, completeness_check, conservation_certificate, horizontal_regularity,
    left_polys, right_polys, torus_dimension,
)

# %% The bi-invariant family {m_i} + {n_i}
for fam, n in [("su", 2), ("su", 3), ("sp", 2)]:
    rep = completeness_check(bi_invariant_family(algebra(fam, n)), samples=20, seed=0)
    print(f"{fam}({n}): ddim {rep.modal_ddim}, dind {rep.modal_dind}, dim M {rep.dim_M}, pass {rep.passed}")

# %% Regularity of horizontal vectors and invariant tori
for action in (eschenburg(1, -1, 2, 2), gromoll_meyer(), flag("su", 3)):
    reg = horizontal_regularity(action, samples=100, seed=0)
    tor = torus_dimension(action, samples=100, seed=0)
    print(f"{action.name:22s} regular {reg.fraction_regular:.2f}  torus dim {tor.dimension}  "
          f"u_xi histogram {tor.histogram}")

# %% Trajectories from horizontal data stay in the zero level
su3 = algebra("su", 3)
cert = conservation_certificate(MetricSpec.bi_invariant(), eschenburg(1, -1, 2, 2),
                                left_polys(su3) + right_polys(su3), IntegratorConfig(h=1e-3, T=2.0))
print("certificate passed:", cert.passed, " worst drift:", cert.trajectories[0]["max_relative_drift"])
