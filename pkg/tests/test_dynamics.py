import io

import numpy as np
import pytest

from geoflow.actions import eschenburg, moment
from geoflow.dynamics import (
    CotangentState,
    IntegratorConfig,
    exact_biinvariant_geodesic,
    geodesic_error,
    integrate,
    parse_watch,
    step,
    vector_field,
)
from geoflow.liealg import (
    Ad,
    Subspace,
    exp_to_group,
    group_distance,
    random_element,
    random_group_element,
)
from geoflow.metrics import MetricSpec, build_sectional, default_sectional, hamiltonian
from geoflow.verify import numerical_bracket

from test_metrics import pd_sum_metric


def symmetric_top(su2, c=2.0, d=0.7):
    """su(2) sectional metric with phi = c off the Cartan line and d on it."""
    e3 = su2.basis_element(2)
    return MetricSpec(build_sectional(Subspace.span(su2, [e3]), e3, e3 * c, [[d]]), None)


def symmetric_top_solution(su2, x0, t, c=2.0, d=0.7):
    """Closed form g(t) = g0 exp(t c m0) exp(t (d - c) m_t), m(t) = Ad_{exp(-t(d-c)m_t)} m0."""
    e3 = su2.basis_element(2)
    mt = e3 * (x0.m.ortho[2] / e3.ortho[2])
    B = exp_to_group(mt, t * (d - c))
    g = x0.g.matrix @ exp_to_group(x0.m, t * c).matrix @ B.matrix
    return g, Ad(B.inverse(), x0.m)


# --- vector field ------------------------------------------------------------------

def test_vector_field_bi_invariant(su3, rng):
    x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    omega, mdot = vector_field(MetricSpec.bi_invariant(), x)
    assert (omega - x.m).norm() <= 1e-12
    assert mdot.norm() <= 1e-12


def test_vector_field_right_only(su3, rng):
    _, right = pd_sum_metric(su3)
    x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    _, mdot = vector_field(MetricSpec(None, right), x)
    assert np.all(mdot.coords == 0)


@pytest.mark.parametrize("which", ["left", "right", "sum", "identity+right"])
def test_vector_field_matches_poisson_flow(su3, rng, which):
    """Closed-form (Omega, m_dot) vs finite-difference canonical flow of H."""
    left, right = pd_sum_metric(su3)
    metric = {"left": MetricSpec(left, None), "right": MetricSpec(None, right),
              "sum": MetricSpec(left, right), "identity+right": MetricSpec("identity", right)}[which]
    H = lambda s: hamiltonian(metric, s)  # noqa: E731
    for _ in range(3):
        x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
        omega, mdot = vector_field(metric, x)
        for i in range(su3.dim):
            coord = lambda s, i=i: s.m.ortho[i]  # noqa: E731
            fd = numerical_bracket(coord, H, x)
            assert mdot.ortho[i] == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))
        # the group moves by g' = g Omega: compare with d/dt of <n, e_i> = {n_i, H}
        for i in range(su3.dim):
            n_i = lambda s, i=i: s.n.ortho[i]  # noqa: E731
            fd = numerical_bracket(n_i, H, x)
            G = x.g.matrix
            ndot = G @ (omega.matrix @ x.m.matrix - x.m.matrix @ omega.matrix + mdot.matrix) @ G.conj().T
            an = su3.project_ortho(ndot)[i]
            assert an == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))


# --- step ---------------------------------------------------------------------------------

def test_step_zero_is_identity(su3, rng):
    x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    assert step(MetricSpec.bi_invariant(), x, 0.0) is x


def test_step_bi_invariant_matches_closed_form(su3, rng):
    x = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    for h in (1e-1, 5e-2):
        y = step(MetricSpec.bi_invariant(), x, h)
        ref = exact_biinvariant_geodesic(x.g, x.m, h)
        assert group_distance(y.g, ref) <= 1e-13


@pytest.mark.parametrize("method,expected", [("lie-rk4", 4.0), ("lie-rk4-uncorrected", 2.0)])
def test_global_order_symmetric_top(su2, rng, method, expected):
    metric = symmetric_top(su2)
    x0 = CotangentState(random_group_element(su2, rng), random_element(su2, rng))
    g_ref, m_ref = symmetric_top_solution(su2, x0, 2.0)
    errs = []
    for h in (4e-2, 2e-2, 1e-2):
        traj = integrate(metric, x0, IntegratorConfig(h=h, T=2.0, method=method))
        errs.append(np.linalg.norm(traj.G[-1] - g_ref) + np.linalg.norm(traj.y[-1] - m_ref.ortho))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= expected - 0.2, orders


def test_symmetric_top_closed_form_is_a_solution(su2, rng):
    metric = symmetric_top(su2)
    x0 = CotangentState(random_group_element(su2, rng), random_element(su2, rng))
    traj = integrate(metric, x0, IntegratorConfig(h=1e-3, T=1.0))
    g_ref, m_ref = symmetric_top_solution(su2, x0, 1.0)
    assert np.linalg.norm(traj.G[-1] - g_ref) <= 1e-10
    assert np.linalg.norm(traj.y[-1] - m_ref.ortho) <= 1e-10


def test_unitarity_after_many_steps(su2, rng):
    x0 = CotangentState(random_group_element(su2, rng), random_element(su2, rng, 3.0))
    traj = integrate(symmetric_top(su2), x0, IntegratorConfig(h=1e-3, T=10.0))
    assert len(traj) == 10001
    assert traj.unitarity_defect() <= 1e-10
    assert max(g.defect() for g in [traj.state(-1).g]) <= 1e-10


# --- integrate ------------------------------------------------------------------------------

def test_bi_invariant_su3_drifts(su3):
    xi = random_element(su3, np.random.default_rng(3))
    x0 = CotangentState.at_identity(xi / xi.norm())
    watch = ["H", "p2(m)", "p3(m)", "p2(n)", "p3(n)", "reconstruction"]
    traj = integrate(MetricSpec.bi_invariant(), x0, IntegratorConfig(h=1e-3, T=10.0), watch)
    for key in watch:
        bound = 1e-7 if key == "reconstruction" else 1e-8
        assert traj.relative_drift[key] <= bound, key
    assert geodesic_error(traj) <= 1e-6
    g_end = exact_biinvariant_geodesic(x0.g, x0.m, 10.0)
    assert group_distance(traj.state(-1).g, g_end) <= 1e-6
    assert np.all(np.diff(traj.times) > 0)


def test_sum_metric_isospectral_and_reconstruction(su3, rng):
    left, right = pd_sum_metric(su3)
    x0 = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    watch = ["H", "p2(m)", "p3(m)", "p2(n)", "p3(n)", "reconstruction"]
    traj = integrate(MetricSpec(left, right), x0, IntegratorConfig(h=1e-3, T=2.0), watch)
    assert max(traj.relative_drift.values()) <= 1e-8


def test_noether_for_torus_action_on_sum_metric(su3, rng):
    left, right = pd_sum_metric(su3)
    action = eschenburg(1, -1, 2, 2)
    x0 = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    traj = integrate(MetricSpec(left, right), x0, IntegratorConfig(h=1e-3, T=2.0), ["moment"], action)
    assert traj.drift["moment[0]"] <= 1e-8
    assert traj.values["moment[0]"][0] == pytest.approx(moment(action, x0)[0], abs=1e-12)


def test_argument_shift_left_only(su3, rng):
    left, _ = pd_sum_metric(su3)
    x0 = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    watch = [f"p{k}(m+{lam}a)" for lam in (0.1, 0.5, 1.0) for k in (2, 3)]
    traj = integrate(MetricSpec(left, None), x0, IntegratorConfig(h=1e-3, T=2.0), watch)
    assert max(traj.relative_drift.values()) <= 1e-7


def test_zero_momentum_is_stationary(su3, rng):
    g0 = random_group_element(su3, rng)
    traj = integrate(MetricSpec.bi_invariant(), CotangentState(g0, su3.zero()),
                     IntegratorConfig(h=1e-2, T=1.0), ["H"])
    assert np.abs(traj.G - g0.matrix).max() <= 1e-14
    assert np.all(traj.y == 0)


def test_exact_geodesic_examples(su2, rng):
    g0 = random_group_element(su2, rng)
    m = random_element(su2, rng)
    assert group_distance(exact_biinvariant_geodesic(g0, m, 0.0), g0) <= 1e-15
    e3 = su2.basis_element(2)
    g = exact_biinvariant_geodesic(su2.identity(), e3, np.pi / 2)
    assert np.abs(g.matrix - np.diag([1j, -1j])).max() <= 1e-15


def test_parse_watch():
    assert parse_watch("H") == ("H",)
    assert parse_watch("p4(n)") == ("poly", 4, "n")
    assert parse_watch("p2(m+0.5a)") == ("shift", 2, 0.5)
    with pytest.raises(ValueError):
        parse_watch("energy")


def test_shift_watch_needs_element(su3, rng):
    x0 = CotangentState.at_identity(random_element(su3, rng))
    with pytest.raises(ValueError):
        integrate(MetricSpec.bi_invariant(), x0, IntegratorConfig(h=0.1, T=0.2), ["p2(m+0.1a)"])


def test_csv_layout(su2, rng):
    x0 = CotangentState.at_identity(random_element(su2, rng))
    traj = integrate(MetricSpec.bi_invariant(), x0, IntegratorConfig(h=0.1, T=1.0), ["H"])
    buf = io.StringIO()
    traj.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "time,m0,m1,m2,n0,n1,n2,H"
    assert len(lines) == 12
    row = [float(v) for v in lines[5].split(",")]
    assert row[1:4] == list(traj.m_coords[4])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(h=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    assert IntegratorConfig(h=1e-3, T=10.0).steps == 10000


def test_default_sectional_left_flow_conserves_energy(su3, rng):
    phi = default_sectional(su3, [1.0, 2.0, -3.0], [0.5, 1.5, -2.0])
    x0 = CotangentState(random_group_element(su3, rng), random_element(su3, rng))
    traj = integrate(MetricSpec(phi, None), x0, IntegratorConfig(h=1e-3, T=1.0), ["H"])
    assert traj.relative_drift["H"] <= 1e-8
