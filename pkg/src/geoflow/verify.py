"""Certification engine: Poisson brackets, ddim/dind, completeness, torus dimensions.

Functions on ``T*G`` are differentiated in the left trivialization: for a
state ``(g, m)`` the *m-gradient* ``dm F`` and the *g-gradient* ``dg F`` are the
algebra elements with

    d/de F(g, m + e eta)        = <dm F, eta>
    d/de F(g exp(e eta), m)     = <dg F, eta>

and the canonical bracket reads

    {F, K} = <dg F, dm K> - <dg K, dm F> - <m, [dm F, dm K]>.

With this sign ``dF/dt = {F, H}`` along the flows of :mod:`geoflow.dynamics`.
"""
from __future__ import annotations

import os
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .actions import (
    TwoSidedAction,
    moment_arrays,
    sample_horizontal,
    u_xi_dim,
    vertical_horizontal,
)
from .dynamics import CotangentState, IntegratorConfig, Trajectory, integrate
from .errors import DegenerateVertical, HypothesisFailed, ToleranceAmbiguity
from .liealg import (
    DEFAULT_TOL_RANK,
    AlgebraElement,
    AlgebraSpec,
    expm_skew,
    grad_poly_ortho,
    is_regular,
    numerical_rank,
    power_sums,
    random_element,
    random_group_element,
    rank_threshold,
    GroupElement,
)
from .metrics import MetricSpec, adjoint_matrix, hamiltonian_arrays, velocity_arrays

AMBIGUITY_DECADE = 10.0
ROW_FLOOR = 1e-14  # differentials below this (relative) count as exactly zero


def scan_threads():
    try:
        return max(1, int(os.environ.get("GEOFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _scan(fn, items):
    """Map ``fn`` over ``items``; results always come back in input order."""
    items = list(items)
    threads = scan_threads()
    if threads == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class Point:
    """A phase point with lazily cached derived arrays (orthonormal coordinates)."""

    def __init__(self, x: CotangentState):
        self.state = x
        self.spec = x.spec
        self.G = x.g.matrix
        self.y = x.m.ortho

    @cached_property
    def M(self):
        return self.spec.ortho_matrix(self.y)

    @cached_property
    def AdG(self):
        return adjoint_matrix(self.spec, self.G)

    @cached_property
    def n(self):
        return self.AdG @ self.y

    @cached_property
    def N(self):
        return self.spec.ortho_matrix(self.n)

    @cached_property
    def ad_m(self):
        return self.spec.ad_ortho(self.y)


def _as_point(x):
    return x if isinstance(x, Point) else Point(x)


@dataclass(frozen=True, eq=False)
class IntegralFunction:
    """Scalar function on ``T*G`` with analytic left-trivialized gradients.

    ``value(p)`` and ``gradient(p) -> (dg, dm)`` take a :class:`Point`;
    ``series(traj)`` optionally evaluates along a whole trajectory at once.
    """

    name: str
    tag: str
    value_fn: Callable
    gradient_fn: Callable
    series_fn: Optional[Callable] = None

    def __call__(self, x):
        return float(self.value_fn(_as_point(x)))

    def gradient(self, x):
        """``(dg, dm)`` in orthonormal coordinates."""
        dg, dm = self.gradient_fn(_as_point(x))
        return np.asarray(dg, dtype=float), np.asarray(dm, dtype=float)

    def along(self, traj: Trajectory):
        if self.series_fn is not None:
            return np.asarray(self.series_fn(traj), dtype=float)
        return np.array([self(traj.state(i)) for i in range(len(traj))])


@dataclass(eq=False)
class IntegralFamily:
    spec: AlgebraSpec
    functions: list = field(default_factory=list)
    name: str = "family"

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __add__(self, other):
        if other.spec != self.spec:
            raise ValueError("families over different algebras")
        return IntegralFamily(self.spec, self.functions + other.functions, f"{self.name}+{other.name}")

    def values(self, x):
        p = _as_point(x)
        return np.array([f(p) for f in self.functions])

    def differentials(self, x):
        """Stacked rows ``(dg, dm)``, shape ``(len, 2 dim)``."""
        p = _as_point(x)
        if not self.functions:
            return np.zeros((0, 2 * self.spec.dim)), np.zeros((0, self.spec.dim)), np.zeros((0, self.spec.dim))
        grads = [f.gradient(p) for f in self.functions]
        Dg = np.array([g for g, _ in grads])
        Dm = np.array([m for _, m in grads])
        return np.hstack([Dg, Dm]), Dg, Dm

    def tags(self):
        return [f.tag for f in self.functions]


# --------------------------------------------------------------------------
# Family constructors
# --------------------------------------------------------------------------

def m_coordinates(spec: AlgebraSpec) -> IntegralFamily:
    """``m_i = <m, e_i>`` for the basis elements ``e_i``."""
    fns = []
    for i in range(spec.dim):
        e = np.zeros(spec.dim)
        e[i] = spec.scale[i]
        fns.append(IntegralFunction(
            f"m_{i}", "m-coordinate",
            lambda p, e=e: p.y @ e,
            lambda p, e=e: (np.zeros_like(e), e),
            lambda tr, e=e: tr.y @ e,
        ))
    return IntegralFamily(spec, fns, "m-coordinates")


def n_coordinates(spec: AlgebraSpec) -> IntegralFamily:
    """``n_i = <Ad_g m, e_i>``."""
    fns = []
    for i in range(spec.dim):
        e = np.zeros(spec.dim)
        e[i] = spec.scale[i]

        def grad(p, e=e):
            dm = p.AdG.T @ e
            return p.ad_m @ dm, dm

        fns.append(IntegralFunction(
            f"n_{i}", "n-coordinate",
            lambda p, e=e: p.n @ e,
            grad,
            lambda tr, e=e: tr.n_ortho @ e,
        ))
    return IntegralFamily(spec, fns, "n-coordinates")


def bi_invariant_family(spec: AlgebraSpec) -> IntegralFamily:
    """Left and right translations of the linear functions: ``{m_i} + {n_i}``."""
    fam = m_coordinates(spec) + n_coordinates(spec)
    fam.name = "bi-invariant"
    return fam


def left_polys(spec: AlgebraSpec, degrees=None) -> IntegralFamily:
    """Invariant power sums ``p_k(m)``."""
    degrees = spec.degrees if degrees is None else degrees
    fns = []
    for k in degrees:
        fns.append(IntegralFunction(
            f"p{k}(m)", "left-poly",
            lambda p, k=k: np.sum(np.linalg.eigvalsh(-1j * p.M) ** k),
            lambda p, k=k: (np.zeros(p.spec.dim), grad_poly_ortho(p.spec, p.M, k)),
            lambda tr, k=k: power_sums(tr.spec.ortho_matrix(tr.y), k),
        ))
    return IntegralFamily(spec, fns, "left-polys")


def right_polys(spec: AlgebraSpec, degrees=None) -> IntegralFamily:
    """Invariant power sums ``p_k(n)``."""
    degrees = spec.degrees if degrees is None else degrees
    fns = []
    for k in degrees:
        def grad(p, k=k):
            dm = p.AdG.T @ grad_poly_ortho(p.spec, p.N, k)
            return p.ad_m @ dm, dm

        fns.append(IntegralFunction(
            f"p{k}(n)", "right-poly",
            lambda p, k=k: np.sum(np.linalg.eigvalsh(-1j * p.N) ** k),
            grad,
            lambda tr, k=k: power_sums(tr.spec.ortho_matrix(tr.n_ortho), k),
        ))
    return IntegralFamily(spec, fns, "right-polys")


def moment_components(action: TwoSidedAction) -> IntegralFamily:
    """``phi_a = <n, a1> - <m, a2>`` for each pair of the action."""
    fns = []
    for i, (a1, a2) in enumerate(action.pairs):
        u1, u2 = a1.ortho, a2.ortho

        def grad(p, u1=u1, u2=u2):
            left = p.AdG.T @ u1
            return p.ad_m @ left, left - u2

        fns.append(IntegralFunction(
            f"moment[{i}]", "moment",
            lambda p, u1=u1, u2=u2: p.n @ u1 - p.y @ u2,
            grad,
            lambda tr, u1=u1, u2=u2: tr.n_ortho @ u1 - tr.y @ u2,
        ))
    return IntegralFamily(action.spec, fns, f"moment({action.name})")


def pair_moment(spec, a1: AlgebraElement, a2: AlgebraElement, name="phi") -> IntegralFunction:
    """Moment function of a single pair (need not belong to a catalog action)."""
    fam = moment_components(TwoSidedAction(spec, [(a1, a2)], name, check=False))
    f = fam.functions[0]
    return IntegralFunction(name, "moment", f.value_fn, f.gradient_fn, f.series_fn)


def shift_polys(a: AlgebraElement, degrees=None, lambdas=(0.1, 0.5, 1.0)) -> IntegralFamily:
    """Argument-shift integrals ``p_k(m + lambda a)``."""
    spec = a.spec
    degrees = spec.degrees if degrees is None else degrees
    A = a.matrix
    fns = []
    for lam in lambdas:
        for k in degrees:
            fns.append(IntegralFunction(
                f"p{k}(m+{lam:g}a)", "shift",
                lambda p, k=k, lam=lam: np.sum(np.linalg.eigvalsh(-1j * (p.M + lam * A)) ** k),
                lambda p, k=k, lam=lam: (np.zeros(p.spec.dim), grad_poly_ortho(p.spec, p.M + lam * A, k)),
                lambda tr, k=k, lam=lam: power_sums(tr.spec.ortho_matrix(tr.y) + lam * A, k),
            ))
    return IntegralFamily(spec, fns, "shift")


def hamiltonian_function(metric: MetricSpec, spec: AlgebraSpec) -> IntegralFunction:
    _, phi_r = metric.operators(spec.dim)

    def grad(p):
        dm = velocity_arrays(metric, spec, p.G, p.y, p.AdG)
        if phi_r is None:
            return np.zeros(spec.dim), dm
        return p.ad_m @ (p.AdG.T @ (phi_r @ p.n)), dm

    def series(tr):
        phi_l, phi_r_ = metric.operators(spec.dim)
        H = np.zeros(len(tr))
        if phi_l is not None:
            H += 0.5 * np.einsum("ti,ij,tj->t", tr.y, phi_l, tr.y)
        if phi_r_ is not None:
            H += 0.5 * np.einsum("ti,ij,tj->t", tr.n_ortho, phi_r_, tr.n_ortho)
        return H

    return IntegralFunction(
        "H", "hamiltonian",
        lambda p: hamiltonian_arrays(metric, spec, p.G, p.y, p.AdG),
        grad, series,
    )


def constant_function(spec: AlgebraSpec, c=1.0, name="const") -> IntegralFunction:
    z = np.zeros(spec.dim)
    return IntegralFunction(name, "constant", lambda p: c, lambda p: (z, z),
                            lambda tr: np.full(len(tr), c))


def family_of(spec, functions, name="family") -> IntegralFamily:
    return IntegralFamily(spec, list(functions), name)


# --------------------------------------------------------------------------
# Brackets and finite-difference oracles
# --------------------------------------------------------------------------

def poisson_bracket(F: IntegralFunction, K: IntegralFunction, x) -> float:
    p = _as_point(x)
    dgF, dmF = F.gradient(p)
    dgK, dmK = K.gradient(p)
    return float(dgF @ dmK - dgK @ dmF - dmF @ (p.ad_m.T @ dmK))


def bracket_matrix(Dg, Dm, ad_m):
    """``B_ij = {f_i, f_j}`` from stacked gradients."""
    return Dg @ Dm.T - Dm @ Dg.T - Dm @ ad_m.T @ Dm.T


def numerical_gradient(f, x: CotangentState, h=1e-5):
    """Central-difference ``(dg, dm)`` of any callable ``f(state)``."""
    spec = x.spec
    G = x.g.matrix
    d = spec.dim
    dg = np.zeros(d)
    dm = np.zeros(d)
    eye = np.eye(d)
    for j in range(d):
        E = spec.ortho_matrix(eye[j])
        gp = GroupElement.unchecked(spec, G @ expm_skew(h * E))
        gm = GroupElement.unchecked(spec, G @ expm_skew(-h * E))
        dg[j] = (f(CotangentState(gp, x.m)) - f(CotangentState(gm, x.m))) / (2 * h)
        mp = spec.from_ortho_element(x.m.ortho + h * eye[j])
        mm = spec.from_ortho_element(x.m.ortho - h * eye[j])
        dm[j] = (f(CotangentState(x.g, mp)) - f(CotangentState(x.g, mm))) / (2 * h)
    return dg, dm


def numerical_bracket(f, k, x, h=1e-5):
    """Bracket formula evaluated with finite-difference gradients."""
    dgF, dmF = numerical_gradient(f, x, h)
    dgK, dmK = numerical_gradient(k, x, h)
    ad_m = x.spec.ad_ortho(x.m.ortho)
    return float(dgF @ dmK - dgK @ dmF - dmF @ (ad_m.T @ dmK))


def gradient_defect(F: IntegralFunction, x, h=1e-5):
    """Relative disagreement between analytic and central-difference gradients."""
    ag, am = F.gradient(x)
    ng, nm = numerical_gradient(F, x, h)
    a = np.concatenate([ag, am])
    n = np.concatenate([ng, nm])
    return float(np.linalg.norm(a - n) / max(1.0, np.linalg.norm(n)))


def random_state(spec, rng, scale=1.0) -> CotangentState:
    return CotangentState(random_group_element(spec, rng), random_element(spec, rng, scale))


# --------------------------------------------------------------------------
# ddim / dind
# --------------------------------------------------------------------------

@dataclass
class PointAnalysis:
    ddim: int
    dind: int
    ambiguous: bool = False
    reason: str = ""
    differential_sv: list = field(default_factory=list)
    bracket_sv: list = field(default_factory=list)


def _ambiguous(s, thr):
    return bool(np.any((s > thr / AMBIGUITY_DECADE) & (s <= thr * AMBIGUITY_DECADE)))


def analyze_point(family: IntegralFamily, x, tol_rank=DEFAULT_TOL_RANK) -> PointAnalysis:
    """ddim/dind at one point, with ambiguity diagnostics instead of exceptions."""
    p = _as_point(x)
    D, Dg, Dm = family.differentials(p)
    if D.shape[0] == 0:
        return PointAnalysis(0, 0)
    # Row scaling changes neither rank(D) nor rank(B) (B -> S B S), but keeps
    # high-degree functions from swamping the relative threshold.
    norms = np.linalg.norm(D, axis=1)
    keep = norms > ROW_FLOOR * max(1.0, norms.max())
    scale = np.where(keep, 1.0 / np.where(keep, norms, 1.0), 0.0)
    D, Dg, Dm = D * scale[:, None], Dg * scale[:, None], Dm * scale[:, None]
    s = np.linalg.svd(D, compute_uv=False)
    thr = rank_threshold(s, tol_rank)
    l = int(np.sum(s > thr))
    out = PointAnalysis(l, 0, differential_sv=s.tolist())
    if _ambiguous(s, thr):
        out.ambiguous, out.reason = True, "differential singular values near threshold"
    if l == 0:
        return out
    _, _, piv = scipy.linalg.qr(D.T, pivoting=True, mode="economic")
    idx = np.sort(piv[:l])
    B = bracket_matrix(Dg[idx], Dm[idx], p.ad_m)
    sb = np.linalg.svd(B, compute_uv=False)
    tb = rank_threshold(sb, tol_rank)
    rb = int(np.sum(sb > tb))
    out.bracket_sv = sb.tolist()
    out.dind = l - rb
    if _ambiguous(sb, tb):
        out.ambiguous, out.reason = True, "bracket singular values near threshold"
    elif rb % 2:
        out.ambiguous, out.reason = True, f"odd bracket rank {rb}"
    return out


def ddim_dind(family: IntegralFamily, x, tol_rank=DEFAULT_TOL_RANK):
    """``(ddim, dind)`` of the family at ``x``.

    Raises :class:`ToleranceAmbiguity` when singular values sit within a decade
    of the threshold or the bracket matrix has odd rank.
    """
    a = analyze_point(family, x, tol_rank)
    if a.ambiguous:
        raise ToleranceAmbiguity(a.reason, a.differential_sv, tol_rank)
    return a.ddim, a.dind


def _mode(values):
    if not values:
        return None
    return Counter(values).most_common(1)[0][0]


@dataclass
class CompletenessReport:
    family: str
    seed: int
    tol_rank: float
    dim_M: int
    samples: list
    modal_ddim: Optional[int]
    modal_dind: Optional[int]
    ambiguous_count: int
    passed: bool

    def to_json(self):
        return asdict(self)


def completeness_check(family: IntegralFamily, samples=20, seed=0, tol_rank=DEFAULT_TOL_RANK,
                       states=None) -> CompletenessReport:
    """Modal ddim/dind over random states and the test ``ddim + dind = dim T*G``."""
    spec = family.spec
    if states is None:
        rng = np.random.default_rng(seed)
        states = [random_state(spec, rng) for _ in range(samples)]
    results = _scan(lambda x: analyze_point(family, x, tol_rank), states)
    rows = [{"index": i, "ddim": r.ddim, "dind": r.dind, "ambiguous": r.ambiguous, "reason": r.reason}
            for i, r in enumerate(results)]
    good = [r for r in results if not r.ambiguous]
    md = _mode([r.ddim for r in good])
    mi = _mode([r.dind for r in good])
    dim_M = 2 * spec.dim
    passed = md is not None and md > 0 and md + mi == dim_M
    return CompletenessReport(family.name, seed, tol_rank, dim_M, rows, md, mi,
                              len(results) - len(good), passed)


# --------------------------------------------------------------------------
# Horizontal regularity and torus dimension
# --------------------------------------------------------------------------

@dataclass
class RegularityReport:
    action: str
    seed: int
    samples: int
    algebra_rank: int
    degrees: list
    regular: list
    gradient_ranks: list
    fraction_regular: float
    gradients_full_rank_at_regular: bool
    passed: bool

    def to_json(self):
        return asdict(self)


def _quiet_vh(action, tol_rank):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateVertical)
        return vertical_horizontal(action, tol_rank)


def horizontal_regularity(action: TwoSidedAction, samples=100, seed=0, degrees=None,
                          tol_rank=DEFAULT_TOL_RANK, xis=None) -> RegularityReport:
    """Regularity of sampled horizontal vectors at the identity.

    Also records the numerical rank of ``{grad p_k(xi)}``; it must equal the
    rank of the algebra at every regular sample.
    """
    spec = action.spec
    degrees = list(spec.degrees if degrees is None else degrees)
    if xis is None:
        xis = sample_horizontal(action, seed, samples, _quiet_vh(action, tol_rank))

    def probe(xi):
        reg = is_regular(xi, tol_rank)
        G = np.array([grad_poly_ortho(spec, xi.matrix, k) for k in degrees])
        return reg, numerical_rank(G, tol_rank)

    res = _scan(probe, xis)
    regular = [bool(r) for r, _ in res]
    ranks = [int(k) for _, k in res]
    n = len(res)
    frac = sum(regular) / n if n else 0.0
    full = all(k == spec.rank for r, k in zip(regular, ranks) if r)
    passed = n > 0 and _mode(regular) is True and full
    return RegularityReport(action.name, seed, n, spec.rank, degrees, regular, ranks, frac, full, passed)


@dataclass
class TorusDimensionReport:
    action: str
    seed: int
    dimension: int
    histogram: dict
    min_u_xi: int
    modal_u_xi: int
    modal_dimension: int
    regular_fraction: float
    supported: bool

    def to_json(self):
        d = asdict(self)
        d["histogram"] = {str(k): v for k, v in sorted(self.histogram.items())}
        return d

    def __iter__(self):
        # unpacks as (dimension, histogram)
        return iter((self.dimension, self.histogram))


def torus_dimension(action: TwoSidedAction, samples=100, seed=0, tol_rank=DEFAULT_TOL_RANK,
                    xis=None) -> TorusDimensionReport:
    """``rank G - min dim u_xi`` over sampled horizontal ``xi`` (or the given ``xis``)."""
    spec = action.spec
    vh = _quiet_vh(action, tol_rank)
    if xis is None:
        xis = sample_horizontal(action, seed, samples, vh)
    dims = _scan(lambda xi: u_xi_dim(action, xi, vh, tol_rank), xis)
    regular = _scan(lambda xi: is_regular(xi, tol_rank), xis)
    if not any(regular):
        raise HypothesisFailed(f"{action.name}: no sampled horizontal vector is regular")
    hist = dict(sorted(Counter(dims).items()))
    lo = min(dims)
    modal = _mode(dims)
    frac = sum(regular) / len(regular)
    return TorusDimensionReport(action.name, seed, spec.rank - lo, hist, lo, modal,
                                spec.rank - modal, frac, _mode(regular) is True)


# --------------------------------------------------------------------------
# Conservation along trajectories
# --------------------------------------------------------------------------

@dataclass
class ConservationReport:
    action: str
    seed: int
    tolerance: float
    trajectories: list
    passed: bool

    def to_json(self):
        return asdict(self)


def conservation_certificate(metric: MetricSpec, action: TwoSidedAction, family: IntegralFamily,
                             cfg: IntegratorConfig = IntegratorConfig(), seed=0, samples=1,
                             initial=None, tol=1e-7) -> ConservationReport:
    """Integrate from horizontal starts and certify the zero moment level and family drifts."""
    spec = action.spec
    if initial is None:
        initial = [CotangentState.at_identity(xi) for xi in sample_horizontal(action, seed, samples)]
    mom = moment_components(action)
    H = hamiltonian_function(metric, spec)

    def run(x0):
        traj = integrate(metric, x0, cfg)
        level = moment_arrays(action, traj.n_ortho, traj.y)
        level0 = level[0]
        in_zero = bool(np.abs(level0).max() <= 1e-12) if level.size else True
        moment_drift = float(np.abs(level - level0).max()) if level.size else 0.0
        moment_max = float(np.abs(level).max()) if level.size else 0.0
        drifts = {}
        for f in list(family) + [H]:
            s = f.along(traj)
            drifts[f.name] = float(np.abs(s - s[0]).max() / max(1.0, abs(s[0])))
        worst = max(drifts.values()) if drifts else 0.0
        ok = moment_drift <= tol and worst <= tol and (not in_zero or moment_max <= tol)
        row = {
            "in_zero_level": in_zero,
            "moment_initial": level0.tolist(),
            "moment_max_abs": moment_max,
            "moment_drift": moment_drift,
            "relative_drift": drifts,
            "max_relative_drift": worst,
            "passed": bool(ok and in_zero),
        }
        if not in_zero:
            row["note"] = "not in the zero level of the moment map"
        return row

    rows = _scan(run, initial)
    return ConservationReport(action.name, seed, tol, rows, all(r["passed"] for r in rows))
