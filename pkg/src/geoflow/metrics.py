"""Left/right-invariant metrics on compact groups as Hamiltonians on T*G.

Operators are dense symmetric matrices in the orthonormal coordinates of the
algebra (see :mod:`geoflow.liealg`).  A state ``x`` is anything exposing the
group matrix ``x.g`` and the left-trivialized momentum ``x.m``; normally a
:class:`geoflow.dynamics.CotangentState`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NotCartan, NotRegular, SpecMismatch
from .liealg import (
    DEFAULT_TOL_RANK,
    STRUCTURE_TOL,
    AlgebraElement,
    Subspace,
    cartan_element,
    centralizer,
    default_cartan,
    rank_threshold,
)

D_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SectionalOperator:
    """Operator equal to ``D`` on a Cartan subalgebra and ``ad_a^{-1} ad_b`` off it."""

    t: Subspace
    a: AlgebraElement
    b: AlgebraElement
    D: np.ndarray
    matrix: np.ndarray

    @property
    def spec(self):
        return self.t.spec

    def apply(self, x: AlgebraElement) -> AlgebraElement:
        return self.spec.from_ortho_element(self.matrix @ x.ortho)

    def symmetry_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())

    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))


def build_sectional(t: Subspace, a: AlgebraElement, b: AlgebraElement, D,
                    tol_rank=DEFAULT_TOL_RANK) -> SectionalOperator:
    spec = t.spec
    if a.spec != spec or b.spec != spec:
        raise SpecMismatch("a, b and t must live in the same algebra")
    r = t.dim
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape != (r, r):
        raise ValueError(f"D must be {r}x{r}")
    if np.abs(D - D.T).max() > D_SYMMETRY_TOL:
        raise ValueError("D must be symmetric")

    T = t.ortho_basis
    for i in range(r):
        for j in range(i + 1, r):
            c = np.einsum("kij,i,j->k", spec.structure, T[i], T[j])
            if np.linalg.norm(c) > STRUCTURE_TOL:
                raise NotCartan(f"basis elements {i}, {j} of t do not commute")
    for name, x in (("a", a), ("b", b)):
        if t.residual(x) > STRUCTURE_TOL * max(1.0, x.norm()):
            raise ValueError(f"{name} must lie in t")

    Q = t.complement().ortho_basis
    Aa = Q @ spec.ad_ortho(a.ortho) @ Q.T
    Ab = Q @ spec.ad_ortho(b.ortho) @ Q.T
    if Q.shape[0]:
        s = np.linalg.svd(Aa, compute_uv=False)
        if s.min() <= rank_threshold(s, tol_rank):
            raise NotRegular(f"ad_a is singular on the complement of t (sigma_min={s.min():.3e})")
        perp = np.linalg.solve(Aa, Ab)
    else:
        perp = np.zeros((0, 0))
    if centralizer(a, tol_rank=tol_rank).dim != r:
        raise NotRegular("centralizer of a is larger than t")
    matrix = T.T @ D @ T + Q.T @ perp @ Q
    return SectionalOperator(t, a, b, D, matrix)


def default_sectional(spec, a_params, b_params, D=None) -> SectionalOperator:
    """Sectional operator on the default Cartan from eigen-parameters of a and b."""
    t = default_cartan(spec)
    if D is None:
        D = np.eye(t.dim)
    return build_sectional(t, cartan_element(spec, a_params), cartan_element(spec, b_params), D)


def is_positive_definite(phi) -> tuple:
    """``(positive?, smallest eigenvalue)`` of a sectional operator or the identity."""
    if isinstance(phi, str) and phi == "identity":
        return True, 1.0
    w = phi.eigenvalues()
    lo = float(w.min())
    return lo > 0.0, lo


Side = Union[str, SectionalOperator, None]


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """Hamiltonian ``H = 1/2 <phi_L m, m> + 1/2 <phi_R n, n>`` with ``n = Ad_g m``.

    Each side is ``"identity"``, a :class:`SectionalOperator`, or ``None``.
    The bi-invariant metric is ``MetricSpec("identity", None)``.
    """

    left: Side = "identity"
    right: Side = None

    def __post_init__(self):
        for side in (self.left, self.right):
            if not (side is None or side == "identity" or isinstance(side, SectionalOperator)):
                raise ValueError(f"invalid metric side {side!r}")
        if self.left is None and self.right is None:
            raise ValueError("at least one side of the metric must be present")

    @classmethod
    def bi_invariant(cls):
        return cls("identity", None)

    def _matrix(self, side, dim):
        if side is None:
            return None
        if isinstance(side, str):
            return np.eye(dim)
        return side.matrix

    def operators(self, dim):
        """``(phi_L, phi_R)`` as dense matrices, ``None`` for absent sides."""
        return self._matrix(self.left, dim), self._matrix(self.right, dim)

    @property
    def is_bi_invariant(self):
        return self.left == "identity" and self.right is None

    def describe(self):
        def one(side):
            if side is None or isinstance(side, str):
                return side
            return {
                "a": side.a.coords.tolist(),
                "b": side.b.coords.tolist(),
                "D": side.D.tolist(),
            }
        return {"left": one(self.left), "right": one(self.right)}


def adjoint_matrix(spec, G):
    """``Ad_g`` as an orthogonal matrix on orthonormal coordinates."""
    rows = spec.project_ortho(G @ spec.obasis @ G.conj().T)
    return rows.T


def hamiltonian_arrays(metric: MetricSpec, spec, G, y, AdG=None) -> float:
    phi_l, phi_r = metric.operators(spec.dim)
    H = 0.0
    if phi_l is not None:
        H += 0.5 * y @ phi_l @ y
    if phi_r is not None:
        AdG = adjoint_matrix(spec, G) if AdG is None else AdG
        n = AdG @ y
        H += 0.5 * n @ phi_r @ n
    return float(H)


def velocity_arrays(metric: MetricSpec, spec, G, y, AdG=None):
    """Fiber derivative ``dH/dm`` in orthonormal coordinates."""
    phi_l, phi_r = metric.operators(spec.dim)
    out = np.zeros(spec.dim)
    if phi_l is not None:
        out += phi_l @ y
    if phi_r is not None:
        AdG = adjoint_matrix(spec, G) if AdG is None else AdG
        out += AdG.T @ (phi_r @ (AdG @ y))
    return out


def _state_arrays(x):
    g = x.g.matrix if hasattr(x.g, "matrix") else np.asarray(x.g)
    return x.m.spec, g, x.m.ortho


def hamiltonian(metric: MetricSpec, x) -> float:
    spec, G, y = _state_arrays(x)
    return hamiltonian_arrays(metric, spec, G, y)


def velocity(metric: MetricSpec, x) -> AlgebraElement:
    """``Omega = phi_L m + Ad_{g^{-1}} phi_R (Ad_g m)``."""
    spec, G, y = _state_arrays(x)
    return spec.from_ortho_element(velocity_arrays(metric, spec, G, y))
