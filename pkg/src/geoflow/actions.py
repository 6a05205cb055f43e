"""Two-sided subgroup actions ``(g1, g2) . g = g1 g g2^{-1}`` on a compact group.

A :class:`TwoSidedAction` is given by a basis of pairs ``(a1, a2)`` spanning
the Lie algebra of ``U`` inside ``g + g``.  In the left trivialization the
infinitesimal generator of a pair at ``g`` is ``Ad_{g^-1} a1 - a2`` and the
corresponding moment component is ``<n, a1> - <m, a2>``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateVertical, InvalidParameters, SpecMismatch
from .liealg import (
    DEFAULT_TOL_RANK,
    STRUCTURE_TOL,
    AlgebraElement,
    AlgebraSpec,
    GroupElement,
    Subspace,
    algebra,
    cartan_element,
    centralizer,
    default_cartan,
    numerical_rank,
    random_group_element,
)


@dataclass(frozen=True, eq=False)
class TwoSidedAction:
    spec: AlgebraSpec
    pairs: tuple
    name: str = "action"

    def __init__(self, spec, pairs, name="action", check=True, tol_rank=DEFAULT_TOL_RANK):
        pairs = tuple((a1, a2) for a1, a2 in pairs)
        for a1, a2 in pairs:
            if a1.spec != spec or a2.spec != spec:
                raise SpecMismatch(f"pair elements must belong to {spec!r}")
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "name", name)
        if check:
            if self.pair_rank(tol_rank) != len(pairs):
                raise InvalidParameters(f"{name}: pairs are linearly dependent in g + g")
            resid = self.closure_residual()
            if resid > STRUCTURE_TOL:
                raise InvalidParameters(f"{name}: pairs do not span a subalgebra (residual {resid:.3e})")

    def __repr__(self):
        return f"TwoSidedAction({self.name!r}, {self.spec!r}, {len(self.pairs)} pairs)"

    @property
    def dim(self):
        return len(self.pairs)

    def pair_matrix(self):
        """Rows ``(a1, a2)`` in orthonormal coordinates of ``g + g``."""
        if not self.pairs:
            return np.zeros((0, 2 * self.spec.dim))
        return np.array([np.concatenate([a1.ortho, a2.ortho]) for a1, a2 in self.pairs])

    def pair_rank(self, tol_rank=DEFAULT_TOL_RANK):
        P = self.pair_matrix()
        return numerical_rank(P, tol_rank) if len(P) else 0

    def closure_residual(self) -> float:
        """Largest distance of a componentwise pair bracket from the span of the pairs."""
        P = self.pair_matrix()
        if len(P) == 0:
            return 0.0
        Q, _ = np.linalg.qr(P.T)
        C = self.spec.structure
        d = self.spec.dim
        worst = 0.0
        for i in range(len(P)):
            for j in range(i + 1, len(P)):
                b1 = np.einsum("kij,i,j->k", C, P[i, :d], P[j, :d])
                b2 = np.einsum("kij,i,j->k", C, P[i, d:], P[j, d:])
                v = np.concatenate([b1, b2])
                worst = max(worst, float(np.linalg.norm(v - Q @ (Q.T @ v))))
        return worst

    def is_abelian(self, tol=STRUCTURE_TOL) -> bool:
        C = self.spec.structure
        for i, (a1, a2) in enumerate(self.pairs):
            for b1, b2 in self.pairs[i + 1:]:
                c1 = np.einsum("kij,i,j->k", C, a1.ortho, b1.ortho)
                c2 = np.einsum("kij,i,j->k", C, a2.ortho, b2.ortho)
                if max(np.linalg.norm(c1), np.linalg.norm(c2)) > tol:
                    return False
        return True

    def combination(self, weights):
        """The pair ``sum_i w_i (a1_i, a2_i)``."""
        w = np.asarray(weights, dtype=float)
        a1 = sum((wi * p[0] for wi, p in zip(w, self.pairs)), self.spec.zero())
        a2 = sum((wi * p[1] for wi, p in zip(w, self.pairs)), self.spec.zero())
        return a1, a2


def _generator_rows(action, G):
    """Left-trivialized generators at ``G`` as orthonormal-coordinate rows."""
    spec = action.spec
    out = []
    Gh = G.conj().T
    for a1, a2 in action.pairs:
        v = spec.project_ortho(Gh @ a1.matrix @ G)
        out.append(v - a2.ortho)
    return np.array(out).reshape(len(action.pairs), spec.dim)


def generators_at(action: TwoSidedAction, g: GroupElement):
    """``Ad_{g^-1} a1 - a2`` for each pair."""
    if g.spec != action.spec:
        raise SpecMismatch(f"{g.spec!r} vs {action.spec!r}")
    return [action.spec.from_ortho_element(r) for r in _generator_rows(action, g.matrix)]


def moment_arrays(action, n_ortho, m_ortho):
    """Moment components ``<n, a1> - <m, a2>`` for stacked states."""
    A1 = np.array([a1.ortho for a1, _ in action.pairs]).reshape(-1, action.spec.dim)
    A2 = np.array([a2.ortho for _, a2 in action.pairs]).reshape(-1, action.spec.dim)
    return np.asarray(n_ortho) @ A1.T - np.asarray(m_ortho) @ A2.T


def moment(action: TwoSidedAction, x):
    """Moment map components ``<m, generator_i(g)>``."""
    rows = _generator_rows(action, x.g.matrix)
    return rows @ x.m.ortho


@dataclass(frozen=True, eq=False)
class VerticalData:
    vertical: Subspace
    horizontal: Subspace
    degenerate: bool = False


def vertical_horizontal(action: TwoSidedAction, tol_rank=DEFAULT_TOL_RANK) -> VerticalData:
    """Vertical space ``span{a1 - a2}`` at the identity and its orthogonal complement."""
    diffs = [a1 - a2 for a1, a2 in action.pairs]
    vertical = Subspace.span(action.spec, diffs, tol_rank)
    degenerate = vertical.dim < len(diffs)
    if degenerate:
        warnings.warn(
            f"{action.name}: vertical space has dimension {vertical.dim} < {len(diffs)} pairs",
            DegenerateVertical,
            stacklevel=2,
        )
    return VerticalData(vertical, vertical.complement(), degenerate)


def sample_horizontal(action: TwoSidedAction, seed, count, vh: VerticalData | None = None):
    """Unit-norm Gaussian samples of the horizontal space at the identity."""
    if vh is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateVertical)
            vh = vertical_horizontal(action)
    rng = np.random.default_rng(seed)
    H = vh.horizontal.ortho_basis
    out = []
    for _ in range(count):
        c = rng.standard_normal(H.shape[0])
        v = c @ H
        out.append(action.spec.from_ortho_element(v / np.linalg.norm(v)))
    return out


def u_xi_dim(action: TwoSidedAction, xi: AlgebraElement, vh: VerticalData | None = None,
             tol_rank=DEFAULT_TOL_RANK) -> int:
    """Dimension of the part of the vertical space commuting with ``xi``."""
    if vh is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateVertical)
            vh = vertical_horizontal(action, tol_rank)
    return centralizer(xi, within=vh.vertical, tol_rank=tol_rank).dim


def generator_singular_values(action: TwoSidedAction, G):
    """Singular values of the generator map ``u -> g`` at ``G`` (u orthonormalized in g + g)."""
    P = action.pair_matrix()
    if len(P) == 0:
        return np.zeros(0)
    # orthonormal basis of u inside g + g, expressed as combinations of the pairs
    U, s, Vt = np.linalg.svd(P.T, full_matrices=False)
    coeff = Vt.T / s  # columns: pair weights of each orthonormal u-vector
    rows = _generator_rows(action, G)
    return np.linalg.svd(coeff.T @ rows, compute_uv=False)


def infinitesimal_freeness(action: TwoSidedAction, seed=0, samples=100, points=None) -> float:
    """Smallest generator singular value over random group elements (or ``points``)."""
    if points is None:
        rng = np.random.default_rng(seed)
        points = [random_group_element(action.spec, rng) for _ in range(samples)]
    best = np.inf
    for g in points:
        G = g.matrix if isinstance(g, GroupElement) else np.asarray(g)
        s = generator_singular_values(action, G)
        if s.size:
            best = min(best, float(s.min()))
    return float(best)


# --------------------------------------------------------------------------
# Scenario catalog
# --------------------------------------------------------------------------

def eschenburg(k, l, p, q) -> TwoSidedAction:
    """Circle ``z -> (diag(z^k, z^l, z^{-k-l}), diag(z^p, z^q, z^{-p-q}))`` acting on SU(3)."""
    spec = algebra("su", 3)
    left = np.array([k, l, -k - l], dtype=float)
    right = np.array([p, q, -p - q], dtype=float)
    if left.sum() != 0 or right.sum() != 0:
        raise InvalidParameters("diagonal exponents must sum to zero")
    if not np.any(left) and not np.any(right):
        raise InvalidParameters("all Eschenburg parameters vanish")
    a1 = cartan_element(spec, left)
    a2 = cartan_element(spec, right)
    return TwoSidedAction(spec, [(a1, a2)], name=f"eschenburg({k},{l},{p},{q})")


def _sp1_block_basis():
    """Imaginary quaternions i, j, k as (A, B) entries of ``A + B j``."""
    return [(1j, 0.0), (0.0, 1.0), (0.0, 1j)]


def gromoll_meyer() -> TwoSidedAction:
    """Sp(1) acting on Sp(2) by ``q . Q = diag(q, q) Q diag(q, 1)^{-1}``."""
    spec = algebra("sp", 2)
    pairs = []
    for a, b in _sp1_block_basis():
        def embed(first, second):
            A = np.diag([first * a, second * a]).astype(complex)
            B = np.diag([first * b, second * b]).astype(complex)
            return AlgebraElement.from_matrix(spec, np.block([[A, B], [-B.conj(), A.conj()]]))
        pairs.append((embed(1, 1), embed(1, 0)))
    return TwoSidedAction(spec, pairs, name="gromoll_meyer")


def flag(family="su", n=3) -> TwoSidedAction:
    """``U = {e} x T`` acting on the right by the default maximal torus."""
    spec = algebra(family, n)
    t = default_cartan(spec)
    pairs = [(spec.zero(), tau) for tau in t.elements]
    return TwoSidedAction(spec, pairs, name=f"flag({family}({n}))")


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    factory: Callable
    parameters: dict
    description: str

    def signature(self):
        args = ", ".join(f"{k}: {v['type']} = {v['default']!r}" for k, v in self.parameters.items())
        return f"{self.name}({args})"

    def build(self, **params):
        unknown = set(params) - set(self.parameters)
        if unknown:
            raise InvalidParameters(f"{self.name}: unknown parameters {sorted(unknown)}")
        kwargs = {k: v["default"] for k, v in self.parameters.items()}
        kwargs.update(params)
        return self.factory(**kwargs)

    def to_json(self):
        return {"name": self.name, "parameters": self.parameters, "description": self.description,
                "signature": self.signature()}


def builtin_scenarios():
    """Name -> :class:`CatalogEntry` for the built-in bi-quotient actions."""
    entries = [
        CatalogEntry(
            "eschenburg", eschenburg,
            {"k": {"type": "int", "default": 1}, "l": {"type": "int", "default": -1},
             "p": {"type": "int", "default": 2}, "q": {"type": "int", "default": 2}},
            "Eschenburg circle action on SU(3); freeness (gcd conditions) is the caller's responsibility",
        ),
        CatalogEntry("gromoll_meyer", gromoll_meyer, {},
                     "Sp(1) acting on Sp(2); quotient is the Gromoll-Meyer exotic 7-sphere"),
        CatalogEntry(
            "flag", flag,
            {"family": {"type": "str", "default": "su"}, "n": {"type": "int", "default": 3}},
            "Right action of the maximal torus; quotient is the full flag manifold G/T",
        ),
    ]
    return {e.name: e for e in entries}
