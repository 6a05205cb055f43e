"""Compact matrix Lie algebras su(n), so(n), sp(n) and their groups.

Every algebra is realized inside u(N) for its defining representation, with
the invariant inner product ``<X, Y> = -Re tr(XY)``.  Elements carry real
coordinates over a fixed orthogonal (not orthonormal) basis; internally most
linear algebra runs in *orthonormal* coordinates ``coords * sqrt(gram)`` so
that SVD thresholds and orthogonal complements are taken with respect to the
invariant inner product.

sp(n) is realized as complex 2n x 2n matrices X with ``X^T J + J X = 0``,
``J = [[0, I], [-I, 0]]``; quaternionic matrices ``A + B j`` map to
``[[A, B], [-conj(B), conj(A)]]``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalFailure, RankMismatch, SpecMismatch

DEFAULT_TOL_RANK = 1e-8
STRUCTURE_TOL = 1e-10

FAMILIES = ("su", "so", "sp")


def rank_threshold(singular_values, tol_rank=DEFAULT_TOL_RANK):
    """Cutoff below which a singular value counts as zero."""
    s = np.asarray(singular_values, dtype=float)
    smax = float(s.max()) if s.size else 0.0
    return tol_rank * max(smax, 1.0)


def numerical_rank(matrix, tol_rank=DEFAULT_TOL_RANK):
    """Rank of ``matrix`` under the package-wide thresholding policy."""
    matrix = np.atleast_2d(np.asarray(matrix))
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(s > rank_threshold(s, tol_rank)))


def _unit(n, i, j):
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def _su_basis(n):
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            basis.append(_unit(n, i, j) - _unit(n, j, i))
            basis.append(1j * (_unit(n, i, j) + _unit(n, j, i)))
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -k
        basis.append(1j * np.diag(d).astype(complex))
    return basis


def _so_basis(n):
    return [_unit(n, i, j) - _unit(n, j, i) for i in range(n) for j in range(i + 1, n)]


def _sp_embed(A, B):
    return np.block([[A, B], [-B.conj(), A.conj()]])


def _sp_basis(n):
    zero = np.zeros((n, n), dtype=complex)
    basis = []
    # u(n) block
    for i in range(n):
        for j in range(i + 1, n):
            basis.append(_sp_embed(_unit(n, i, j) - _unit(n, j, i), zero))
            basis.append(_sp_embed(1j * (_unit(n, i, j) + _unit(n, j, i)), zero))
    for i in range(n):
        basis.append(_sp_embed(1j * _unit(n, i, i), zero))
    # symmetric complex block
    for i in range(n):
        for j in range(i, n):
            s = _unit(n, i, j) + _unit(n, j, i) if i != j else _unit(n, i, i)
            basis.append(_sp_embed(zero, s))
            basis.append(_sp_embed(zero, 1j * s))
    return basis


def symplectic_form(n):
    """The standard 2n x 2n form ``J = [[0, I], [-I, 0]]``."""
    eye = np.eye(n)
    z = np.zeros((n, n))
    return np.block([[z, eye], [-eye, z]]).astype(complex)


class AlgebraSpec:
    """A compact matrix Lie algebra with a fixed orthogonal real basis.

    Use :func:`algebra` to obtain instances; specs are cached so that equal
    ``(family, n)`` pairs share one object.
    """

    def __init__(self, family: str, n: int):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
        if int(n) != n or n < 2:
            raise ValueError("n must be an integer >= 2")
        self.family = family
        self.n = int(n)
        builder = {"su": _su_basis, "so": _so_basis, "sp": _sp_basis}[family]
        self.basis = np.array(builder(self.n))
        self.dim = len(self.basis)
        self.size = self.basis.shape[1]
        self.gram = -np.einsum("kij,kji->k", self.basis, self.basis).real
        self.scale = np.sqrt(self.gram)
        self.obasis = self.basis / self.scale[:, None, None]
        prod = np.einsum("aij,bjk->abik", self.obasis, self.obasis)
        comm = prod - prod.transpose(1, 0, 2, 3)
        # structure constants c[k, i, j] = <[e_i, e_j], e_k>, orthonormal basis
        self.structure = -np.einsum("ijab,kba->kij", comm, self.obasis).real
        self._rank = None

    # identity and display ------------------------------------------------
    @property
    def key(self):
        return (self.family, self.n)

    def __repr__(self):
        return f"{self.family}({self.n})"

    def __eq__(self, other):
        return isinstance(other, AlgebraSpec) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def rank(self) -> int:
        if self._rank is None:
            self._rank = rank_of_algebra(self)
        return self._rank

    @property
    def closed_form_rank(self) -> int:
        return {"su": self.n - 1, "so": self.n // 2, "sp": self.n}[self.family]

    @property
    def degrees(self) -> tuple:
        """Degrees of the power-sum invariants used as generators."""
        if self.family == "su":
            return tuple(range(2, self.n + 1))
        return tuple(2 * k for k in range(1, self.closed_form_rank + 1))

    # coordinate plumbing ---------------------------------------------------
    def to_ortho(self, coords):
        return np.asarray(coords, dtype=float) * self.scale

    def from_ortho(self, ortho):
        return np.asarray(ortho, dtype=float) / self.scale

    def matrix_of(self, coords):
        return np.tensordot(np.asarray(coords, dtype=float), self.basis, axes=(-1, 0))

    def ortho_matrix(self, ortho):
        return np.tensordot(np.asarray(ortho, dtype=float), self.obasis, axes=(-1, 0))

    def project_ortho(self, matrix):
        """Orthonormal coordinates of the orthogonal projection onto the algebra.

        Works on a single matrix or a stack ``(..., N, N)``.
        """
        return -np.einsum("...ij,kji->...k", matrix, self.obasis).real

    def project(self, matrix):
        return self.project_ortho(matrix) / self.scale

    def ad_ortho(self, ortho):
        """Matrix of ``ad_x`` in orthonormal coordinates."""
        return np.einsum("kji,j->ki", self.structure, ortho)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros(self.dim))

    def element(self, coords) -> "AlgebraElement":
        return AlgebraElement(self, np.asarray(coords, dtype=float))

    def from_ortho_element(self, ortho) -> "AlgebraElement":
        return AlgebraElement(self, self.from_ortho(ortho))

    def basis_element(self, i) -> "AlgebraElement":
        c = np.zeros(self.dim)
        c[i] = 1.0
        return AlgebraElement(self, c)

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.eye(self.size, dtype=complex))

    def closure_residual(self) -> float:
        """Largest residual of re-expanding basis brackets in the basis."""
        b = self.basis
        prod = np.einsum("aij,bjk->abik", b, b)
        comm = prod - prod.transpose(1, 0, 2, 3)
        coords = self.project(comm)
        back = np.tensordot(coords, b, axes=(-1, 0))
        return float(np.abs(back - comm).max())


@functools.lru_cache(maxsize=None)
def algebra(family: str, n: int) -> AlgebraSpec:
    """Cached constructor, e.g. ``algebra("su", 3)``."""
    return AlgebraSpec(family, n)


def parse_algebra(name: str) -> AlgebraSpec:
    """Parse names like ``"su(3)"`` or ``"sp2"``."""
    s = name.strip().lower().replace(" ", "")
    fam = s[:2]
    rest = s[2:].strip("()")
    if fam not in FAMILIES or not rest.isdigit():
        raise ValueError(f"cannot parse algebra name {name!r}")
    return algebra(fam, int(rest))


def _check_same(*specs):
    first = specs[0]
    for s in specs[1:]:
        if s != first:
            raise SpecMismatch(f"{first!r} vs {s!r}")
    return first


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Real coordinates over the basis of ``spec``."""

    spec: AlgebraSpec
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.shape != (self.spec.dim,):
            raise ValueError(f"expected {self.spec.dim} coordinates, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_matrix(cls, spec, matrix, check=True, tol=1e-10):
        matrix = np.asarray(matrix, dtype=complex)
        coords = spec.project(matrix)
        if check:
            resid = np.abs(spec.matrix_of(coords) - matrix).max()
            if resid > tol * max(1.0, np.abs(matrix).max()):
                raise ValueError(f"matrix is not in {spec!r} (residual {resid:.3e})")
        return cls(spec, coords)

    @property
    def matrix(self):
        return self.spec.matrix_of(self.coords)

    @property
    def ortho(self):
        return self.spec.to_ortho(self.coords)

    def norm(self):
        return float(np.linalg.norm(self.ortho))

    def _other(self, other):
        _check_same(self.spec, other.spec)
        return other.coords

    def __add__(self, other):
        return AlgebraElement(self.spec, self.coords + self._other(other))

    def __sub__(self, other):
        return AlgebraElement(self.spec, self.coords - self._other(other))

    def __neg__(self):
        return AlgebraElement(self.spec, -self.coords)

    def __mul__(self, scalar):
        return AlgebraElement(self.spec, self.coords * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return AlgebraElement(self.spec, self.coords / float(scalar))

    def __repr__(self):
        return f"AlgebraElement({self.spec!r}, {np.array2string(self.coords, precision=4)})"


def _family_defect(spec, g):
    if spec.family == "su":
        return abs(np.linalg.det(g) - 1.0)
    if spec.family == "so":
        return max(float(np.abs(g.imag).max()), abs(np.linalg.det(g) - 1.0))
    J = symplectic_form(spec.n)
    return float(np.abs(g.T @ J @ g - J).max())


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A matrix in the compact group of ``spec``, validated on construction."""

    spec: AlgebraSpec
    matrix: np.ndarray
    tol: float = field(default=STRUCTURE_TOL, repr=False)

    def __post_init__(self):
        g = np.array(self.matrix, dtype=complex)
        N = self.spec.size
        if g.shape != (N, N):
            raise ValueError(f"expected a {N}x{N} matrix, got {g.shape}")
        if self.tol is not None:
            udef = unitarity_defect(g)
            fdef = _family_defect(self.spec, g)
            if udef > self.tol or fdef > self.tol:
                raise ValueError(
                    f"not an element of the {self.spec!r} group: unitarity defect "
                    f"{udef:.3e}, family defect {fdef:.3e}"
                )
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)

    @classmethod
    def unchecked(cls, spec, matrix):
        return cls(spec, matrix, tol=None)

    def __matmul__(self, other):
        _check_same(self.spec, other.spec)
        return GroupElement.unchecked(self.spec, self.matrix @ other.matrix)

    def inverse(self):
        return GroupElement.unchecked(self.spec, self.matrix.conj().T)

    def defect(self):
        return max(unitarity_defect(self.matrix), _family_defect(self.spec, self.matrix))


def unitarity_defect(g):
    g = np.asarray(g)
    return float(np.linalg.norm(g.conj().T @ g - np.eye(g.shape[0])))


def group_distance(g1, g2):
    """Frobenius distance between two group matrices."""
    a = g1.matrix if isinstance(g1, GroupElement) else np.asarray(g1)
    b = g2.matrix if isinstance(g2, GroupElement) else np.asarray(g2)
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of an algebra held as orthonormal rows in orthonormal coordinates."""

    spec: AlgebraSpec
    ortho_basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.ortho_basis, dtype=float).reshape(-1, self.spec.dim)
        b.setflags(write=False)
        object.__setattr__(self, "ortho_basis", b)

    @classmethod
    def span(cls, spec, elements, tol_rank=DEFAULT_TOL_RANK):
        """Orthonormalized span of AlgebraElements (or orthonormal-coordinate rows)."""
        rows = [e.ortho if isinstance(e, AlgebraElement) else np.asarray(e, float) for e in elements]
        if not rows:
            return cls(spec, np.zeros((0, spec.dim)))
        M = np.array(rows).reshape(len(rows), spec.dim)
        _, s, vt = np.linalg.svd(M, full_matrices=False)
        r = int(np.sum(s > rank_threshold(s, tol_rank)))
        return cls(spec, vt[:r])

    @classmethod
    def whole(cls, spec):
        return cls(spec, np.eye(spec.dim))

    @property
    def dim(self) -> int:
        return self.ortho_basis.shape[0]

    @property
    def elements(self):
        return [self.spec.from_ortho_element(row) for row in self.ortho_basis]

    @property
    def projector(self):
        return self.ortho_basis.T @ self.ortho_basis

    def project(self, x: AlgebraElement) -> AlgebraElement:
        return self.spec.from_ortho_element(self.projector @ x.ortho)

    def residual(self, x: AlgebraElement) -> float:
        """Norm of the component of ``x`` orthogonal to the subspace."""
        y = x.ortho
        return float(np.linalg.norm(y - self.projector @ y))

    def complement(self) -> "Subspace":
        P = np.eye(self.spec.dim) - self.projector
        w, v = np.linalg.eigh(P)
        return Subspace(self.spec, v[:, w > 0.5].T)

    def gram_defect(self) -> float:
        b = self.ortho_basis
        return float(np.abs(b @ b.T - np.eye(self.dim)).max()) if self.dim else 0.0

    def principal_angles(self, other: "Subspace"):
        if self.dim == 0 or other.dim == 0:
            return np.zeros(0)
        s = np.linalg.svd(self.ortho_basis @ other.ortho_basis.T, compute_uv=False)
        return np.arccos(np.clip(s, -1.0, 1.0))


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------

def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    """Matrix commutator ``XY - YX`` re-expanded in the basis."""
    spec = _check_same(X.spec, Y.spec)
    x = X.ortho
    out = np.einsum("kij,i,j->k", spec.structure, x, Y.ortho)
    return spec.from_ortho_element(out)


def inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    """Invariant inner product ``-Re tr(XY)``."""
    _check_same(X.spec, Y.spec)
    return float(np.dot(X.ortho, Y.ortho))


def expm_skew(M):
    """exp of a skew-Hermitian matrix (or stack) through an eigendecomposition."""
    H = 1j * np.asarray(M)
    H = 0.5 * (H + np.swapaxes(H, -1, -2).conj())
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    return (V * np.exp(-1j * w)[..., None, :]) @ np.swapaxes(V, -1, -2).conj()


def exp_to_group(X: AlgebraElement, t: float = 1.0) -> GroupElement:
    return GroupElement(X.spec, expm_skew(t * X.matrix))


def Ad(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    """Adjoint action ``g X g^{-1}``."""
    spec = _check_same(g.spec, X.spec)
    G = g.matrix
    return AlgebraElement(spec, spec.project(G @ X.matrix @ G.conj().T))


def ad_matrix(X: AlgebraElement):
    """``ad_X`` as a matrix acting on orthonormal coordinates."""
    return X.spec.ad_ortho(X.ortho)


def centralizer(xi: AlgebraElement, within: Subspace | None = None,
                tol_rank=DEFAULT_TOL_RANK) -> Subspace:
    """Kernel of ``eta -> [xi, eta]``, optionally restricted to a subspace."""
    spec = xi.spec
    if within is None:
        W = np.eye(spec.dim)
    else:
        _check_same(spec, within.spec)
        W = within.ortho_basis
    if W.shape[0] == 0:
        return Subspace(spec, W)
    M = ad_matrix(xi) @ W.T
    _, s, vt = np.linalg.svd(M)
    thr = rank_threshold(s, tol_rank)
    r = int(np.sum(s > thr))
    null = vt[r:]
    return Subspace(spec, null @ W)


def is_regular(xi: AlgebraElement, tol_rank=DEFAULT_TOL_RANK) -> bool:
    return centralizer(xi, tol_rank=tol_rank).dim == xi.spec.rank


def _spectrum(matrix):
    """Real numbers lambda_j with ``spectrum(matrix) = {i lambda_j}``."""
    H = -1j * np.asarray(matrix)
    H = 0.5 * (H + np.swapaxes(H, -1, -2).conj())
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc


def spectrum(xi: AlgebraElement):
    return _spectrum(xi.matrix)[0]


def power_sums(matrices, k):
    """Vectorized ``p_k`` over a stack of algebra matrices."""
    lam = np.linalg.eigvalsh(-1j * np.asarray(matrices))
    return np.sum(lam ** k, axis=-1)


def invariant_poly(k: int, xi: AlgebraElement) -> float:
    """Power sum ``p_k(xi) = sum_j lambda_j^k`` of the eigenvalues ``i lambda_j``."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    lam = spectrum(xi)
    return float(np.sum(lam ** k))


def grad_poly_ortho(spec, matrix, k):
    """Orthonormal coordinates of the gradient of ``p_k`` at an algebra matrix."""
    lam, V = _spectrum(matrix)
    G = 1j * k * (V * lam ** (k - 1)) @ V.conj().T
    return spec.project_ortho(G)


def grad_invariant_poly(k: int, xi: AlgebraElement) -> AlgebraElement:
    """Gradient of ``p_k`` with respect to the invariant inner product."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    return xi.spec.from_ortho_element(grad_poly_ortho(xi.spec, xi.matrix, k))


def random_element(spec: AlgebraSpec, rng, scale=1.0) -> AlgebraElement:
    """Gaussian coordinates in the orthonormal basis."""
    return spec.from_ortho_element(scale * rng.standard_normal(spec.dim))


def random_group_element(spec: AlgebraSpec, rng, scale=2.0) -> GroupElement:
    return exp_to_group(random_element(spec, rng, scale))


def rank_of_algebra(spec: AlgebraSpec, samples=32, seed=0, tol_rank=DEFAULT_TOL_RANK) -> int:
    """Minimum centralizer dimension over random samples, checked against the closed form."""
    rng = np.random.default_rng(seed)
    sampled = min(centralizer(random_element(spec, rng), tol_rank=tol_rank).dim
                  for _ in range(samples))
    if sampled != spec.closed_form_rank:
        raise RankMismatch(f"{spec!r}: sampled rank {sampled}, closed form {spec.closed_form_rank}")
    return sampled


def default_cartan(spec: AlgebraSpec) -> Subspace:
    """Diagonal (block-diagonal for so) maximal abelian subalgebra."""
    return Subspace.span(spec, [cartan_element(spec, e) for e in np.eye(spec.closed_form_rank)])


def cartan_element(spec: AlgebraSpec, params: Sequence[float]) -> AlgebraElement:
    """Element of the default Cartan subalgebra from its eigen-parameters.

    su(n): ``i diag(params)`` with ``len(params) in (n-1, n)``; a full-length
    list must be traceless, a short one is completed by the negative sum.
    sp(n): ``diag(i p, -i p)``.  so(n): ``p_k`` times the k-th 2x2 rotation block.
    """
    p = np.asarray(params, dtype=float)
    N = spec.size
    if spec.family == "su":
        if len(p) == spec.n - 1:
            p = np.append(p, -p.sum())
        if len(p) != spec.n:
            raise ValueError(f"su({spec.n}) Cartan element needs {spec.n} entries")
        if abs(p.sum()) > 1e-12 * max(1.0, np.abs(p).max()):
            raise ValueError("su(n) Cartan entries must sum to zero")
        M = 1j * np.diag(p)
    elif spec.family == "sp":
        if len(p) != spec.n:
            raise ValueError(f"sp({spec.n}) Cartan element needs {spec.n} entries")
        M = np.diag(np.concatenate([1j * p, -1j * p]))
    else:
        r = spec.n // 2
        if len(p) != r:
            raise ValueError(f"so({spec.n}) Cartan element needs {r} entries")
        M = np.zeros((N, N), dtype=complex)
        for k, v in enumerate(p):
            M[2 * k, 2 * k + 1] = v
            M[2 * k + 1, 2 * k] = -v
    return AlgebraElement.from_matrix(spec, M)


def stack_ortho(elements: Iterable[AlgebraElement]):
    return np.array([e.ortho for e in elements])
