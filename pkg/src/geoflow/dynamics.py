"""Geodesic flows on left-trivialized T*G.

Equations of motion for ``H = 1/2 <phi_L m, m> + 1/2 <phi_R n, n>``::

    g' = g Omega,   Omega = phi_L m + Ad_{g^-1} phi_R (Ad_g m)
    m' = [m, phi_L m]
    n' = [phi_R n, n]          (n = Ad_g m, implied by the two above)

The right-hand sides are gated in the tests against the canonical flow built
from finite-difference gradients of ``H``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NumericalFailure
from .liealg import (
    AlgebraElement,
    GroupElement,
    expm_skew,
    power_sums,
)
from .metrics import MetricSpec, adjoint_matrix, velocity_arrays

METHODS = ("lie-rk4", "lie-rk4-uncorrected")


@dataclass(frozen=True, eq=False)
class CotangentState:
    """Phase point ``(g, m)``; ``n = Ad_g m`` is derived and cached."""

    g: GroupElement
    m: AlgebraElement

    def __post_init__(self):
        if self.g.spec != self.m.spec:
            raise ValueError("g and m belong to different algebras")

    @property
    def spec(self):
        return self.m.spec

    @cached_property
    def n(self) -> AlgebraElement:
        G = self.g.matrix
        return AlgebraElement(self.spec, self.spec.project(G @ self.m.matrix @ G.conj().T))

    @classmethod
    def at_identity(cls, m: AlgebraElement):
        return cls(m.spec.identity(), m)

    def scaled(self, c):
        return CotangentState(self.g, self.m * c)


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    T: float = 10.0
    method: str = "lie-rk4"
    reprojection: bool = True

    def __post_init__(self):
        if not self.h > 0 or not self.T > 0:
            raise ValueError("h and T must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    @property
    def steps(self) -> int:
        return max(1, int(np.ceil(self.T / self.h - 1e-9)))


def _bracket_ortho(structure, u, v):
    return np.einsum("kij,i,j->k", structure, u, v)


def _m_rate(spec, phi_l, y):
    if phi_l is None:
        return np.zeros_like(y)
    return _bracket_ortho(spec.structure, y, phi_l @ y)


def _n_rate(spec, phi_r, z):
    if phi_r is None:
        return np.zeros_like(z)
    return _bracket_ortho(spec.structure, phi_r @ z, z)


def vector_field(metric: MetricSpec, x: CotangentState):
    """``(Omega, m_dot)`` at ``x``; the group moves by ``g' = g Omega``."""
    spec = x.spec
    phi_l, _ = metric.operators(spec.dim)
    y = x.m.ortho
    omega = velocity_arrays(metric, spec, x.g.matrix, y)
    return spec.from_ortho_element(omega), spec.from_ortho_element(_m_rate(spec, phi_l, y))


def reproject(G):
    """Unitary polar factor of ``G``."""
    try:
        U, _, Vh = np.linalg.svd(G)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(f"polar reprojection failed: {exc}") from exc
    return U @ Vh


def _step_arrays(metric, spec, G, y, h, method="lie-rk4", z=None):
    """One step on raw arrays. Returns ``(G, y, z)``."""
    phi_l, phi_r = metric.operators(spec.dim)
    C = spec.structure
    need_ad = phi_r is not None

    def omega(Gs, ys):
        AdG = adjoint_matrix(spec, Gs) if need_ad else None
        return velocity_arrays(metric, spec, Gs, ys, AdG)

    def expm(v):
        return expm_skew(spec.ortho_matrix(v))

    k1 = _m_rate(spec, phi_l, y)
    w1 = omega(G, y)
    y2 = y + 0.5 * h * k1
    G2 = G @ expm(0.5 * h * w1)
    k2 = _m_rate(spec, phi_l, y2)
    w2 = omega(G2, y2)
    y3 = y + 0.5 * h * k2
    u3 = 0.5 * h * w2
    if method == "lie-rk4":
        u3 = u3 + 0.125 * h * h * _bracket_ortho(C, w1, w2)
    G3 = G @ expm(u3)
    k3 = _m_rate(spec, phi_l, y3)
    w3 = omega(G3, y3)
    y4 = y + h * k3
    G4 = G @ expm(h * w3)
    k4 = _m_rate(spec, phi_l, y4)
    w4 = omega(G4, y4)

    y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    u = (h / 6.0) * (w1 + 2 * w2 + 2 * w3 + w4)
    if method == "lie-rk4":
        u = u + (h * h / 12.0) * _bracket_ortho(C, w1, w4)
    G_new = G @ expm(u)

    z_new = None
    if z is not None:
        l1 = _n_rate(spec, phi_r, z)
        l2 = _n_rate(spec, phi_r, z + 0.5 * h * l1)
        l3 = _n_rate(spec, phi_r, z + 0.5 * h * l2)
        l4 = _n_rate(spec, phi_r, z + h * l3)
        z_new = z + (h / 6.0) * (l1 + 2 * l2 + 2 * l3 + l4)
    return G_new, y_new, z_new


def step(metric: MetricSpec, x: CotangentState, h: float, method="lie-rk4",
         reprojection=True) -> CotangentState:
    """Advance ``x`` by one Lie-group RK4 step of size ``h``."""
    if h == 0:
        return x
    spec = x.spec
    G, y, _ = _step_arrays(metric, spec, x.g.matrix, x.m.ortho, h, method)
    if reprojection:
        G = reproject(G)
    return CotangentState(GroupElement.unchecked(spec, G), spec.from_ortho_element(y))


def exact_biinvariant_geodesic(g0: GroupElement, m: AlgebraElement, t: float) -> GroupElement:
    """``g0 exp(t m)``: the bi-invariant geodesic with body momentum ``m``."""
    return GroupElement.unchecked(g0.spec, g0.matrix @ expm_skew(t * m.matrix))


_POLY_TAG = re.compile(r"^p(\d+)\((m|n)\)$")
_SHIFT_TAG = re.compile(r"^p(\d+)\(m\+([0-9.eE+-]+)a\)$")


def parse_watch(tag):
    """Classify a watch tag.

    Accepted: ``"H"``, ``"p<k>(m)"``, ``"p<k>(n)"``, ``"p<k>(m+<lam>a)"``,
    ``"moment"``, ``"reconstruction"``.
    """
    if tag in ("H", "moment", "reconstruction"):
        return (tag,)
    mt = _POLY_TAG.match(tag)
    if mt:
        return ("poly", int(mt.group(1)), mt.group(2))
    mt = _SHIFT_TAG.match(tag)
    if mt:
        return ("shift", int(mt.group(1)), float(mt.group(2)))
    raise ValueError(f"unknown watch tag {tag!r}")


@dataclass(eq=False)
class Trajectory:
    """Sampled solution with per-quantity drift tables.

    ``G`` holds group matrices, ``y`` the momentum in orthonormal coordinates,
    ``z`` (optional) the independently evolved spatial momentum.
    """

    spec: object
    metric: MetricSpec
    times: np.ndarray
    G: np.ndarray
    y: np.ndarray
    z: np.ndarray | None = None
    values: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    relative_drift: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def m_coords(self):
        return self.spec.from_ortho(self.y)

    @cached_property
    def n_ortho(self):
        M = self.spec.ortho_matrix(self.y)
        return self.spec.project_ortho(self.G @ M @ np.swapaxes(self.G, -1, -2).conj())

    @property
    def n_coords(self):
        return self.spec.from_ortho(self.n_ortho)

    def state(self, i) -> CotangentState:
        return CotangentState(GroupElement.unchecked(self.spec, self.G[i]),
                              self.spec.from_ortho_element(self.y[i]))

    @property
    def states(self):
        return [self.state(i) for i in range(len(self))]

    def unitarity_defect(self):
        eye = np.eye(self.G.shape[-1])
        P = np.swapaxes(self.G, -1, -2).conj() @ self.G - eye
        return float(np.linalg.norm(P, axis=(-2, -1)).max())

    def to_csv(self, path_or_file):
        """Write time, m coordinates, n coordinates and watched values.

        Doubles are printed with 17 significant digits.
        """
        d = self.spec.dim
        cols = ["time"] + [f"m{i}" for i in range(d)] + [f"n{i}" for i in range(d)]
        keys = list(self.values)
        cols += keys
        data = [self.times[:, None], self.m_coords, self.n_coords]
        data += [np.asarray(self.values[k])[:, None] for k in keys]
        table = np.hstack(data)
        lines = [",".join(cols)]
        lines += [",".join(format(v, ".17g") for v in row) for row in table]
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w", newline="") as fh:
                fh.write(text)


def _watch_series(traj: Trajectory, tag, action=None, shift_element=None):
    spec = traj.spec
    kind = parse_watch(tag)
    M = spec.ortho_matrix(traj.y)
    if kind[0] == "H":
        phi_l, phi_r = traj.metric.operators(spec.dim)
        H = np.zeros(len(traj))
        if phi_l is not None:
            H += 0.5 * np.einsum("ti,ij,tj->t", traj.y, phi_l, traj.y)
        if phi_r is not None:
            n = traj.n_ortho
            H += 0.5 * np.einsum("ti,ij,tj->t", n, phi_r, n)
        return {"H": H}
    if kind[0] == "poly":
        _, k, side = kind
        if side == "m":
            return {tag: power_sums(M, k)}
        return {tag: power_sums(spec.ortho_matrix(traj.n_ortho), k)}
    if kind[0] == "shift":
        _, k, lam = kind
        if shift_element is None:
            left = traj.metric.left
            if left is None or isinstance(left, str):
                raise ValueError("shift integrals need a shift element or a sectional left metric")
            shift_element = left.a
        S = M + lam * shift_element.matrix
        return {tag: power_sums(S, k)}
    if kind[0] == "moment":
        if action is None:
            raise ValueError("the 'moment' watch needs an action")
        from .actions import moment_arrays

        comps = moment_arrays(action, traj.n_ortho, traj.y)
        return {f"moment[{i}]": comps[:, i] for i in range(comps.shape[1])}
    if kind[0] == "reconstruction":
        if traj.z is None:
            raise ValueError("reconstruction requires the evolved spatial momentum")
        return {"reconstruction": np.linalg.norm(traj.n_ortho - traj.z, axis=1)}
    raise AssertionError(kind)  # pragma: no cover


def integrate(metric: MetricSpec, x0: CotangentState, cfg: IntegratorConfig = IntegratorConfig(),
              watch=(), action=None, shift_element=None) -> Trajectory:
    """Integrate from ``x0`` over ``[0, cfg.T]`` and tabulate watched drifts."""
    spec = x0.spec
    nsteps = cfg.steps
    times = np.minimum(cfg.h * np.arange(nsteps + 1), cfg.T)
    times[-1] = cfg.T
    G = np.empty((nsteps + 1, spec.size, spec.size), dtype=complex)
    y = np.empty((nsteps + 1, spec.dim))
    track = "reconstruction" in watch
    z = np.empty((nsteps + 1, spec.dim)) if track else None
    G[0] = x0.g.matrix
    y[0] = x0.m.ortho
    zc = x0.n.ortho if track else None
    if track:
        z[0] = zc
    Gc, yc = G[0], y[0]
    for i in range(nsteps):
        h = times[i + 1] - times[i]
        Gc, yc, zc = _step_arrays(metric, spec, Gc, yc, h, cfg.method, zc)
        if cfg.reprojection:
            Gc = reproject(Gc)
        if not (np.all(np.isfinite(yc)) and np.all(np.isfinite(Gc))):
            raise NumericalFailure(f"non-finite state at step {i + 1}")
        G[i + 1] = Gc
        y[i + 1] = yc
        if track:
            z[i + 1] = zc
    traj = Trajectory(spec, metric, times, G, y, z)
    for tag in watch:
        for key, series in _watch_series(traj, tag, action, shift_element).items():
            series = np.asarray(series, dtype=float)
            traj.values[key] = series
            if key == "reconstruction":
                dev = float(np.abs(series).max())
                traj.drift[key] = dev
                traj.relative_drift[key] = dev / max(1.0, float(np.linalg.norm(y[0])))
            else:
                dev = float(np.abs(series - series[0]).max())
                traj.drift[key] = dev
                traj.relative_drift[key] = dev / max(1.0, abs(float(series[0])))
    return traj


def geodesic_error(traj: Trajectory) -> float:
    """Max distance from the closed-form bi-invariant geodesic through ``traj``'s start."""
    spec = traj.spec
    M0 = spec.ortho_matrix(traj.y[0])
    E = expm_skew(traj.times[:, None, None] * M0[None])
    ref = traj.G[0] @ E
    return float(np.linalg.norm(traj.G - ref, axis=(-2, -1)).max())
