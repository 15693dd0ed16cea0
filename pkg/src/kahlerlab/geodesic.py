"""Weak geodesics and subgeodesics in the reduced model.

A path of potentials is stored as one symplectic potential per node of a
uniform t-grid on [0, 1].  Weak geodesics are built by linear interpolation
of the symplectic potentials, which is the exact solution of the homogeneous
Monge-Ampere boundary problem in the invariant reduction; ``hmae_residual``
provides the independent finite-difference verification.

Complexified time is fixed to t = Re(tau), so invariant plurisubharmonicity
of the complexified potential Phi(t, s) reduces to convexity in two real
variables and all Hessian checks are 2 x 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GridMismatchError, ResolutionError, SubgeodesicError
from .potential import (
    SymplecticPotential,
    combined_model,
    s_grid,
    trapezoid_weights,
)

PathKind = Literal["geodesic", "subgeodesic", "generic"]

T_NODES = 65  # default node count of the unit t-grid

# PSD certification slack for subgeodesic Hessians (absolute eigenvalue)
PSD_TOL = 1e-10


@dataclass
class MetricPath:
    """One symplectic potential per t-node, plus a construction tag."""

    t: np.ndarray
    slices: list
    kind: PathKind = "generic"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1 or self.t.size != len(self.slices):
            raise GridMismatchError("t-grid and slice list lengths differ")
        x0 = self.slices[0].x
        for u in self.slices[1:]:
            if u.x.shape != x0.shape or not np.all(u.x == x0):
                raise GridMismatchError("all slices must share one moment grid")

    def __len__(self) -> int:
        return self.t.size

    @property
    def x(self) -> np.ndarray:
        return self.slices[0].x

    def g_matrix(self) -> np.ndarray:
        return np.stack([u.g for u in self.slices])

    def radial_profile(self, s: np.ndarray | None = None):
        """Radial representation Phi(t, s) and the moment map X(t, s)."""
        if s is None:
            s = s_grid()
        Phi = np.empty((len(self), s.size))
        X = np.empty_like(Phi)
        for i, u in enumerate(self.slices):
            Phi[i], X[i] = u.radial(s)
        return s, Phi, X

    def to_dict(self) -> dict:
        return {
            "t_grid": self.t.tolist(),
            "kind": self.kind,
            "slices": [u.to_dict() for u in self.slices],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MetricPath":
        return cls(
            np.asarray(d["t_grid"], dtype=float),
            [SymplecticPotential.from_dict(sd) for sd in d["slices"]],
            d["kind"],
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricPath":
        return cls.from_dict(json.loads(text))


@dataclass
class HessianField:
    """Centered second differences of a scalar field over the (t, s) grid.

    Entries live on the interior nodes (one layer trimmed in each variable);
    symmetry of the matrix is exact by construction.
    """

    tt: np.ndarray
    ss: np.ndarray
    ts: np.ndarray

    @classmethod
    def of(cls, F: np.ndarray, dt: float, ds: float) -> "HessianField":
        tt = (F[2:, 1:-1] - 2.0 * F[1:-1, 1:-1] + F[:-2, 1:-1]) / dt**2
        ss = (F[1:-1, 2:] - 2.0 * F[1:-1, 1:-1] + F[1:-1, :-2]) / ds**2
        ts = (F[2:, 2:] - F[2:, :-2] - F[:-2, 2:] + F[:-2, :-2]) / (4.0 * dt * ds)
        return cls(tt, ss, ts)

    def det(self) -> np.ndarray:
        return self.tt * self.ss - self.ts**2

    def min_eig(self) -> np.ndarray:
        half_tr = 0.5 * (self.tt + self.ss)
        disc = np.sqrt((0.5 * (self.tt - self.ss)) ** 2 + self.ts**2)
        return half_tr - disc

    def mixed_pairing(self, other: "HessianField") -> np.ndarray:
        """Reduced wedge pairing MD(A, B) = A_tt B_ss + A_ss B_tt - 2 A_ts B_ts."""
        return self.tt * other.ss + self.ss * other.tt - 2.0 * self.ts * other.ts


def weak_geodesic(
    u0: SymplecticPotential, u1: SymplecticPotential, t_nodes: int = T_NODES
) -> MetricPath:
    """The weak geodesic from u0 to u1: g_t = (1 - t) g_0 + t g_1 per node.

    Endpoint slices are the input objects themselves, so path evaluations at
    t = 0, 1 agree with direct evaluations exactly.
    """
    if u0.x.shape != u1.x.shape or not np.all(u0.x == u1.x):
        raise GridMismatchError("endpoints live on different moment grids; resample first")
    t = np.linspace(0.0, 1.0, t_nodes)
    slices = [u0]
    for ti in t[1:-1]:
        model = None
        if u0.model is not None and u1.model is not None:
            model = combined_model([u0.model, u1.model], [1.0 - ti, ti])
        slices.append(
            SymplecticPotential(u0.x, (1.0 - ti) * u0.g + ti * u1.g, model=model, validate=False)
        )
    slices.append(u1)
    return MetricPath(t, slices, kind="geodesic")


def hmae_residual(path: MetricPath, s: np.ndarray | None = None) -> float:
    """Max over interior (t, s) nodes of |det Hess Phi|.

    Vanishes (to second order in the grid) exactly when the path solves the
    homogeneous Monge-Ampere equation.
    """
    if len(path) < 3:
        raise ResolutionError("need at least 3 t-nodes for a residual")
    s, Phi, _ = path.radial_profile(s)
    H = HessianField.of(Phi, path.t[1] - path.t[0], s[1] - s[0])
    return float(np.max(np.abs(H.det())))


def subgeodesic_make(
    u0: SymplecticPotential,
    u1: SymplecticPotential,
    bulge: float,
    t_nodes: int = T_NODES,
    s: np.ndarray | None = None,
) -> MetricPath:
    """Subgeodesic with symplectic potentials bowed above the geodesic ones:
    g_t = (1 - t) g_0 + t g_1 + bulge * t (1 - t).

    Raising L lowers the complexified potential Phi by bulge * t(1 - t), which
    adds +2*bulge to d^2Phi/dt^2, so the (t, s) Hessian gains positivity; the
    PSD property is certified node by node and failure raises
    ``SubgeodesicError`` with the worst node.
    """
    if bulge < 0.0:
        raise ValueError("bulge must be nonnegative")
    if u0.x.shape != u1.x.shape or not np.all(u0.x == u1.x):
        raise GridMismatchError("endpoints live on different moment grids; resample first")
    if bulge == 0.0:
        return weak_geodesic(u0, u1, t_nodes)
    t = np.linspace(0.0, 1.0, t_nodes)
    slices = [u0]
    for ti in t[1:-1]:
        g = (1.0 - ti) * u0.g + ti * u1.g + bulge * ti * (1.0 - ti)
        model = None
        if u0.model is not None and u1.model is not None:
            model = combined_model(
                [u0.model, u1.model], [1.0 - ti, ti], constant=bulge * ti * (1.0 - ti)
            )
        slices.append(SymplecticPotential(u0.x, g, model=model))  # re-validates each slice
    slices.append(u1)
    path = MetricPath(t, slices, kind="subgeodesic")

    s, Phi, _ = path.radial_profile(s)
    H = HessianField.of(Phi, t[1] - t[0], s[1] - s[0])
    eigs = H.min_eig()
    worst = np.unravel_index(np.argmin(eigs), eigs.shape)
    if eigs[worst] < -PSD_TOL:
        raise SubgeodesicError(
            f"Hessian not PSD: min eigenvalue {eigs[worst]:.3e} at interior node {worst}",
            node=(int(worst[0] + 1), int(worst[1] + 1)),
            min_eig=float(eigs[worst]),
        )
    return path


def endpoint_velocity(
    path: MetricPath, end: Literal["t0", "t1"] = "t0", s: np.ndarray | None = None
) -> np.ndarray:
    """One-sided du/dt at an endpoint, resampled onto that endpoint's moment grid.

    Differencing is at fixed s in the radial representation, with two-level
    Richardson extrapolation; the result is a function of the moment
    coordinate of the endpoint metric.
    """
    if len(path) < 2:
        raise ResolutionError("need at least 2 t-nodes for a velocity")
    if s is None:
        s = s_grid()
    dt = path.t[1] - path.t[0]
    if end == "t0":
        u, ua, ub = path.slices[0], path.slices[1], path.slices[min(2, len(path) - 1)]
        sgn = 1.0
    elif end == "t1":
        u, ua, ub = path.slices[-1], path.slices[-2], path.slices[max(len(path) - 3, 0)]
        sgn = -1.0
    else:
        raise ValueError("end must be 't0' or 't1'")
    phi0, _ = u.radial(s)
    phia, _ = ua.radial(s)
    if len(path) >= 3:
        phib, _ = ub.radial(s)
        v_s = sgn * (2.0 * (phia - phi0) / dt - (phib - phi0) / (2.0 * dt))
    else:
        v_s = sgn * (phia - phi0) / dt
    spl = CubicSpline(s, v_s)
    s_of_x = np.clip(u.Lp(u.x[1:-1]), s[0], s[-1])
    v = np.empty_like(u.x)
    v[1:-1] = spl(s_of_x)
    v[0] = v_s[0]
    v[-1] = v_s[-1]
    return v


def mabuchi_distance(
    u0: SymplecticPotential, u1: SymplecticPotential, t_nodes: int = T_NODES
) -> float:
    """Mabuchi distance sqrt( int v^2 d omega_{u0} ) of the endpoint velocity
    along the connecting weak geodesic.

    In moment coordinates of the endpoint the metric measure pushes forward
    to Lebesgue dx, so the integral is a plain quadrature on [0, 1].
    """
    path = weak_geodesic(u0, u1, t_nodes)
    v = endpoint_velocity(path, "t0")
    w = trapezoid_weights(u0.x)
    return float(np.sqrt(np.sum(w * v**2)))


def residual_report(path: MetricPath, s: np.ndarray | None = None):
    """Rows (t, s, det, min_eig) of the Monge-Ampere residual over interior nodes."""
    if len(path) < 3:
        raise ResolutionError("need at least 3 t-nodes for a residual report")
    s, Phi, _ = path.radial_profile(s)
    H = HessianField.of(Phi, path.t[1] - path.t[0], s[1] - s[0])
    det = H.det()
    eig = H.min_eig()
    for i in range(det.shape[0]):
        for j in range(det.shape[1]):
            yield float(path.t[i + 1]), float(s[j + 1]), float(det[i, j]), float(eig[i, j])


def write_residual_csv(path: MetricPath, file_path: str, s: np.ndarray | None = None) -> None:
    """Dump the residual report to CSV with columns t, s, det, min_eig."""
    with open(file_path, "w") as fh:
        fh.write("t,s,det,min_eig\n")
        for row in residual_report(path, s):
            fh.write(",".join(repr(v) for v in row) + "\n")


def speed_profile(path: MetricPath, s: np.ndarray | None = None) -> np.ndarray:
    """int (du/dt)^2 d omega_{u_t} at interior t-nodes (centered differences)."""
    if len(path) < 3:
        raise ResolutionError("need at least 3 t-nodes for a speed profile")
    s, Phi, _ = path.radial_profile(s)
    dt = path.t[1] - path.t[0]
    w = trapezoid_weights(s)
    out = np.empty(len(path) - 2)
    for i in range(1, len(path) - 1):
        v = (Phi[i + 1] - Phi[i - 1]) / (2.0 * dt)
        rho = path.slices[i].density_s(s)
        out[i - 1] = np.sum(w * v**2 * rho)
    return out
