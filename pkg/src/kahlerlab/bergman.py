"""Finite-level weighted Bergman kernels and measures on the model.

At level k the relevant section space is the adjoint-twisted one, which on
the sphere has the monomial basis z^j dz, j = 0 .. k-2.  For a rotation
invariant weight the basis is exactly orthogonal and the whole system is
captured by the log-norms

    log N_j(t) = log int exp((j+1) s - k phi_t(s)) ds,

computed here in the log domain on the standard s-grid (the trapezoid rule
is spectrally accurate for these integrands; see ``assemble(check=True)``
for the built-in refinement self-check).  The scaled Bergman measure

    b_k(s) = (1/k) sum_j exp((j+1) s - k phi_t(s) - log N_j(t))

has total mass (k-1)/k (the dimension count) and converges to the metric
density phi'' in total variation as k grows.

Along geodesics and subgeodesics, log of the kernel sum

    G(t, s) = log sum_j exp((j+1) s - log N_j(t))

is convex in (t, s): each -log N_j(t) is convex in t (the invariant form of
plurisubharmonic variation of Bergman kernels) and log-sum-exp preserves
convexity.  The decomposition  Hess(log b_k) + k Hess(Phi) = Hess(G)  and
the degeneracy of Hess(Phi) along geodesics then force the mixed-pairing
positivity checked by ``mixed_positivity``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import KahlerLabError, NonSubharmonicError, QuadratureError, ResolutionError
from .geodesic import HessianField, MetricPath
from .potential import (
    SymplecticPotential,
    s_grid,
    trapezoid_weights,
)

# mass identity |mass - (k-1)/k| tolerance (quadrature contract)
MASS_TOL = 1e-8

# degree of the metric twist on the sphere: chi = -K0_DEGREE * Phi is a
# continuous reference weight with curvature >= -K0_DEGREE * (path form)
K0_DEGREE = 2


def _log_norms(phi: np.ndarray, s: np.ndarray, k: int) -> np.ndarray:
    """log N_j for one weight sample phi(s); j = 0 .. k-2, exponent j+1."""
    logw = np.log(trapezoid_weights(s))
    j1 = np.arange(1, k, dtype=float)
    E = j1[:, None] * s[None, :] - k * phi[None, :] + logw[None, :]
    mx = E.max(axis=1, keepdims=True)
    return mx[:, 0] + np.log(np.exp(E - mx).sum(axis=1))


def _log_kernel(s: np.ndarray, log_norms_row: np.ndarray) -> np.ndarray:
    """G(s) = log sum_j exp((j+1) s - log N_j) for one t."""
    j1 = np.arange(1, log_norms_row.size + 1, dtype=float)
    A = j1[:, None] * s[None, :] - log_norms_row[:, None]
    mx = A.max(axis=0)
    return mx + np.log(np.exp(A - mx).sum(axis=0))


@dataclass
class BergmanSystem:
    """Level, basis exponents and log-norm matrix over a path's t-grid."""

    k: int
    t: np.ndarray
    exponents: np.ndarray  # j = 0 .. k-2
    log_norms: np.ndarray  # shape (len(t), k-1)
    s: np.ndarray  # quadrature s-grid of the norms
    phi: np.ndarray  # radial profile of the path on that grid
    kind: str = "generic"

    def log_kernel_matrix(self) -> np.ndarray:
        """G(t, s) over the stored grid."""
        return np.stack([_log_kernel(self.s, row) for row in self.log_norms])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "t_grid": self.t.tolist(),
            "log_norms": self.log_norms.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class BergmanMeasure:
    """Scaled Bergman density b_k with its quadrature mass."""

    k: int
    nodes: np.ndarray
    density: np.ndarray
    mass: float
    domain: str = "sphere"  # or "disc" (nodes are radii, density vs plane Lebesgue)

    def validate(self) -> None:
        if np.any(self.density < 0.0):
            raise KahlerLabError("Bergman density must be nonnegative")
        if self.domain == "sphere":
            target = (self.k - 1) / self.k
            if abs(self.mass - target) > MASS_TOL:
                raise KahlerLabError(
                    f"Bergman mass {self.mass!r} violates the dimension count {target!r}"
                )


def assemble(
    path: MetricPath,
    k: int,
    s: np.ndarray | None = None,
    check: bool = False,
    quad_refine: int = 4,
) -> BergmanSystem:
    """Log-norm matrix of the level-k system over the path's t-grid.

    The norms are integrated on a ``quad_refine``-times finer s-grid than the
    evaluation grid: for merely-C^{1,1} weights the integrand kinks sweep
    through quadrature cells as t moves, and the refinement keeps the induced
    wobble of log N_j(t) below what the Hessian scans can feel.  With
    ``check=True`` every log-norm is recomputed on a doubled quadrature grid
    and a relative disagreement above 1e-10 raises ``QuadratureError`` naming
    the worst (j, t).
    """
    if k < 3:
        raise ValueError("level must be at least 3 (the twisted space needs dim >= 2)")
    if s is None:
        s = s_grid()
    sq = s_grid(float(s[-1]), quad_refine * (s.size - 1))
    T = len(path)
    logN = np.empty((T, k - 1))
    Phi = np.empty((T, sq.size))
    for i, u in enumerate(path.slices):
        Phi[i], _ = u.radial(sq)
        logN[i] = _log_norms(Phi[i], sq, k)
    if check:
        s2 = s_grid(float(s[-1]), 2 * quad_refine * (s.size - 1))
        worst = (0, 0)
        worst_err = 0.0
        for i, u in enumerate(path.slices):
            phi2, _ = u.radial(s2)
            ref = _log_norms(phi2, s2, k)
            err = np.abs(logN[i] - ref) / np.maximum(1.0, np.abs(ref))
            j = int(np.argmax(err))
            if err[j] > worst_err:
                worst_err, worst = float(err[j]), (j, i)
        if worst_err > 1e-10:
            raise QuadratureError(
                f"log-norm quadrature self-check failed at (j, t-index) = {worst}: "
                f"relative error {worst_err:.2e}",
                worst=worst,
            )
    if not np.all(np.isfinite(logN)):
        bad = np.argwhere(~np.isfinite(logN))[0]
        raise QuadratureError(
            f"log-norm not finite at (t-index, j) = {tuple(bad)}", worst=tuple(bad)
        )
    return BergmanSystem(
        k, path.t.copy(), np.arange(k - 1), logN, sq, Phi, kind=path.kind
    )


def bergman_measure(sys: BergmanSystem, t_index: int) -> BergmanMeasure:
    """The scaled Bergman measure of one slice; mass must equal (k-1)/k."""
    k = sys.k
    j1 = np.arange(1, k, dtype=float)
    A = j1[:, None] * sys.s[None, :] - k * sys.phi[t_index][None, :] - sys.log_norms[t_index][:, None]
    mx = A.max(axis=0)
    b = np.exp(mx) * np.exp(A - mx).sum(axis=0) / k
    mass = float(np.sum(trapezoid_weights(sys.s) * b))
    meas = BergmanMeasure(k, sys.s, b, mass)
    meas.validate()
    return meas


def tv_convergence(
    u: SymplecticPotential, k_list, s: np.ndarray | None = None
) -> list[float]:
    """Total variation distances int |b_k - phi''| ds for each level in k_list."""
    if s is None:
        s = s_grid()
    phi, _, rho, _ = u.radial_data(s)
    w = trapezoid_weights(s)
    out = []
    for k in k_list:
        if k < 3:
            raise ValueError("levels must be at least 3")
        logN = _log_norms(phi, s, int(k))
        j1 = np.arange(1, int(k), dtype=float)
        A = j1[:, None] * s[None, :] - k * phi[None, :] - logN[:, None]
        mx = A.max(axis=0)
        b = np.exp(mx) * np.exp(A - mx).sum(axis=0) / k
        out.append(float(np.sum(w * np.abs(b - rho))))
    return out


def disc_bergman(phi_r: np.ndarray, k: int, r: np.ndarray | None = None) -> BergmanMeasure:
    """Bergman measure of the weighted space of holomorphic functions on the
    unit disc with a radial weight.

    ``phi_r`` samples the weight on the radius grid ``r`` (default: uniform
    on [0, 1]).  The basis is z^j, j = 0 .. k-1, with squared norms
    2 pi int r^{2j+1} e^{-k phi} dr; the returned density is against
    Lebesgue measure of the plane, so dd^c|z|^2 has density 1/pi.
    Non-subharmonic profiles (phi not convex in log r) are rejected.
    """
    if r is None:
        r = np.linspace(0.0, 1.0, phi_r.size)
    phi_r = np.asarray(phi_r, dtype=float)
    if phi_r.shape != r.shape:
        raise KahlerLabError("weight samples and radius grid differ in length")
    # subharmonicity of a radial weight == convexity in sigma = log r^2
    rr = r[r > 0.0]
    sig = 2.0 * np.log(rr)
    ph = phi_r[r > 0.0]
    d1 = np.diff(ph) / np.diff(sig)
    if np.any(np.diff(d1) < -1e-10):
        raise NonSubharmonicError("radial weight is not subharmonic (phi not convex in log r)")

    with np.errstate(divide="ignore"):
        logr = np.where(r > 0.0, np.log(r), -np.inf)
    wr = trapezoid_weights(r)
    with np.errstate(divide="ignore"):
        logwr = np.log(wr)
    j = np.arange(k, dtype=float)
    E = (2.0 * j[:, None] + 1.0) * logr[None, :] - k * phi_r[None, :] + logwr[None, :]
    E = np.where(np.isfinite(E), E, -np.inf)
    mx = E.max(axis=1, keepdims=True)
    logM = mx[:, 0] + np.log(np.exp(E - mx).sum(axis=1))

    with np.errstate(invalid="ignore"):
        D = 2.0 * j[:, None] * logr[None, :] - k * phi_r[None, :] - logM[:, None]
    D[0] = -k * phi_r - logM[0]  # the constant section has no radial factor
    D = np.where(np.isnan(D), -np.inf, D)
    mxd = D.max(axis=0)
    with np.errstate(invalid="ignore"):
        expo = np.where(np.isfinite(D), D - mxd[None, :], -np.inf)
    dens = np.exp(mxd) * np.exp(expo).sum(axis=0)
    dens /= 2.0 * math.pi * k
    mass = float(np.sum(wr * dens * 2.0 * math.pi * r))
    return BergmanMeasure(k, r, dens, mass, domain="disc")


def _scan_grid(halfwidth: float = 15.0, m: int = 4096) -> np.ndarray:
    """Core s-grid for the Hessian scans.

    Outside the core the kernel sum is dominated by a single section and the
    log kernel degenerates to an affine function, so the scan is restricted
    to the window where the Hessian has content; the step is matched to the
    default t-step of the refined scans.
    """
    return np.linspace(-halfwidth, halfwidth, m + 1)


def psh_variation_check(sys: BergmanSystem, s_scan: np.ndarray | None = None) -> float:
    """Min eigenvalue of the 2x2 Hessian of the log kernel over the scan grid.

    Nonnegative (to grid accuracy) along geodesics and subgeodesics; this is
    the invariant-reduced statement that the log of the Bergman kernel varies
    plurisubharmonically.  Near merely-C^{1,1} endpoints the Hessian is close
    to degenerate and its fourth derivatives are large, so the scan wants
    steps of about 0.01 in both variables (129 t-nodes at the default core
    grid) before the discrete eigenvalues settle.
    """
    if sys.t.size < 3:
        raise ResolutionError("need at least 3 t-nodes")
    if sys.kind not in ("geodesic", "subgeodesic"):
        raise KahlerLabError("psh variation is asserted for geodesic/subgeodesic paths")
    if s_scan is None:
        s_scan = _scan_grid()
    G = np.stack([_log_kernel(s_scan, row) for row in sys.log_norms])
    H = HessianField.of(G, sys.t[1] - sys.t[0], s_scan[1] - s_scan[0])
    return float(np.min(H.min_eig()))


def log_norm_concavity_max(sys: BergmanSystem) -> float:
    """Max second difference of log N_j(t) over all j (per-section scan).

    Along geodesics each -log N_j is convex in t, i.e. every log-norm curve
    is concave; the returned maximum is <= 0 up to quadrature noise.
    """
    if sys.t.size < 3:
        raise ResolutionError("need at least 3 t-nodes")
    dt = sys.t[1] - sys.t[0]
    d2 = np.diff(sys.log_norms, 2, axis=0) / dt**2
    return float(np.max(d2))


def mutate_log_norms(sys: BergmanSystem, gamma: float = 0.05) -> BergmanSystem:
    """Replace each log-norm curve by its chord bent against concavity.

    The fake curves are convex in t (second derivative +2*gamma), so the
    plurisubharmonicity scans must fail on the mutated system; this is the
    control experiment for the positivity checks.
    """
    t = sys.t
    lam = (t - t[0]) / (t[-1] - t[0])
    chord = (1.0 - lam)[:, None] * sys.log_norms[0][None, :] + lam[:, None] * sys.log_norms[-1][None, :]
    fake = chord - gamma * (lam * (1.0 - lam))[:, None]
    return BergmanSystem(sys.k, sys.t, sys.exponents, fake, sys.s, sys.phi, kind=sys.kind)


def decomposition_inequality(
    sys: BergmanSystem, path: MetricPath, s_scan: np.ndarray | None = None
) -> float:
    """Min eigenvalue of Hess(log b_k) + k Hess(Phi) over the scan grid.

    Equals ``psh_variation_check`` exactly: the two matrices agree node by
    node because log b_k = G - k Phi - log k and the stencils are linear.
    """
    if len(path) != sys.t.size or not np.all(path.t == sys.t):
        raise KahlerLabError("system was not assembled over this path")
    if s_scan is None:
        s_scan = _scan_grid()
    G = np.stack([_log_kernel(s_scan, row) for row in sys.log_norms])
    Phi = np.stack([u.radial(s_scan)[0] for u in path.slices])
    log_b = G - sys.k * Phi - math.log(sys.k)
    dt = sys.t[1] - sys.t[0]
    ds = s_scan[1] - s_scan[0]
    Hb = HessianField.of(log_b, dt, ds)
    HPhi = HessianField.of(Phi, dt, ds)
    tt = Hb.tt + sys.k * HPhi.tt
    ss = Hb.ss + sys.k * HPhi.ss
    ts = Hb.ts + sys.k * HPhi.ts
    half_tr = 0.5 * (tt + ss)
    disc = np.sqrt((0.5 * (tt - ss)) ** 2 + ts**2)
    return float(np.min(half_tr - disc))


def mixed_positivity(
    sys: BergmanSystem,
    path: MetricPath,
    A: float = math.inf,
    h: float = 0.02,
    t_probes: np.ndarray | None = None,
    s_probes: np.ndarray | None = None,
) -> float:
    """Min of the reduced wedge pairing MD(Hess Psi_{A,k}, Hess Phi) on a geodesic.

    Psi_{A,k} = max(log b_k, chi - A) with the continuous reference weight
    chi = -k0 Phi (k0 = 2, the degree of the canonical twist on the sphere);
    A = inf uses log b_k directly.  On a geodesic Hess(Phi) is rank one and
    degenerate along the lines x(t, s) = const with direction (1, dg'(x)), so
    the pairing equals the metric density times the second difference of
    Psi_{A,k} along those lines; both branches of the max are convex along
    them (the kernel branch by plurisubharmonic variation, the reference
    branch because Phi is affine there), so the scan is nonnegative up to
    evaluation noise.
    """
    if path.kind != "geodesic":
        raise KahlerLabError("mixed positivity is asserted in the geodesic regime")
    if sys.k < K0_DEGREE:
        raise ValueError(f"level must be at least the twist degree {K0_DEGREE}")
    if t_probes is None:
        t_probes = np.linspace(max(h, 0.05), 1.0 - max(h, 0.05), 19)
    if s_probes is None:
        s_probes = np.linspace(-12.0, 12.0, 801)
    g0 = path.slices[0].g
    g1 = path.slices[-1].g
    x = path.x
    leaf_slope = CubicSpline(x, g1 - g0).derivative()
    k = sys.k
    worst = math.inf
    for t in t_probes:
        u_t = SymplecticPotential(x, (1.0 - t) * g0 + t * g1, validate=False)
        _, xs, rho, _ = u_t.radial_data(s_probes)
        direction = leaf_slope(xs)
        vals = np.empty((3, s_probes.size))
        for m, off in enumerate((-h, 0.0, h)):
            tt = t + off
            ss = s_probes + off * direction
            u_tt = SymplecticPotential(x, (1.0 - tt) * g0 + tt * g1, validate=False)
            phi_tt, _ = u_tt.radial(ss)
            logN = _log_norms(u_tt.radial(sys.s)[0], sys.s, k)
            G = _log_kernel(ss, logN)
            psi = G - k * phi_tt - math.log(k)
            if math.isfinite(A):
                psi = np.maximum(psi, -K0_DEGREE * phi_tt - A)
            vals[m] = psi
        d2 = (vals[0] - 2.0 * vals[1] + vals[2]) / h**2
        worst = min(worst, float(np.min(rho * d2)))
    return worst
