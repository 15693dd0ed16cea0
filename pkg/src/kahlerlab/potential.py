"""Canonical representations of S^1-invariant metric potentials on the sphere.

The model is the unit-mass Kahler class on the Riemann sphere.  A rotation
invariant metric is encoded two dual ways:

* ``SymplecticPotential``: the convex function ``L(x)`` on the moment
  interval ``[0, 1]``, split as ``L = x log x + (1-x) log(1-x) + g(x)``
  with ``g`` smooth up to the boundary (the boundary-entropy split).  ``g``
  is the stored data.
* ``RadialPotential``: the convex dual ``phi(s)`` of the log-radial
  coordinate ``s = log|z|^2``, with slopes filling ``(0, 1)``.  The
  reference (Fubini-Study) potential is ``phi_FS(s) = log(1 + e^s)``.

All 2-form measures are reduced by the circle action and stored as their
one-dimensional densities: in ``s`` coordinates the metric measure is
``phi''(s) ds`` (total mass 1) and its pushforward under the moment map
``x = phi'(s)`` is Lebesgue ``dx`` on ``[0, 1]``.  Constant angular factors
of ``2 pi`` are dropped consistently; they cancel in every normalized
quantity.

Conventions: ``dd^c = (i / 2 pi) d d-bar``; the mean scalar curvature of the
model class is ``2``; scalar curvature is computed in symplectic coordinates
as ``S = -(1/L'')''``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import expit

from .errors import ConvexityError, GridMismatchError, ResolutionError, WindowError

# Default desk-scale discretization.
MOMENT_N = 1024
S_WINDOW = 40.0
S_NODES = 4096  # intervals; the s-grid has S_NODES + 1 nodes

# Discrete second differences down to -CONVEXITY_SLACK * scale count as convex.
CONVEXITY_SLACK = 1e-12

# inverse_legendre: the window must push the edge slopes this close to {0, 1}.
SLOPE_MARGIN = 1e-3


def moment_grid(n: int = MOMENT_N) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def s_grid(window: float = S_WINDOW, m: int = S_NODES) -> np.ndarray:
    return np.linspace(-window, window, m + 1)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.empty_like(nodes)
    w[1:-1] = 0.5 * (nodes[2:] - nodes[:-2])
    w[0] = 0.5 * (nodes[1] - nodes[0])
    w[-1] = 0.5 * (nodes[-1] - nodes[-2])
    return w


def boundary_entropy(x: np.ndarray) -> np.ndarray:
    """The singular part x log x + (1-x) log(1-x), with 0 log 0 = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = xm * np.log(xm) + (1.0 - xm) * np.log1p(-xm)
    return out


def fs_radial(s: np.ndarray) -> np.ndarray:
    """Reference potential log(1 + e^s), evaluated stably."""
    return np.logaddexp(0.0, s)


def fs_density(s: np.ndarray) -> np.ndarray:
    """Reduced density of the reference metric, e^s / (1 + e^s)^2."""
    return expit(s) * expit(-s)


def fs_log_density(s: np.ndarray) -> np.ndarray:
    return s - 2.0 * np.logaddexp(0.0, s)


def poly_model(coef):
    """Derivative model for a power-basis polynomial g."""
    coef = np.asarray(coef, dtype=float)

    def model(x, nu=0):
        c = np.polynomial.polynomial.polyder(coef, nu) if nu else coef
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)

    return model


def glued_model(height: float, x1: float, x2: float):
    """Derivative model of the C^{1,1} splice: g'' = height on [x1, x2], else 0."""

    def model(x, nu=0):
        x = np.asarray(x, dtype=float)
        mid = (x >= x1) & (x <= x2)
        top = x > x2
        out = np.zeros_like(x)
        if nu == 0:
            out[mid] = 0.5 * height * (x[mid] - x1) ** 2
            out[top] = 0.5 * height * (x2 - x1) ** 2 + height * (x2 - x1) * (x[top] - x2)
        elif nu == 1:
            out[mid] = height * (x[mid] - x1)
            out[top] = height * (x2 - x1)
        elif nu == 2:
            out[mid] = height
        return out

    return model


def combined_model(models, weights, constant: float = 0.0, slope: float = 0.0):
    """Affine combination of derivative models plus an affine function."""

    def model(x, nu=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for m, a in zip(models, weights):
            if a != 0.0:
                out = out + a * m(x, nu)
        if nu == 0:
            out = out + constant + slope * x
        elif nu == 1:
            out = out + slope
        return out

    return model


class SymplecticPotential:
    """Convex symplectic potential, stored through its smooth part ``g``.

    The full potential ``L = boundary_entropy + g`` must be strictly convex.
    Derivatives of ``g`` come from the optional closed-form ``model`` (a
    callable ``model(x, nu)``) when one is known, and otherwise from a
    cubic-spline fit of the samples; the model route avoids spline ringing
    for merely-C^{1,1} profiles.  The radial dual is evaluated pointwise by a
    safeguarded Newton solve of ``L'(x) = s`` in the logit variable, which
    keeps the Legendre transform at quadrature accuracy and is stable at both
    ends of the moment interval.
    """

    def __init__(self, x: np.ndarray, g: np.ndarray, model=None, validate: bool = True):
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        if x.shape != g.shape or x.ndim != 1 or x.size < 8:
            raise ValueError("grid and g samples must be equal-length 1-D arrays")
        if abs(x[0]) > 1e-15 or abs(x[-1] - 1.0) > 1e-15:
            raise ValueError("moment grid must span [0, 1]")
        self.x = x
        self.g = g
        self.model = model
        if model is None:
            spline = CubicSpline(x, g)
            self._g0 = spline
            self._dg = spline.derivative()
            self._d2g = spline.derivative(2)
        else:
            self._g0 = lambda xv: model(xv, 0)
            self._dg = lambda xv: model(xv, 1)
            self._d2g = lambda xv: model(xv, 2)
        # finite bracket for the logit Newton solve
        self._dg_bound = float(np.max(np.abs(self._dg(np.linspace(0.0, 1.0, 513))))) + 1.0
        if validate:
            self.validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def fubini_study(cls, n: int = MOMENT_N) -> "SymplecticPotential":
        x = moment_grid(n)
        return cls(x, np.zeros_like(x), validate=False)

    @property
    def n(self) -> int:
        return self.x.size - 1

    # -- invariants --------------------------------------------------------

    def validate(self) -> None:
        if not np.all(np.isfinite(self.g)):
            raise ConvexityError("g must be finite on [0, 1] including endpoints")
        L = self.L(self.x)
        d2 = L[2:] - 2.0 * L[1:-1] + L[:-2]
        scale = max(1.0, float(np.max(np.abs(L))))
        bad = np.flatnonzero(d2 < -CONVEXITY_SLACK * scale)
        if bad.size:
            raise ConvexityError(
                f"discrete second difference of L negative at node {bad[0] + 1}",
                node=int(bad[0] + 1),
            )
        lpp = self.Lpp(self.x[1:-1])
        bad = np.flatnonzero(lpp <= 0.0)
        if bad.size:
            raise ConvexityError(
                f"L'' not strictly positive at node {bad[0] + 1}", node=int(bad[0] + 1)
            )

    # -- pointwise data ----------------------------------------------------

    def g_at(self, x, nu: int = 0):
        if self.model is not None:
            return self.model(x, nu)
        return self._g0(x) if nu == 0 else self._g0.derivative(nu)(x)

    def L(self, x) -> np.ndarray:
        return boundary_entropy(x) + self._g0(x)

    def Lp(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(x) - np.log1p(-x) + self._dg(x)

    def Lpp(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / (x * (1.0 - x)) + self._d2g(x)

    # -- radial side -------------------------------------------------------

    def logit_moment_of(self, s) -> np.ndarray:
        """The logit w = log(x/(1-x)) of the inverse moment map, elementwise.

        In the logit variable L'(x) = w + g'(expit(w)) exactly, so the Newton
        solve of L'(x) = s is well conditioned at both ends of the interval
        (plain x loses resolution against 1 - x near x = 1).
        """
        s = np.asarray(s, dtype=float)
        w = s.astype(float).copy()  # exact for the reference potential
        lo = -(np.abs(s) + self._dg_bound)
        hi = -lo
        for _ in range(100):
            x = expit(w)
            f = w + self._dg(x) - s
            lo = np.where(f < 0.0, w, lo)
            hi = np.where(f > 0.0, w, hi)
            fp = 1.0 + self._d2g(x) * x * expit(-w)
            with np.errstate(invalid="ignore", divide="ignore"):
                wn = w - f / fp
            bad = (wn <= lo) | (wn >= hi) | ~np.isfinite(wn)
            wn = np.where(bad, 0.5 * (lo + hi), wn)
            done = np.abs(f) <= 1e-12 * (1.0 + np.abs(s))
            if np.all(done):
                break
            w = np.where(done, w, wn)
        else:
            raise ResolutionError("moment-map Newton solve did not converge")
        return w

    def moment_of(self, s) -> np.ndarray:
        """Inverse moment map: the x with L'(x) = s, elementwise."""
        return expit(self.logit_moment_of(s))

    def radial(self, s) -> tuple[np.ndarray, np.ndarray]:
        """phi(s) = sup_x (x s - L(x)) and the maximizing x, elementwise."""
        s = np.asarray(s, dtype=float)
        w = self.logit_moment_of(s)
        x = expit(w)
        xc = expit(-w)  # 1 - x, at full relative precision
        # L = x log x + (1-x) log(1-x) + g, with the logs in softplus form
        L = -(x * np.logaddexp(0.0, -w) + xc * np.logaddexp(0.0, w)) + self._g0(x)
        return x * s - L, x

    def density_s(self, s) -> np.ndarray:
        """Reduced metric density phi''(s) = 1 / L''(x(s))."""
        w = self.logit_moment_of(s)
        prod = expit(w) * expit(-w)  # x (1 - x), stable in both tails
        return prod / (1.0 + prod * self._d2g(expit(w)))

    def log_density_s(self, s) -> np.ndarray:
        w = self.logit_moment_of(s)
        prod = expit(w) * expit(-w)
        with np.errstate(divide="ignore"):
            return np.log(prod) - np.log1p(prod * self._d2g(expit(w)))

    def radial_data(self, s):
        """phi, moment map, density and log-density at s, in one solve."""
        s = np.asarray(s, dtype=float)
        w = self.logit_moment_of(s)
        x = expit(w)
        xc = expit(-w)
        L = -(x * np.logaddexp(0.0, -w) + xc * np.logaddexp(0.0, w)) + self._g0(x)
        prod = x * xc
        denom = 1.0 + prod * self._d2g(x)
        with np.errstate(divide="ignore"):
            logrho = np.log(prod) - np.log1p(prod * self._d2g(x))
        return x * s - L, x, prod / denom, logrho

    def to_radial(self, window: float = S_WINDOW, m: int = S_NODES) -> "RadialPotential":
        return inverse_legendre(self, window=window, m=m)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "grid_n": self.n,
            "window": None,
            "representation": "symplectic",
            "values": self.g.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SymplecticPotential":
        if d.get("representation") != "symplectic":
            raise ValueError("not a symplectic-potential document")
        n = int(d["grid_n"])
        return cls(moment_grid(n), np.asarray(d["values"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "SymplecticPotential":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SymplecticPotential)
            and self.x.shape == other.x.shape
            and bool(np.all(self.x == other.x))
            and bool(np.all(self.g == other.g))
        )


class RadialPotential:
    """Convex radial potential phi(s) on a truncation window [-S, S].

    ``dual``, when present, is the symplectic potential the samples came
    from; derived measures then use the exact dual relation
    ``phi'' = 1 / L''`` instead of spline differentiation.
    """

    slope_limits = (0.0, 1.0)

    def __init__(
        self,
        s: np.ndarray,
        phi: np.ndarray,
        dual: Optional[SymplecticPotential] = None,
        validate: bool = True,
    ):
        s = np.asarray(s, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if s.shape != phi.shape or s.ndim != 1 or s.size < 8:
            raise ValueError("s-grid and phi samples must be equal-length 1-D arrays")
        if not np.all(np.diff(s) > 0.0):
            raise ValueError("s-grid must be strictly increasing")
        self.s = s
        self.phi = phi
        self.dual = dual
        self._spline = CubicSpline(s, phi)
        if validate:
            self.validate()

    @classmethod
    def fubini_study(cls, window: float = S_WINDOW, m: int = S_NODES) -> "RadialPotential":
        s = s_grid(window, m)
        return cls(s, fs_radial(s), validate=False)

    @property
    def window(self) -> float:
        return float(self.s[-1])

    def validate(self) -> None:
        if not np.all(np.isfinite(self.phi)):
            raise ConvexityError("phi must be finite on the window")
        d2 = self.phi[2:] - 2.0 * self.phi[1:-1] + self.phi[:-2]
        scale = max(1.0, float(np.max(np.abs(self.phi))))
        bad = np.flatnonzero(d2 < -CONVEXITY_SLACK * scale)
        if bad.size:
            raise ConvexityError(
                f"discrete second difference of phi negative at node {bad[0] + 1}",
                node=int(bad[0] + 1),
            )
        slopes = np.diff(self.phi) / np.diff(self.s)
        if np.any(slopes < -CONVEXITY_SLACK) or np.any(slopes > 1.0 + CONVEXITY_SLACK):
            bad = int(np.flatnonzero((slopes < -CONVEXITY_SLACK) | (slopes > 1.0 + CONVEXITY_SLACK))[0])
            raise ConvexityError(f"discrete slope outside (0, 1) at interval {bad}", node=bad)

    def phi_at(self, s, nu: int = 0):
        return self._spline(s) if nu == 0 else self._spline.derivative(nu)(s)

    def to_dict(self) -> dict:
        return {
            "grid_n": self.s.size - 1,
            "window": self.window,
            "representation": "radial",
            "values": self.phi.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "RadialPotential":
        if d.get("representation") != "radial":
            raise ValueError("not a radial-potential document")
        s = s_grid(float(d["window"]), int(d["grid_n"]))
        return cls(s, np.asarray(d["values"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "RadialPotential":
        return cls.from_dict(json.loads(text))


@dataclass
class GridMeasure:
    """Sampled nonnegative density on the moment interval or the s-axis.

    ``coordinate`` is ``"s-axis"`` (density against ds; the canonical chart
    for measures on the manifold) or ``"moment"`` (density against Lebesgue
    dx in the reference Fubini-Study moment chart).
    """

    coordinate: str
    nodes: np.ndarray
    density: np.ndarray
    mass: float

    # stored-vs-quadrature mass agreement required by the type invariant
    MASS_TOL = 1e-8

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.coordinate not in ("moment", "s-axis"):
            raise ValueError("coordinate must be 'moment' or 's-axis'")
        if self.nodes.shape != self.density.shape:
            raise GridMismatchError("nodes and density must share a shape")

    @classmethod
    def from_density(cls, coordinate: str, nodes: np.ndarray, density: np.ndarray) -> "GridMeasure":
        m = cls(coordinate, nodes, density, 0.0)
        m.mass = float(np.sum(trapezoid_weights(m.nodes) * m.density))
        m.validate()
        return m

    @classmethod
    def probability(cls, coordinate: str, nodes: np.ndarray, density: np.ndarray) -> "GridMeasure":
        """Normalize so the discrete (trapezoid) mass is exactly 1."""
        nodes = np.asarray(nodes, dtype=float)
        density = np.asarray(density, dtype=float)
        total = float(np.sum(trapezoid_weights(nodes) * density))
        if total <= 0.0:
            raise ValueError("cannot normalize a measure of nonpositive mass")
        return cls(coordinate, nodes, density / total, 1.0)

    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.nodes)

    def integrate(self, f: np.ndarray) -> float:
        """Pair a sampled function with the measure by trapezoid quadrature."""
        return float(np.sum(self.weights() * self.density * np.asarray(f)))

    def validate(self) -> None:
        if np.any(self.density < -1e-14):
            raise ValueError("density must be nonnegative")
        quad = float(np.sum(self.weights() * self.density))
        if abs(quad - self.mass) > self.MASS_TOL * max(1.0, abs(self.mass)):
            raise ValueError(
                f"quadrature mass {quad!r} disagrees with stored mass {self.mass!r}"
            )

    def to_dict(self) -> dict:
        return {
            "coordinate": self.coordinate,
            "nodes": self.nodes.tolist(),
            "density": self.density.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GridMeasure":
        return cls.from_density(
            d["coordinate"], np.asarray(d["nodes"], float), np.asarray(d["density"], float)
        )

    @classmethod
    def from_json(cls, text: str) -> "GridMeasure":
        return cls.from_dict(json.loads(text))


@dataclass
class TwistForm:
    """Nonnegative twisting form, stored as a density against Lebesgue dx in
    the reference moment chart.  ``alpha = c * omega_0`` has constant density c."""

    density: np.ndarray
    mass: float = field(default=0.0)

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if np.any(self.density < 0.0):
            raise ValueError("twist form density must be nonnegative everywhere")
        n = self.density.size - 1
        self.mass = float(np.sum(trapezoid_weights(moment_grid(n)) * self.density))

    @classmethod
    def multiple_of_reference(cls, c: float, n: int = MOMENT_N) -> "TwistForm":
        if c < 0.0:
            raise ValueError("twist coefficient must be nonnegative")
        return cls(np.full(n + 1, float(c)))

    def density_s(self, s: np.ndarray) -> np.ndarray:
        """The s-axis density of the form: a(x0(s)) * rho_FS(s)."""
        x0 = expit(s)
        n = self.density.size - 1
        return CubicSpline(moment_grid(n), self.density)(x0) * fs_density(s)


# -- module operations -----------------------------------------------------


def legendre(p: RadialPotential, n: int = MOMENT_N) -> SymplecticPotential:
    """Legendre transform L(x) = sup_s (x s - phi(s)) onto the moment grid.

    The supremum is located by a bracketed Newton solve of ``phi'(s) = x`` on
    the spline fit; at the endpoints the slope limits give
    ``L(0) = -phi(-S)`` and ``L(1) = S - phi(S)`` exactly.
    """
    p.validate()
    x = moment_grid(n)
    xx = x[1:-1]
    d1 = p._spline.derivative()
    d2 = p._spline.derivative(2)
    slopes = np.maximum.accumulate(d1(p.s))
    sig = np.interp(xx, slopes, p.s)
    lo = np.full_like(xx, p.s[0])
    hi = np.full_like(xx, p.s[-1])
    for _ in range(100):
        f = d1(sig) - xx
        lo = np.where(f < 0.0, sig, lo)
        hi = np.where(f > 0.0, sig, hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            sn = sig - f / d2(sig)
        bad = (sn <= lo) | (sn >= hi) | ~np.isfinite(sn)
        sn = np.where(bad, 0.5 * (lo + hi), sn)
        if np.max(np.abs(f)) < 1e-13:
            break
        sig = sn
    g = np.empty_like(x)
    g[1:-1] = xx * sig - p._spline(sig) - boundary_entropy(xx)
    g[0] = -p.phi[0]
    g[-1] = p.s[-1] - p.phi[-1]
    return SymplecticPotential(x, g)


def inverse_legendre(
    L: SymplecticPotential, window: float = S_WINDOW, m: int = S_NODES
) -> RadialPotential:
    """Radial dual phi(s) = sup_x (x s - L(x)) sampled on [-window, window]."""
    L.validate()
    s = s_grid(window, m)
    phi, xs = L.radial(s)
    if xs[0] > SLOPE_MARGIN or xs[-1] < 1.0 - SLOPE_MARGIN:
        raise WindowError(
            f"window {window} leaves edge slopes at ({xs[0]:.3e}, {xs[-1]:.6f}); "
            "the dual slopes must approach (0, 1)"
        )
    return RadialPotential(s, phi, dual=L)


def _jump_refined_nodes(nodes: np.ndarray, density_of) -> np.ndarray:
    """Insert bisection cascades of nodes around density jumps.

    Merely-C^{1,1} potentials have genuinely discontinuous reduced densities;
    a uniform trapezoid rule then carries an O(step * jump) mass error.  Each
    suspect cell is bisected until the discontinuity is localized to rounding
    width, and the visited points become quadrature nodes, shrinking the
    crossing cell to negligible measure.
    """
    rho = density_of(nodes)
    d = np.abs(np.diff(rho))
    scale = max(float(np.max(rho)), 1e-30)
    neighbors = np.maximum(np.roll(d, 1), np.roll(d, -1))
    suspects = np.flatnonzero((d > 1e-3 * scale) & (d > 6.0 * neighbors))
    if suspects.size == 0:
        return nodes
    extra = []
    for i in suspects:
        a, b = nodes[i], nodes[i + 1]
        fa = rho[i]
        jump = abs(rho[i + 1] - fa)
        for _ in range(48):
            mid = 0.5 * (a + b)
            fm = float(density_of(np.array([mid]))[0])
            extra.append(mid)
            if abs(fm - fa) > 0.5 * jump:
                b = mid
            else:
                a, fa = mid, fm
            if b - a < 1e-14 * max(1.0, abs(a)):
                break
    # The derivative jumps at the splice points leave a step^2-level trapezoid
    # error smeared over each smooth piece; a refined core grid brings the
    # composite error below the mass tolerance.
    core = np.linspace(-15.0, 15.0, 30001)
    return np.unique(np.concatenate([nodes, core, np.asarray(extra)]))


def moment_measure(p: RadialPotential) -> GridMeasure:
    """The reduced metric measure phi''(s) ds with mass phi'(S) - phi'(-S)."""
    if p.dual is not None:
        nodes = _jump_refined_nodes(p.s, p.dual.density_s)
        density = p.dual.density_s(nodes)
        x_edges = p.dual.moment_of(np.array([p.s[0], p.s[-1]]))
        mass = float(x_edges[1] - x_edges[0])
    else:
        nodes = p.s
        density = np.maximum(p.phi_at(p.s, 2), 0.0)
        d1 = p._spline.derivative()
        mass = float(d1(p.s[-1]) - d1(p.s[0]))
    meas = GridMeasure("s-axis", nodes, density, mass)
    meas.validate()
    return meas


def scalar_curvature(L: SymplecticPotential) -> np.ndarray:
    """Scalar curvature S = -(1/L'')'' at the interior moment nodes.

    ``1/L'' = x(1-x) / (1 + x(1-x) g'')`` is formed in closed form (finite at
    the boundary) and differenced centrally, so the reference potential gives
    exactly 2.  Raises ``ResolutionError`` when the fourth-difference content
    of the result oscillates at grid scale.
    """
    x = L.x
    dx = x[1] - x[0]
    q = x * (1.0 - x) / (1.0 + x * (1.0 - x) * L.g_at(x, 2))
    S = -(q[2:] - 2.0 * q[1:-1] + q[:-2]) / dx**2
    if S.size >= 8:
        rough = np.max(np.abs(np.diff(S, 2)))
        scale = max(1.0, float(np.max(np.abs(S))))
        if rough > 0.5 * scale:
            raise ResolutionError(
                "fourth differences of the symplectic potential oscillate at "
                "grid scale; refine the moment grid"
            )
    return S


def scalar_curvature_full(L: SymplecticPotential) -> np.ndarray:
    """Curvature on the whole grid, quadratically extrapolated to the ends."""
    S = scalar_curvature(L)
    out = np.empty(L.x.size)
    out[1:-1] = S
    out[0] = 3.0 * S[0] - 3.0 * S[1] + S[2]
    out[-1] = 3.0 * S[-1] - 3.0 * S[-2] + S[-3]
    return out


def ricci_reference(window: float = S_WINDOW, m: int = S_NODES) -> GridMeasure:
    """The measure of Ric(omega_0) = 2 omega_0 in reduced coordinates."""
    s = s_grid(window, m)
    return GridMeasure("s-axis", s, 2.0 * fs_density(s), 2.0)
