import numpy as np
import pytest

import kahlerlab as kl
from kahlerlab.potential import s_grid, trapezoid_weights


@pytest.fixture(scope="session")
def corpus():
    return kl.generate_corpus(0, 7)


@pytest.fixture(scope="session")
def fs():
    return kl.SymplecticPotential.fubini_study()


@pytest.fixture(scope="session")
def sgrid():
    return s_grid()


@pytest.fixture(scope="session")
def geodesic_23(corpus):
    return kl.weak_geodesic(corpus[2], corpus[3])


def mabuchi_toric_oracle(u):
    """Independent closed form of the K-energy in symplectic coordinates:
    -int log(1 + x(1-x) g'') dx - 2 int g dx + g(0) + g(1)."""
    x = u.x
    w = trapezoid_weights(x)
    f = np.log1p(x * (1.0 - x) * u.g_at(x, 2))
    return -float(np.sum(w * f)) - 2.0 * float(np.sum(w * u.g)) + u.g[0] + u.g[-1]


def mabuchi_second_derivative_oracle(path, t_index):
    """Closed form of d^2/dt^2 of the K-energy along a symplectic-linear
    geodesic: int (dg'')^2 / (L_t'')^2 dx."""
    u_t = path.slices[t_index]
    x = u_t.x
    dgpp = path.slices[-1].g_at(x, 2) - path.slices[0].g_at(x, 2)
    w = trapezoid_weights(x)
    return float(np.sum(w * (dgpp / u_t.Lpp(x)) ** 2))


def sphere_test_functions(s, seed=0, count=4):
    """Random smooth functions on the sphere, as functions of s."""
    from scipy.special import expit

    rng = np.random.default_rng(seed)
    x0 = expit(s)
    battery = np.stack(
        [x0 - 0.5, x0 * (1.0 - x0), np.cos(np.pi * x0), np.exp(-(s**2) / 40.0)]
    )
    return [rng.standard_normal(4) @ battery for _ in range(count)]


def convex_safe_direction(s, seed=0, scale=0.3):
    """A perturbation direction whose curvature is dominated by the metric
    density, so phi + h*v stays convex for every |h| <= 0.03.  Returns the
    samples v together with the closed-form second derivative d^2v/ds^2."""
    from scipy.special import expit

    rng = np.random.default_rng(seed)
    a = scale * rng.standard_normal(4)
    x0 = expit(s)
    rho0 = x0 * (1.0 - x0)
    pi = np.pi
    f = np.stack([x0 - 0.5, rho0, np.cos(pi * x0), np.sin(2 * pi * x0)])
    fp = np.stack([np.ones_like(x0), 1.0 - 2.0 * x0, -pi * np.sin(pi * x0), 2 * pi * np.cos(2 * pi * x0)])
    fpp = np.stack([np.zeros_like(x0), -2.0 * np.ones_like(x0), -pi**2 * np.cos(pi * x0), -4 * pi**2 * np.sin(2 * pi * x0)])
    v = a @ f
    vpp = rho0 * (1.0 - 2.0 * x0) * (a @ fp) + rho0**2 * (a @ fpp)
    return v, vpp


def exact_scalar_curvature(u, x):
    """Symplectic-coordinate curvature -(1/L'')'' with exact model derivatives."""
    g2 = u.g_at(x, 2)
    g3 = u.g_at(x, 3)
    g4 = u.g_at(x, 4)
    w = x * (1.0 - x)
    wp = 1.0 - 2.0 * x
    D = 1.0 + w * g2
    Dp = wp * g2 + w * g3
    Dpp = -2.0 * g2 + 2.0 * wp * g3 + w * g4
    return -((-2.0 * D - w * Dpp) / D**2 - 2.0 * Dp * (wp * D - w * Dp) / D**3)


class RadialFamily:
    """phi_h = phi_u + h v + h^2 w with closed-form densities: the three-term
    functionals evaluated on the s-grid without any Legendre round trip."""

    def __init__(self, u, s, v, vpp, w=None, wpp=None):
        from kahlerlab.potential import fs_density, fs_log_density, fs_radial

        self.s = s
        self.wq = trapezoid_weights(s)
        self.phi_u, self.x_u, self.rho_u, _ = u.radial_data(s)
        self.phi_fs = fs_radial(s)
        self.rho0 = fs_density(s)
        self.logrho0 = fs_log_density(s)
        self.v, self.vpp = v, vpp
        self.w = np.zeros_like(s) if w is None else w
        self.wpp = np.zeros_like(s) if wpp is None else wpp

    def _at(self, h):
        rel = self.phi_u - self.phi_fs + h * self.v + h * h * self.w
        rho = self.rho_u + h * self.vpp + h * h * self.wpp
        return rel, rho

    def energy(self, h):
        rel, rho = self._at(h)
        return float(np.sum(self.wq * rel * (rho + self.rho0)))

    def energy_T(self, h, rho_T):
        rel, _ = self._at(h)
        return float(np.sum(self.wq * rel * rho_T))

    def mabuchi(self, h):
        rel, rho = self._at(h)
        live = rho > 1e-300
        ent = np.zeros_like(rho)
        ent[live] = rho[live] * (np.log(rho[live]) - self.logrho0[live])
        E = float(np.sum(self.wq * rel * (rho + self.rho0)))
        ERic = 2.0 * float(np.sum(self.wq * rel * self.rho0))
        return E - ERic + float(np.sum(self.wq * ent))


def gradient_order(values_of_h, pairing, hs=(1e-2, 1e-3, 1e-4)):
    """Order of |centered difference - pairing|; inf when below rounding."""
    import math

    errs = np.array([abs((values_of_h(+h) - values_of_h(-h)) / (2 * h) - pairing) for h in hs])
    if np.all(errs < 1e-10):
        return errs, math.inf
    order = float(np.polyfit(np.log(hs), np.log(np.maximum(errs, 1e-300)), 1)[0])
    return errs, order
