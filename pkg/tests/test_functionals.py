import math

import numpy as np
import pytest
from scipy.special import expit

import kahlerlab as kl
from conftest import (
    RadialFamily,
    convex_safe_direction,
    exact_scalar_curvature,
    gradient_order,
    mabuchi_second_derivative_oracle,
    mabuchi_toric_oracle,
    sphere_test_functions,
)
from kahlerlab.potential import fs_density, s_grid, trapezoid_weights


def radial_family(u, sgrid, seed_v=1, seed_w=2):
    v, vpp = convex_safe_direction(sgrid, seed=seed_v)
    w, wpp = convex_safe_direction(sgrid, seed=seed_w)
    return RadialFamily(u, sgrid, v, vpp, w, wpp)


class TestEnergy:
    def test_zero(self, fs):
        assert abs(kl.energy_E(fs)) < 1e-14

    def test_constant(self, fs):
        u = kl.SymplecticPotential(fs.x, fs.g - 0.5)  # u = +0.5
        assert abs(kl.energy_E(u) - 1.0) < 1e-8

    def test_gradient_pairing(self, corpus, sgrid):
        fam = radial_family(corpus[2], sgrid)
        pairing = 2.0 * float(np.sum(fam.wq * fam.v * fam.rho_u))
        errs, order = gradient_order(fam.energy, pairing)
        assert order >= 1.9 or errs[-1] < 1e-9

    def test_matches_public_evaluator(self, corpus, sgrid):
        # the family evaluation at h = 0 is the library functional
        fam = radial_family(corpus[3], sgrid)
        assert abs(fam.energy(0.0) - kl.energy_E(corpus[3], sgrid)) < 1e-12


class TestEnergyET:
    def test_zero_and_constant(self, fs):
        ric = kl.ricci_reference()
        assert abs(kl.energy_ET(fs, ric)) < 1e-12
        u = kl.SymplecticPotential(fs.x, fs.g - 0.5)
        assert abs(kl.energy_ET(u, ric) - 1.0) < 1e-8  # mass 2 times u = 1/2

    def test_gradient_pairing(self, corpus, sgrid):
        from scipy.interpolate import CubicSpline

        fam = radial_family(corpus[3], sgrid, seed_v=3, seed_w=4)
        ric = kl.ricci_reference()
        rho_T = CubicSpline(ric.nodes, ric.density)(sgrid)
        pairing = float(np.sum(fam.wq * fam.v * rho_T))
        errs, order = gradient_order(lambda h: fam.energy_T(h, rho_T), pairing)
        assert order >= 1.9 or errs[-1] < 1e-9


class TestEntropy:
    def test_self_entropy_zero(self, sgrid):
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        assert kl.entropy(mu0, mu0) == 0.0

    def test_nonnegative(self, sgrid):
        rng = np.random.default_rng(0)
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        for _ in range(5):
            bump = 1.0 + 0.5 * np.cos(rng.uniform(1, 4) * expit(sgrid) * 2 * np.pi)
            mu = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid) * bump)
            assert kl.entropy(mu, mu0) >= 0.0

    def test_gaussian_kl_closed_form(self):
        s = np.linspace(-30.0, 30.0, 6001)
        m1, s1, m2, s2 = 0.4, 1.1, -0.3, 1.5
        g1 = np.exp(-((s - m1) ** 2) / (2 * s1**2)) / (s1 * math.sqrt(2 * math.pi))
        g2 = np.exp(-((s - m2) ** 2) / (2 * s2**2)) / (s2 * math.sqrt(2 * math.pi))
        mu = kl.GridMeasure.probability("s-axis", s, g1)
        mu0 = kl.GridMeasure.probability("s-axis", s, g2)
        kl_closed = math.log(s2 / s1) + (s1**2 + (m1 - m2) ** 2) / (2 * s2**2) - 0.5
        assert abs(kl.entropy(mu, mu0) - kl_closed) < 1e-5

    def test_floor_stability(self, corpus, sgrid):
        # the truncation floor only touches exponentially small nodes: the
        # entropy stabilizes as the floor is removed
        u = corpus[3]
        rho_u = u.density_s(sgrid)
        mu = kl.GridMeasure.probability("s-axis", sgrid, rho_u)
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        vals = [kl.entropy(mu, mu0, floor=f) for f in (1e-6, 1e-10, 1e-14, 1e-18)]
        assert abs(vals[-1] - vals[-2]) < 1e-12
        assert abs(vals[0] - vals[-1]) < 1e-4

    def test_infinite_when_support_escapes(self):
        s = np.linspace(-5.0, 5.0, 1001)
        p = np.exp(-(s**2))
        q = np.where(np.abs(s) < 2.0, np.exp(-(s**2)), 0.0)
        mu = kl.GridMeasure.probability("s-axis", s, p)
        mu0 = kl.GridMeasure.probability("s-axis", s, q)
        assert kl.entropy(mu, mu0) == math.inf

    def test_convex_in_the_measure(self, sgrid):
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        d1 = fs_density(sgrid) * (1.0 + 0.4 * np.tanh(sgrid / 3.0))
        d0 = fs_density(sgrid) * (1.0 - 0.2 * expit(sgrid))
        m1 = kl.GridMeasure.probability("s-axis", sgrid, d1)
        m0 = kl.GridMeasure.probability("s-axis", sgrid, d0)
        for lam in (0.25, 0.5, 0.75):
            mix = kl.GridMeasure.probability(
                "s-axis", sgrid, lam * m1.density + (1 - lam) * m0.density
            )
            bound = lam * kl.entropy(m1, mu0) + (1 - lam) * kl.entropy(m0, mu0)
            assert kl.entropy(mix, mu0) <= bound + 1e-9

    def test_lower_semicontinuity_proxy(self, sgrid):
        # liminf of the entropies along an L^1-convergent family dominates
        # the limit entropy (up to tolerance once the perturbation is small)
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        target = fs_density(sgrid) * (1.0 + 0.3 * np.cos(2 * np.pi * expit(sgrid)))
        mu = kl.GridMeasure.probability("s-axis", sgrid, target)
        H = kl.entropy(mu, mu0)
        deficits = []
        for eps in (1e-3, 1e-4, 1e-5, 1e-6):
            wobble = target * (1.0 + eps * np.sin(5 * expit(sgrid)))
            mu_eps = kl.GridMeasure.probability("s-axis", sgrid, wobble)
            deficits.append(H - kl.entropy(mu_eps, mu0))
        assert all(abs(b) < abs(a) for a, b in zip(deficits, deficits[1:]))
        assert deficits[-1] <= 1e-6


class TestEntropyDuality:
    def test_zero_function(self, sgrid):
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.4 * expit(sgrid))
        )
        gap = kl.entropy_legendre_gap(mu, mu0, np.zeros_like(sgrid))
        assert abs(gap - kl.entropy(mu, mu0)) < 1e-14

    def test_optimal_function(self, sgrid):
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.4 * expit(sgrid))
        )
        f = np.log(mu.density / mu0.density)
        assert abs(kl.entropy_legendre_gap(mu, mu0, f)) < 1e-6

    def test_random_functions_nonnegative(self, sgrid):
        mu0 = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.3 * np.cos(3 * expit(sgrid)))
        )
        for f in sphere_test_functions(sgrid, seed=7, count=20):
            assert kl.entropy_legendre_gap(mu, mu0, f) >= -1e-9


class TestMabuchi:
    def test_reference_and_constants(self, fs):
        assert abs(kl.mabuchi(fs)) < 1e-14
        u = kl.SymplecticPotential(fs.x, fs.g + 0.9)
        assert abs(kl.mabuchi(u)) < 1e-7

    def test_toric_oracle(self, corpus):
        for u in corpus[2:5]:
            assert abs(kl.mabuchi(u) - mabuchi_toric_oracle(u)) < 1e-6

    def test_gradient_pairing_order(self, corpus, sgrid):
        u = corpus[2]
        fam = radial_family(u, sgrid, seed_v=5, seed_w=6)
        S_at = exact_scalar_curvature(u, fam.x_u)
        pairing = float(np.sum(fam.wq * fam.v * (2.0 - S_at) * fam.rho_u))
        errs, order = gradient_order(fam.mabuchi, pairing)
        assert order >= 1.9

    def test_family_matches_public_evaluator(self, corpus, sgrid):
        # the s-grid three-term evaluation agrees with the moment-route value
        fam = radial_family(corpus[2], sgrid)
        assert abs(fam.mabuchi(0.0) - kl.mabuchi(corpus[2])) < 1e-6


class TestConvexityScan:
    def test_constant_path(self, corpus):
        path = kl.weak_geodesic(corpus[2], corpus[2])
        rep = kl.convexity_scan(path)
        assert np.max(np.abs(rep.values - rep.values[0])) < 1e-14
        assert np.max(np.abs(rep.second_diffs)) < 1e-9

    def test_constant_flow(self, fs):
        u1 = kl.SymplecticPotential(fs.x, fs.g - 0.7)
        rep = kl.convexity_scan(kl.weak_geodesic(fs, u1))
        assert np.max(np.abs(rep.values)) < 1e-7  # descends to metrics

    def test_endpoints_exact(self, corpus, geodesic_23):
        rep = kl.convexity_scan(geodesic_23)
        assert rep.values[0] == kl.mabuchi(corpus[2])
        assert rep.values[-1] == kl.mabuchi(corpus[3])

    def test_refuses_generic(self, corpus):
        path = kl.MetricPath(np.linspace(0, 1, 5), [corpus[2]] * 5, "generic")
        with pytest.raises(ValueError):
            kl.convexity_scan(path)

    def test_second_derivative_oracle(self, geodesic_23):
        rep = kl.convexity_scan(geodesic_23)
        i = len(geodesic_23) // 2
        oracle = mabuchi_second_derivative_oracle(geodesic_23, i)
        assert abs(rep.second_diffs[i - 1] - oracle) < 2e-4 * max(1.0, oracle)

    def test_report_consistency(self, geodesic_23):
        rep = kl.convexity_scan(geodesic_23)
        rep.validate()


class TestSecondVariation:
    def test_constant_path(self, corpus):
        path = kl.weak_geodesic(corpus[2], corpus[2], 9)
        assert kl.second_variation_check(path) < 1e-12

    def test_refinement_decrease(self, corpus):
        d_coarse = kl.second_variation_check(
            kl.weak_geodesic(corpus[2], corpus[3], 33), s_grid(40.0, 2048)
        )
        d_fine = kl.second_variation_check(
            kl.weak_geodesic(corpus[2], corpus[3], 65), s_grid(40.0, 4096)
        )
        assert d_fine < d_coarse

    def test_integrand_positive(self, geodesic_23):
        assert kl.second_variation_integrand_min(geodesic_23) >= -1e-8


class TestSubslope:
    def test_identical_endpoints(self, corpus):
        lhs, rhs, slack = kl.subslope_check(corpus[2], corpus[2])
        assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12 and abs(slack) < 1e-12

    def test_fs_minimizes(self, fs, corpus):
        for u in corpus[2:5]:
            assert kl.mabuchi(u) >= -1e-6
            lhs, rhs, slack = kl.subslope_check(fs, u)
            assert slack >= -1e-4
            assert rhs > -1e-4  # Calabi energy of the reference is zero

    def test_random_pair(self, corpus):
        _, _, slack = kl.subslope_check(corpus[3], corpus[4])
        assert slack >= -1e-4


class TestCalabi:
    def test_reference_zero(self, fs):
        assert kl.calabi_energy(fs) == 0.0
        u = kl.SymplecticPotential(fs.x, fs.g + 0.2)
        assert kl.calabi_energy(u) < 1e-12

    def test_refinement_stable(self):
        from kahlerlab.potential import moment_grid, poly_model

        vals = []
        for n in (1024, 2048):
            x = moment_grid(n)
            model = poly_model(np.array([0.0, 0.0, 0.05, -0.1, 0.05]))
            u = kl.SymplecticPotential(x, model(x, 0), model=model)
            vals.append(kl.calabi_energy(u))
        assert vals[0] > 0.0
        assert abs(vals[0] - vals[1]) < 1e-3 * vals[0]


class TestTwistedFunctionals:
    def test_vanish_on_constants(self, fs, sgrid):
        u = kl.SymplecticPotential(fs.x, fs.g - 1.1)
        mu = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        alpha = kl.TwistForm.multiple_of_reference(0.2)
        assert abs(kl.twisted_F_mu(u, mu)) < 1e-7
        assert abs(kl.twisted_F_alpha(u, alpha)) < 1e-7

    def test_convex_along_geodesic(self, geodesic_23, sgrid):
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.3 * np.cos(2 * np.pi * expit(sgrid)))
        )
        vals = np.array([kl.twisted_F_mu(u, mu) for u in geodesic_23.slices])
        assert np.min(np.diff(vals, 2)) >= -1e-10

    def test_difference_bounded_on_ray(self, fs, sgrid):
        # two measures: F_mu - F_nu stays bounded while each grows
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.3 * np.cos(2 * np.pi * expit(sgrid)))
        )
        nu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.4 * np.sin(np.pi * expit(sgrid)))
        )
        taus = np.linspace(0.0, 4.0, 9)
        fmu = []
        fnu = []
        from kahlerlab.fields import mobius_pullback

        for tau in taus:
            u = mobius_pullback(fs, tau)
            fmu.append(kl.twisted_F_mu(u, mu))
            fnu.append(kl.twisted_F_mu(u, nu))
        fmu, fnu = np.array(fmu), np.array(fnu)
        assert fmu[-1] - fmu[0] > 0.3  # grows along the ray
        assert np.max(np.abs(fmu - fnu)) < 0.2  # while the difference stays bounded


class TestStrictConvexity:
    def test_constant_path(self, corpus, sgrid):
        mu = kl.GridMeasure.probability("s-axis", sgrid, fs_density(sgrid))
        path = kl.weak_geodesic(corpus[2], corpus[2], 17)
        res = kl.strict_convexity_Imu(path, mu)
        assert abs(res.gap) < 1e-10 and res.bound < 1e-10

    def test_geodesic_gap_dominates_bound(self, geodesic_23, sgrid):
        mu = kl.GridMeasure.probability(
            "s-axis", sgrid, fs_density(sgrid) * (1.0 + 0.3 * np.cos(2 * np.pi * expit(sgrid)))
        )
        res = kl.strict_convexity_Imu(geodesic_23, mu)
        assert res.gap > 0.0
        assert res.gap >= res.bound - 1e-6
        assert res.lower_density_ratio > 0.5
        assert res.poincare_constant > 0.0
