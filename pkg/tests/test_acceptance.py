"""Acceptance suite: every headline property at desk scale, one line per criterion.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the PASS/FAIL lines.
All tolerances are pinned here; the potential corpus is seven deterministic
elements (reference, a merely-C^{1,1} splice, five smooth bumps), giving the
21 endpoint pairs the scans run over.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.interpolate import CubicSpline
from scipy.special import expit

import kahlerlab as kl
from conftest import RadialFamily, convex_safe_direction, exact_scalar_curvature, gradient_order, sphere_test_functions
from kahlerlab.cli import bump_measure
from kahlerlab.potential import fs_density, s_grid, trapezoid_weights


SEED = 0
N_ELEMENTS = 7  # 21 pairs


def report(num, name, ok, detail):
    line = f"criterion {num:2d} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus7():
    return kl.generate_corpus(SEED, N_ELEMENTS)


@pytest.fixture(scope="module")
def pairs(corpus7):
    return list(itertools.combinations(range(len(corpus7)), 2))


@pytest.fixture(scope="module")
def smooth_indices():
    return [0, 2, 3, 4, 5, 6]  # curvature pipelines need C^4; index 1 is the splice


@pytest.fixture(scope="module")
def convexity_reports(corpus7, pairs):
    out = {}
    for i, j in pairs:
        t0 = time.time()
        path = kl.weak_geodesic(corpus7[i], corpus7[j], 65)
        rep = kl.convexity_scan(path)
        out[(i, j)] = (rep, time.time() - t0)
    return out


def test_criterion_01_convexity(convexity_reports):
    worst = math.inf
    slowest = 0.0
    for (i, j), (rep, dt) in convexity_reports.items():
        scale = max(1.0, float(np.max(np.abs(rep.values))))
        worst = min(worst, rep.min_second_diff / scale)
        slowest = max(slowest, dt)
    ok = worst >= -1e-6 and slowest < 60.0
    report(1, "K-energy convexity", ok, f"worst scaled d2 {worst:.3e}, slowest pair {slowest:.1f}s")


def test_criterion_02_endpoint_continuity(corpus7, convexity_reports):
    worst = 0.0
    for (i, j), (rep, _) in convexity_reports.items():
        worst = max(worst, abs(rep.values[0] - kl.mabuchi(corpus7[i])))
        worst = max(worst, abs(rep.values[-1] - kl.mabuchi(corpus7[j])))
    report(2, "endpoint continuity", worst <= 1e-8, f"max endpoint mismatch {worst:.1e}")


def test_criterion_03_subslope(corpus7, pairs):
    worst_slack = math.inf
    for i, j in pairs:
        if i == 1:
            i, j = j, i  # the splice has no classical curvature; keep it as u1
        _, _, slack = kl.subslope_check(corpus7[i], corpus7[j])
        worst_slack = min(worst_slack, slack)
    floor = min(kl.mabuchi(u) for u in corpus7[1:])
    ok = worst_slack >= -1e-4 and floor >= -1e-6
    report(3, "sub-slope inequality", ok, f"worst slack {worst_slack:.3e}, K-energy floor {floor:.3e}")


def test_criterion_04_bergman_mass(corpus7):
    path = kl.weak_geodesic(corpus7[2], corpus7[3], 5)
    worst = 0.0
    for k in (8, 16, 23, 32, 64, 128):
        sys_k = kl.assemble(path, k)
        for t_index in (0, 2, 4):
            meas = kl.bergman_measure(sys_k, t_index)
            worst = max(worst, abs(meas.mass - (k - 1) / k))
    report(4, "Bergman mass identity", worst <= 1e-8, f"worst |mass-(k-1)/k| {worst:.1e}")


def test_criterion_05_tv_convergence(corpus7):
    ks = [16, 32, 64, 128]
    ok = True
    detail = []
    for idx, u in enumerate(corpus7):
        tvs = kl.tv_convergence(u, ks)
        if not all(b < a for a, b in zip(tvs, tvs[1:])):
            ok = False
            detail.append(f"element {idx} not decreasing")
    fs_tv = kl.tv_convergence(corpus7[0], [64])[0]
    locked = abs(fs_tv - 0.015625) < 1e-9
    ok = ok and fs_tv < 0.08 and locked
    report(5, "TV convergence", ok, f"reference TV(64) {fs_tv:.9f} (locked), all decreasing={not detail}")


def test_criterion_06_psh_variation(corpus7, pairs):
    worst = math.inf
    t_scan = 129
    for i, j in pairs:
        path = kl.weak_geodesic(corpus7[i], corpus7[j], t_scan)
        for k in (16, 32):
            worst = min(worst, kl.psh_variation_check(kl.assemble(path, k)))
    sub = kl.subgeodesic_make(corpus7[0], corpus7[3], 0.1, t_scan)
    for k in (16, 32):
        worst = min(worst, kl.psh_variation_check(kl.assemble(sub, k)))
    control_path = kl.weak_geodesic(corpus7[2], corpus7[3], t_scan)
    mutated = kl.psh_variation_check(kl.mutate_log_norms(kl.assemble(control_path, 16)))
    ok = worst >= -1e-6 and mutated < -1e-3
    report(6, "psh variation", ok, f"min eig {worst:.3e}, mutated control {mutated:.3e}")


def test_criterion_07_decomposition_mixed(corpus7):
    sample_pairs = [(0, 1), (0, 3), (2, 3), (2, 4), (5, 6)]
    worst_eig = math.inf
    worst_md = math.inf
    worst_stab = 0.0
    for i, j in sample_pairs:
        path_scan = kl.weak_geodesic(corpus7[i], corpus7[j], 129)
        sys_scan = kl.assemble(path_scan, 32)
        worst_eig = min(worst_eig, kl.decomposition_inequality(sys_scan, path_scan))
        path = kl.weak_geodesic(corpus7[i], corpus7[j], 65)
        sys_k = kl.assemble(path, 32)
        md_inf = kl.mixed_positivity(sys_k, path, A=math.inf)
        md_5 = kl.mixed_positivity(sys_k, path, A=5.0)
        worst_md = min(worst_md, md_inf, md_5)
        worst_stab = max(worst_stab, abs(md_inf - md_5))
    ok = worst_eig >= -1e-6 and worst_md >= -1e-8 and worst_stab <= 1e-4
    report(
        7,
        "decomposition + mixed positivity",
        ok,
        f"min eig {worst_eig:.3e}, min pairing {worst_md:.3e}, A-stability {worst_stab:.1e}",
    )


def test_criterion_08_hmae_refinement(corpus7):
    sample_pairs = [(0, 2), (0, 3), (2, 3), (3, 4), (2, 5)]
    worst_ratio = math.inf
    for i, j in sample_pairs:
        res = []
        for t_nodes, m in ((33, 1024), (65, 2048), (129, 4096)):
            path = kl.weak_geodesic(corpus7[i], corpus7[j], t_nodes)
            res.append(kl.hmae_residual(path, s_grid(40.0, m)))
        worst_ratio = min(worst_ratio, res[0] / res[1], res[1] / res[2])
    report(8, "HMAE residual order", worst_ratio >= 3.5, f"worst refinement ratio {worst_ratio:.2f}")


def test_criterion_09_gradient_orders(corpus7):
    s = s_grid()
    u = corpus7[2]
    v, vpp = convex_safe_direction(s, seed=11)
    w, wpp = convex_safe_direction(s, seed=12)
    fam = RadialFamily(u, s, v, vpp, w, wpp)

    pair_E = 2.0 * float(np.sum(fam.wq * v * fam.rho_u))
    errs_E, order_E = gradient_order(fam.energy, pair_E)
    ric = kl.ricci_reference()
    rho_T = CubicSpline(ric.nodes, ric.density)(s)
    pair_T = float(np.sum(fam.wq * v * rho_T))
    errs_T, order_T = gradient_order(lambda h: fam.energy_T(h, rho_T), pair_T)
    S_at = exact_scalar_curvature(u, fam.x_u)
    pair_M = float(np.sum(fam.wq * v * (2.0 - S_at) * fam.rho_u))
    errs_M, order_M = gradient_order(fam.mabuchi, pair_M)

    ok = (
        (order_E >= 1.9 or errs_E[-1] < 1e-9)
        and (order_T >= 1.9 or errs_T[-1] < 1e-9)
        and order_M >= 1.9
    )
    report(9, "gradient pairings", ok, f"orders E {order_E:.2f}, E^T {order_T:.2f}, M {order_M:.2f}")


def test_criterion_10_entropy_duality():
    s = s_grid()
    mu0 = kl.GridMeasure.probability("s-axis", s, fs_density(s))
    mu = kl.GridMeasure.probability(
        "s-axis", s, fs_density(s) * (1.0 + 0.35 * np.cos(2 * np.pi * expit(s) + 0.4))
    )
    worst = math.inf
    for f in sphere_test_functions(s, seed=13, count=100):
        worst = min(worst, kl.entropy_legendre_gap(mu, mu0, f))
    opt = kl.entropy_legendre_gap(mu, mu0, np.log(mu.density / mu0.density))
    ok = worst >= -1e-9 and abs(opt) <= 1e-6
    report(10, "entropy duality", ok, f"worst gap {worst:.2e}, optimal-f gap {opt:.1e}")


def test_criterion_11_field_identities(corpus7, smooth_indices):
    s = s_grid()
    V = kl.GradientField.model_field()
    fs = corpus7[0]
    u = corpus7[3]

    h_u = kl.hamiltonian(V, u, s)
    h_0 = kl.hamiltonian(V, fs, s)
    rel = u.radial(s)[0] - fs.radial(s)[0]
    res48 = float(np.max(np.abs(h_u - (h_0 + CubicSpline(s, rel)(s, 1)))))

    fns = sphere_test_functions(s, seed=14, count=2)
    res49 = kl.ibp_identity_check(u, fns[0], fns[1], s)

    three = [corpus7[m] for m in smooth_indices[:3]]
    pair_vals = [kl.inner_product(V, V, uu, s) for uu in three]
    spread410 = max(pair_vals) - min(pair_vals)
    ref_pairing = abs(pair_vals[0] - 1.0 / 12.0)

    futaki_spread = max(abs(kl.futaki(V, uu)) for uu in three)

    rep = kl.energy_EV(kl.weak_geodesic(corpus7[2], corpus7[3]), V, s)
    lin = float(np.max(np.abs(rep.second_diffs))) / max(1.0, float(np.max(np.abs(rep.values))))

    ok = (
        res48 < 1e-6
        and res49 < 1e-5
        and spread410 < 1e-5
        and ref_pairing <= 1e-6
        and futaki_spread < 1e-5
        and lin < 1e-5
    )
    report(
        11,
        "field identities",
        ok,
        f"decomp {res48:.1e}, ibp {res49:.1e}, pairing spread {spread410:.1e}, "
        f"<V,V>-1/12 {ref_pairing:.1e}, futaki {futaki_spread:.1e}, linearity {lin:.1e}",
    )


def test_criterion_12_linearized_solvability(corpus7):
    fs = corpus7[0]
    nu = 0.3 * np.cos(2 * np.pi * fs.x)
    sol = kl.solve_linearized(fs, nu)
    rejected = False
    try:
        kl.solve_linearized(fs, fs.x - 0.5)
    except kl.CompatibilityError:
        rejected = True
    ok = sol.residual < 1e-8 and rejected
    report(12, "linearized solvability", ok, f"residual {sol.residual:.1e}, incompatible rejected={rejected}")


def test_criterion_13_perturbation_order(corpus7):
    fs = corpus7[0]
    s = s_grid()
    dens = (1.0 + 0.3 * np.cos(2.0 * np.pi * expit(s) + 0.7)) * fs_density(s)
    mu = kl.GridMeasure.probability("s-axis", s, dens)
    corrected = kl.perturbation_order_check(fs, mu, corrected=True)
    control = kl.perturbation_order_check(fs, mu, corrected=False)
    ok = corrected.slope >= 1.9 and abs(control.slope - 1.0) <= 0.15
    report(13, "perturbation order", ok, f"corrected {corrected.slope:.3f}, control {control.slope:.3f}")


def test_criterion_14_twisted_uniqueness(corpus7):
    alpha = kl.TwistForm.multiple_of_reference(0.2)
    t0 = time.time()
    res = kl.twisted_csc_solve(alpha, [corpus7[0], corpus7[2], corpus7[3]])
    per_run = (time.time() - t0) / 3.0
    agree = max(float(np.max(np.abs(sol.g - res.solutions[0].g))) for sol in res.solutions[1:])
    res0 = kl.twisted_csc_solve(kl.TwistForm.multiple_of_reference(0.0), [corpus7[3]])
    fs_recovery = float(np.max(np.abs(res0.solutions[0].g)))
    ok = agree <= 1e-4 and fs_recovery <= 1e-4 and per_run < 300.0
    report(
        14,
        "twisted uniqueness",
        ok,
        f"start agreement {agree:.1e}, untwisted recovery {fs_recovery:.1e}, {per_run:.1f}s/run",
    )


def test_criterion_15_strict_convexity(corpus7, pairs):
    s = s_grid()
    mu = kl.GridMeasure.probability(
        "s-axis", s, fs_density(s) * (1.0 + 0.3 * np.cos(2 * np.pi * expit(s)))
    )
    worst_margin = math.inf
    logged = None
    for i, j in pairs:
        path = kl.weak_geodesic(corpus7[i], corpus7[j])
        res = kl.strict_convexity_Imu(path, mu, s)
        worst_margin = min(worst_margin, res.gap - res.bound)
        if logged is None:
            logged = res
    ok = worst_margin >= -1e-6
    report(
        15,
        "strict convexity",
        ok,
        f"worst gap-bound {worst_margin:.3e}; measured A={logged.lower_density_ratio:.3f}, "
        f"C={logged.upper_metric_ratio:.3f}, delta={logged.poincare_constant:.3f}",
    )
