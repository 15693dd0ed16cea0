"""Batch experiment driver.

Every experiment of the library is exposed as a subcommand with a
declarative JSON config, flag overrides, and reproducible outputs: a
versioned manifest (config echo, library version, measured slacks), one CSV
per scan, and a matplotlib plot script per figure-like output (emitted as
text; nothing is rendered).  Exit status is 0 iff every asserted tolerance
passes; the first violated assertion is named on stderr.

Fixed seed implies byte-identical CSV and manifest outputs: floats are
written with ``repr`` and the manifest uses sorted keys.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import __version__
from .bergman import assemble, mixed_positivity, mutate_log_norms, psh_variation_check, tv_convergence
from .errors import ConfigError, KahlerLabError
from .fields import (
    GradientField,
    energy_EV,
    futaki,
    hamiltonian,
    ibp_identity_check,
    inner_product,
    perturbation_order_check,
    twisted_csc_solve,
)
from .functionals import convexity_scan, mabuchi, subslope_check
from .geodesic import subgeodesic_make, weak_geodesic
from .potential import (
    MOMENT_N,
    S_NODES,
    S_WINDOW,
    GridMeasure,
    SymplecticPotential,
    TwistForm,
    fs_density,
    glued_model,
    moment_grid,
    poly_model,
    s_grid,
)

EXPERIMENTS = (
    "convexity",
    "subslope",
    "bergman-tv",
    "psh-variation",
    "mixed-positivity",
    "uniqueness-twisted",
    "perturbation",
    "fields-identities",
)

MANIFEST_VERSION = 1

DEFAULT_TOLERANCES = {
    "convexity": {"second_diff_slack": 1e-6},
    "subslope": {"slack": 1e-4, "fs_lower": 1e-6},
    "bergman-tv": {},
    "psh-variation": {"min_eig": 1e-6, "mutation_detect": 1e-3},
    "mixed-positivity": {"pairing": 1e-8, "truncation_stability": 1e-4},
    "uniqueness-twisted": {"agreement": 1e-4, "residual": 1e-5},
    "perturbation": {"slope_min": 1.9, "control_band": 0.15},
    "fields-identities": {
        "hamiltonian": 1e-6,
        "ibp": 1e-5,
        "pairing_spread": 1e-5,
        "pairing_value": 1e-6,
        "futaki_spread": 1e-5,
        "linearity": 1e-5,
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    grid: dict = field(default_factory=lambda: {"N": MOMENT_N, "S": S_WINDOW, "t_nodes": 65})
    k_list: list = field(default_factory=lambda: [16, 32, 64, 128])
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "out"
    corpus_count: int = 6

    def validate(self) -> None:
        bad = []
        if self.experiment not in EXPERIMENTS:
            bad.append("experiment")
        g = self.grid
        if not isinstance(g, dict) or any(key not in g for key in ("N", "S", "t_nodes")):
            bad.append("grid")
        else:
            if not (isinstance(g["N"], int) and g["N"] >= 64):
                bad.append("grid.N")
            if not (g["S"] > 0):
                bad.append("grid.S")
            if not (isinstance(g["t_nodes"], int) and g["t_nodes"] >= 3):
                bad.append("grid.t_nodes")
        if not self.k_list or any((not isinstance(k, int)) or k < 3 for k in self.k_list):
            bad.append("k_list")
        if any(v <= 0 for v in self.tolerances.values()):
            bad.append("tolerances")
        if not isinstance(self.seed, int):
            bad.append("seed")
        if not (isinstance(self.corpus_count, int) and self.corpus_count >= 1):
            bad.append("corpus_count")
        if bad:
            raise ConfigError(f"invalid config fields: {', '.join(bad)}", fields=bad)

    def tol(self, key: str) -> float:
        base = dict(DEFAULT_TOLERANCES.get(self.experiment, {}))
        base.update(self.tolerances)
        return float(base[key])

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "grid": self.grid,
            "k_list": list(self.k_list),
            "tolerances": {**DEFAULT_TOLERANCES.get(self.experiment, {}), **self.tolerances},
            "seed": self.seed,
            "output_dir": self.output_dir,
            "corpus_count": self.corpus_count,
        }


# -- corpus ------------------------------------------------------------------


def glued_profile(n: int = MOMENT_N, height: float = 0.8, x1: float = 0.35, x2: float = 0.65) -> SymplecticPotential:
    """C^{1,1} potential: g'' jumps between 0 and ``height`` (quadratic splice).

    The curvature of the metric stays bounded while its second derivative is
    discontinuous, which is the low-regularity regime of the weak theory.
    """
    x = moment_grid(n)
    model = glued_model(height, x1, x2)
    return SymplecticPotential(x, model(x, 0), model=model)


def generate_corpus(seed: int, count: int, n: int = MOMENT_N) -> list:
    """Deterministic potential corpus: reference, glued profile, then random
    convexity-certified polynomial bumps."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    x = moment_grid(n)
    out = [SymplecticPotential.fubini_study(n)]
    if count >= 2:
        out.append(glued_profile(n))
    # power-basis coefficients of x^m (1 - x)^2 for m = 2 .. 7
    shape_coefs = []
    for m in range(2, 8):
        c = np.zeros(m + 3)
        c[m] = 1.0
        c[m + 1] = -2.0
        c[m + 2] = 1.0
        shape_coefs.append(c)
    width = max(c.size for c in shape_coefs)
    shape_coefs = np.stack([np.pad(c, (0, width - c.size)) for c in shape_coefs])
    while len(out) < count:
        a = rng.uniform(-0.6, 0.6, size=shape_coefs.shape[0])
        coef = a @ shape_coefs
        for _ in range(40):
            model = poly_model(coef)
            if np.min(1.0 + x * (1.0 - x) * model(x, 2)) >= 0.05:
                break
            coef = 0.5 * coef
        out.append(SymplecticPotential(x, model(x, 0), model=model))
    return out


def corpus_pairs(corpus):
    return list(itertools.combinations(range(len(corpus)), 2))


def bump_measure(window: float = S_WINDOW, m: int = S_NODES, amplitude: float = 0.3, frequency: int = 1) -> GridMeasure:
    """Smooth strictly positive probability measure used by the experiments."""
    s = s_grid(window, m)
    from scipy.special import expit

    dens = (1.0 + amplitude * np.cos(2.0 * math.pi * frequency * expit(s))) * fs_density(s)
    return GridMeasure.probability("s-axis", s, dens)


# -- output helpers ----------------------------------------------------------


def _write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


_PLOT_TEMPLATE = """\
# Plot script for {csv}; run with a matplotlib environment.
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open({csv!r})))
xs = [float(r[{xcol!r}]) for r in rows]
ys = [float(r[{ycol!r}]) for r in rows]
plt.plot(xs, ys, marker="o", lw=1)
plt.xlabel({xcol!r})
plt.ylabel({ycol!r})
plt.title({title!r})
plt.savefig({png!r}, dpi=150)
"""


def _write_plot_script(outdir: Path, name: str, csv_name: str, xcol: str, ycol: str, title: str):
    (outdir / f"plot_{name}.py").write_text(
        _PLOT_TEMPLATE.format(csv=csv_name, xcol=xcol, ycol=ycol, title=title, png=f"{name}.png")
    )


# -- experiment implementations ----------------------------------------------


def _run_convexity(cfg, outdir):
    n, t_nodes = cfg.grid["N"], cfg.grid["t_nodes"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, cfg.corpus_count, n)
    tol = cfg.tol("second_diff_slack")
    rows = []
    slacks = {}
    first_violation = None
    for i, j in corpus_pairs(corpus):
        path = weak_geodesic(corpus[i], corpus[j], t_nodes)
        rep = convexity_scan(path)
        for t, v, d1, d2 in rep.csv_rows():
            rows.append((f"{i}-{j}", float(t), float(v), float(d1), float(d2)))
        scale = max(1.0, float(np.max(np.abs(rep.values))))
        slacks[f"pair_{i}_{j}_min_second_diff"] = rep.min_second_diff
        if rep.min_second_diff < -tol * scale and first_violation is None:
            first_violation = f"convexity: pair {i}-{j} min second diff {rep.min_second_diff:.3e}"
    _write_csv(outdir / "convexity.csv", ["pair", "t", "value", "d1", "d2"], rows)
    _write_plot_script(outdir, "convexity", "convexity.csv", "t", "value", "K-energy along weak geodesics")
    return slacks, first_violation


def _run_subslope(cfg, outdir):
    n, t_nodes = cfg.grid["N"], cfg.grid["t_nodes"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, cfg.corpus_count, n)
    tol = cfg.tol("slack")
    fs_tol = cfg.tol("fs_lower")
    rows = []
    slacks = {}
    first_violation = None
    for i, j in corpus_pairs(corpus):
        # the glued profile has no classical curvature; keep it as the far end
        if i == 1:
            i, j = j, i
        lhs, rhs, slack = subslope_check(corpus[i], corpus[j], t_nodes, s=s)
        rows.append((f"{i}-{j}", lhs, rhs, slack))
        slacks[f"pair_{i}_{j}_slack"] = slack
        if slack < -tol and first_violation is None:
            first_violation = f"subslope: pair {i}-{j} slack {slack:.3e}"
    for i in range(1, len(corpus)):
        m = mabuchi(corpus[i])
        slacks[f"fs_minimizes_{i}"] = m
        if m < -fs_tol and first_violation is None:
            first_violation = f"subslope: K-energy of element {i} fell below the reference"
    _write_csv(outdir / "subslope.csv", ["pair", "lhs", "rhs", "slack"], rows)
    _write_plot_script(outdir, "subslope", "subslope.csv", "rhs", "lhs", "sub-slope inequality")
    return slacks, first_violation


def _run_bergman_tv(cfg, outdir):
    n = cfg.grid["N"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, cfg.corpus_count, n)
    rows = []
    slacks = {}
    first_violation = None
    for i, u in enumerate(corpus):
        tvs = tv_convergence(u, cfg.k_list, s)
        for k, tv in zip(cfg.k_list, tvs):
            rows.append((i, k, tv))
        slacks[f"element_{i}_tv"] = tvs
        if any(b >= a for a, b in zip(tvs, tvs[1:])) and first_violation is None:
            first_violation = f"bergman-tv: element {i} total variation not strictly decreasing"
    _write_csv(outdir / "bergman_tv.csv", ["element", "k", "tv"], rows)
    _write_plot_script(outdir, "bergman_tv", "bergman_tv.csv", "k", "tv", "Bergman total-variation convergence")
    return slacks, first_violation


def _run_psh_variation(cfg, outdir):
    n, t_nodes = cfg.grid["N"], cfg.grid["t_nodes"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, min(cfg.corpus_count, 4), n)
    tol = cfg.tol("min_eig")
    detect = cfg.tol("mutation_detect")
    rows = []
    slacks = {}
    first_violation = None
    # Hessian scans want ~0.01 steps in t; refine the path grid for the scan
    t_scan = 2 * (t_nodes - 1) + 1
    paths = [weak_geodesic(corpus[i], corpus[j], t_scan) for i, j in corpus_pairs(corpus)]
    paths.append(subgeodesic_make(corpus[0], corpus[-1], 0.1, t_scan, s))
    for pi, path in enumerate(paths):
        for k in cfg.k_list[:2]:
            sys_k = assemble(path, k, s)
            eig = psh_variation_check(sys_k)
            mut = psh_variation_check(mutate_log_norms(sys_k))
            rows.append((pi, path.kind, k, eig, mut))
            slacks[f"path_{pi}_k{k}_min_eig"] = eig
            if eig < -tol and first_violation is None:
                first_violation = f"psh-variation: path {pi} k={k} min eig {eig:.3e}"
            if mut > -detect and first_violation is None:
                first_violation = f"psh-variation: mutation control not detected (path {pi}, k={k})"
    _write_csv(outdir / "psh_variation.csv", ["path", "kind", "k", "min_eig", "mutated_min_eig"], rows)
    _write_plot_script(outdir, "psh_variation", "psh_variation.csv", "k", "min_eig", "log-kernel Hessian scan")
    return slacks, first_violation


def _run_mixed_positivity(cfg, outdir):
    n, t_nodes = cfg.grid["N"], cfg.grid["t_nodes"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, min(cfg.corpus_count, 4), n)
    tol = cfg.tol("pairing")
    stab = cfg.tol("truncation_stability")
    k = cfg.k_list[0]
    rows = []
    slacks = {}
    first_violation = None
    for idx, (i, j) in enumerate(corpus_pairs(corpus)):
        path = weak_geodesic(corpus[i], corpus[j], t_nodes)
        sys_k = assemble(path, k, s)
        md_inf = mixed_positivity(sys_k, path, A=math.inf)
        md_5 = mixed_positivity(sys_k, path, A=5.0)
        rows.append((f"{i}-{j}", k, md_inf, md_5))
        slacks[f"pair_{i}_{j}_md"] = [md_inf, md_5]
        if (md_inf < -tol or md_5 < -tol) and first_violation is None:
            first_violation = f"mixed-positivity: pair {i}-{j} pairing below -{tol}"
        if abs(md_inf - md_5) > stab and first_violation is None:
            first_violation = f"mixed-positivity: truncation instability at pair {i}-{j}"
    _write_csv(outdir / "mixed_positivity.csv", ["pair", "k", "md_untruncated", "md_A5"], rows)
    _write_plot_script(outdir, "mixed_positivity", "mixed_positivity.csv", "k", "md_untruncated", "mixed pairing scan")
    return slacks, first_violation


def _run_uniqueness_twisted(cfg, outdir):
    n = cfg.grid["N"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, 5, n)
    starts = [corpus[0], corpus[2], corpus[3]]
    alpha = TwistForm.multiple_of_reference(0.2, n)
    result = twisted_csc_solve(alpha, starts, n_out=n, s=s)
    agree_tol = cfg.tol("agreement")
    res_tol = cfg.tol("residual")
    rows = []
    for si, trace in enumerate(result.traces):
        for it, (v, gn, r) in enumerate(zip(trace.values, trace.grad_norms, trace.residuals)):
            rows.append((si, it, v, gn, r))
    _write_csv(outdir / "twisted_descent.csv", ["start", "iter", "value", "grad_norm", "residual"], rows)
    _write_plot_script(outdir, "twisted_descent", "twisted_descent.csv", "iter", "residual", "twisted descent residuals")
    g_ref = result.solutions[0].g
    agreement = max(float(np.max(np.abs(sol.g - g_ref))) for sol in result.solutions[1:])
    residuals = [trace.residuals[-1] for trace in result.traces]
    alpha0 = TwistForm.multiple_of_reference(0.0, n)
    rec = twisted_csc_solve(alpha0, [corpus[2]], n_out=n, s=s)
    fs_recovery = float(np.max(np.abs(rec.solutions[0].g)))
    slacks = {"agreement": agreement, "final_residuals": residuals, "fs_recovery": fs_recovery}
    first_violation = None
    if agreement > agree_tol:
        first_violation = f"uniqueness-twisted: starts disagree by {agreement:.3e}"
    elif max(residuals) > res_tol:
        first_violation = f"uniqueness-twisted: final residual {max(residuals):.3e}"
    elif fs_recovery > agree_tol:
        first_violation = f"uniqueness-twisted: untwisted run missed the reference by {fs_recovery:.3e}"
    return slacks, first_violation


def _run_perturbation(cfg, outdir):
    n = cfg.grid["N"]
    s = s_grid(cfg.grid["S"], S_NODES)
    u0 = SymplecticPotential.fubini_study(n)
    mu = bump_measure(cfg.grid["S"], S_NODES)
    corrected = perturbation_order_check(u0, mu, corrected=True, s=s)
    control = perturbation_order_check(u0, mu, corrected=False, s=s)
    rows = [
        (float(a), float(g), True) for a, g in zip(corrected.s_values, corrected.gradient_norms)
    ] + [(float(a), float(g), False) for a, g in zip(control.s_values, control.gradient_norms)]
    _write_csv(outdir / "perturbation.csv", ["s", "grad_norm", "corrected"], rows)
    _write_plot_script(outdir, "perturbation", "perturbation.csv", "s", "grad_norm", "perturbation order")
    slacks = {"slope_corrected": corrected.slope, "slope_control": control.slope}
    first_violation = None
    if corrected.slope < cfg.tol("slope_min"):
        first_violation = f"perturbation: corrected slope {corrected.slope:.3f} below 1.9"
    elif abs(control.slope - 1.0) > cfg.tol("control_band"):
        first_violation = f"perturbation: control slope {control.slope:.3f} off 1.0"
    return slacks, first_violation


def _run_fields_identities(cfg, outdir):
    n, t_nodes = cfg.grid["N"], cfg.grid["t_nodes"]
    s = s_grid(cfg.grid["S"], S_NODES)
    corpus = generate_corpus(cfg.seed, 5, n)
    smooth = [corpus[0], corpus[2], corpus[3], corpus[4]]  # curvature needs C^4
    V = GradientField.model_field(1.0, n)
    rows = []
    slacks = {}
    first_violation = None

    def record(name, value, bound):
        nonlocal first_violation
        ok = value <= bound
        rows.append((name, value, bound, ok))
        slacks[name] = value
        if not ok and first_violation is None:
            first_violation = f"fields-identities: {name} = {value:.3e} exceeds {bound:.1e}"

    # hamiltonian decomposition residual on a generic metric
    u = smooth[2]
    h_direct = hamiltonian(V, u, s)
    h0 = hamiltonian(V, corpus[0], s)
    rel = u.radial(s)[0] - corpus[0].radial(s)[0]
    vu = CubicSpline(s, rel)(s, 1)
    record("hamiltonian_decomposition", float(np.max(np.abs(h_direct - (h0 + vu)))), cfg.tol("hamiltonian"))

    # test functions must live on the sphere: smooth functions of x0 = expit(s)
    rng = np.random.default_rng(cfg.seed + 1)
    from scipy.special import expit

    x0 = expit(s)
    battery = np.stack([x0 - 0.5, x0 * (1.0 - x0), np.cos(np.pi * x0), np.exp(-(s**2) / 40.0)])
    v = rng.standard_normal(4) @ battery
    wfun = rng.standard_normal(4) @ battery
    record("contraction_ibp", ibp_identity_check(u, v, wfun, s), cfg.tol("ibp"))

    pairings = [inner_product(V, V, uu, s) for uu in smooth]
    record("pairing_metric_spread", float(np.max(pairings) - np.min(pairings)), cfg.tol("pairing_spread"))
    record("pairing_reference_value", abs(pairings[0] - 1.0 / 12.0), cfg.tol("pairing_value"))

    futakis = [futaki(V, uu) for uu in smooth]
    record("futaki_spread", float(np.max(np.abs(futakis))), cfg.tol("futaki_spread"))

    path = weak_geodesic(smooth[1], smooth[2], t_nodes)
    rep = energy_EV(path, V, s)
    scale = max(1.0, float(np.max(np.abs(rep.values))))
    record("field_energy_linearity", float(np.max(np.abs(rep.second_diffs))) / scale, cfg.tol("linearity"))

    _write_csv(outdir / "fields_identities.csv", ["check", "value", "bound", "pass"], rows)
    _write_plot_script(outdir, "fields_identities", "fields_identities.csv", "value", "bound", "field identities")
    return slacks, first_violation


_RUNNERS = {
    "convexity": _run_convexity,
    "subslope": _run_subslope,
    "bergman-tv": _run_bergman_tv,
    "psh-variation": _run_psh_variation,
    "mixed-positivity": _run_mixed_positivity,
    "uniqueness-twisted": _run_uniqueness_twisted,
    "perturbation": _run_perturbation,
    "fields-identities": _run_fields_identities,
}


def run(config: ExperimentConfig) -> int:
    """Run one experiment; write manifest + CSVs; return the exit status."""
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    slacks, first_violation = _RUNNERS[config.experiment](config, outdir)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "library_version": __version__,
        "config": config.to_dict(),
        "measured": slacks,
        "pass": first_violation is None,
        "first_violation": first_violation,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    if first_violation is not None:
        print(first_violation, file=sys.stderr)
        return 1
    return 0


# -- argument parsing ---------------------------------------------------------


def _parse_tol_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"bad --tol-override {item!r}; expected KEY=VAL", fields=["tolerances"])
        key, val = item.split("=", 1)
        out[key] = float(val)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kahlerlab",
        description="Numerical experiments on the invariant sphere model. "
        "CSV columns: convexity (pair,t,value,d1,d2); subslope (pair,lhs,rhs,slack); "
        "bergman-tv (element,k,tv); psh-variation (path,kind,k,min_eig,mutated_min_eig); "
        "mixed-positivity (pair,k,md_untruncated,md_A5); uniqueness-twisted "
        "(start,iter,value,grad_norm,residual); perturbation (s,grad_norm,corrected); "
        "fields-identities (check,value,bound,pass).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--k", type=str, default=None, help="comma-separated levels")
        p.add_argument("--grid-n", type=int, default=None)
        p.add_argument("--t-nodes", type=int, default=None)
        p.add_argument("--corpus-count", type=int, default=None)
        p.add_argument("--tol-override", action="append", default=None, metavar="KEY=VAL")
    g = sub.add_parser("generate-corpus", help="write the potential corpus to JSON")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=6)
    g.add_argument("--grid-n", type=int, default=MOMENT_N)
    g.add_argument("--out", type=str, default="out")
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    cfg = ExperimentConfig(
        experiment=args.command,
        grid=base.get("grid", {"N": MOMENT_N, "S": S_WINDOW, "t_nodes": 65}),
        k_list=base.get("k_list", [16, 32, 64, 128]),
        tolerances=base.get("tolerances", {}),
        seed=base.get("seed", 0),
        output_dir=base.get("output_dir", "out"),
        corpus_count=base.get("corpus_count", 6),
    )
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.k is not None:
        try:
            cfg.k_list = [int(v) for v in args.k.split(",") if v]
        except ValueError:
            raise ConfigError("bad --k list", fields=["k_list"])
    if args.grid_n is not None:
        cfg.grid["N"] = args.grid_n
    if args.t_nodes is not None:
        cfg.grid["t_nodes"] = args.t_nodes
    if args.corpus_count is not None:
        cfg.corpus_count = args.corpus_count
    cfg.tolerances.update(_parse_tol_overrides(args.tol_override))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate-corpus":
        corpus = generate_corpus(args.seed, args.count, args.grid_n)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        doc = [u.to_dict() for u in corpus]
        (outdir / "corpus.json").write_text(json.dumps(doc, sort_keys=True))
        return 0
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc} (fields: {', '.join(exc.fields)})", file=sys.stderr)
        return 2
    except KahlerLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
