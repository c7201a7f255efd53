"""One function per CLI experiment; each returns curves, fit reports and metadata."""
from __future__ import annotations

import itertools
import math
import warnings

import numpy as np

from .artifacts import Curve, ExperimentResult
from .config import ExperimentConfig
from .correlations import (
    ground_majorana,
    majorana_bond_correlator,
    pauli_expectation,
    string_correlator_xx,
)
from .errors import ConfigError, SizeLimitError
from .model import Boundary, momentum_grid
from .observables import (
    block_entropy,
    concurrence,
    entropy_curve,
    fidelity,
    fidelity_susceptibility,
    ising_susceptibility_at,
    magnetization,
    susceptibility,
    susceptibility_at,
    two_site_density_matrix,
)
from .oracle import MAX_SITES, ed_ground_state, ed_observable, ed_spectrum, lowest_excitation
from .scaling import (
    central_charge_fit,
    fs_collapse,
    power_law_fit,
    saturation_slope,
    susceptibility_exponent,
    synthetic_fs_curves,
)
from .solver import (
    ValidityWarning,
    energy_gap,
    finite_size_gap,
    ground_state,
    ising_ground_energy,
    spectra_n4,
    spectrum_analytic,
)

SWEEP_ORDER = ("alpha", "h")
NAN = float("nan")


def _points(cfg: ExperimentConfig):
    """Cartesian product of the swept variables, alpha outermost."""
    names = [v for v in SWEEP_ORDER if v in cfg.sweep]
    grids = [cfg.grid(v) for v in names]
    for combo in itertools.product(*grids):
        yield dict(zip(names, (float(x) for x in combo)))


def _point_params(cfg: ExperimentConfig, pt: dict):
    return cfg.model_params(**pt)


def _oracle_ok(cfg: ExperimentConfig, params) -> bool:
    """``oracle``: null runs ED when the size allows, true demands it, false skips it."""
    want = cfg.options.get("oracle")
    if want is False:
        return False
    if params.n_sites > MAX_SITES:
        if want:
            raise SizeLimitError(f"oracle requested for N={params.n_sites} > {MAX_SITES}")
        return False
    return True


def run_gs_energy(cfg: ExperimentConfig) -> ExperimentResult:
    rows, worst = [], 0.0
    for pt in _points(cfg):
        p = _point_params(cfg, pt)
        e = ground_state(p).energy
        e_sec = e_full = NAN
        if _oracle_ok(cfg, p):
            sector = "even" if p.bc is Boundary.ABC else "odd"
            e_sec = ed_ground_state(p, sector).energy
            e_full = ed_ground_state(p, "full").energy
            worst = max(worst, abs(e - e_sec))
        rows.append((p.alpha, p.h, e, e_sec, e_full, abs(e - e_sec)))
    cols = ["alpha", "h", "E_G", "E_ED_sector", "E_ED_full", "abs_diff"]
    return ExperimentResult([Curve("energy", cols, rows)], meta={"max_abs_diff": worst})


def run_spectrum(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.model_params()
    rows = []
    for q in momentum_grid(p).points:
        for branch, energy in spectrum_analytic(p, q).branches:
            rows.append((float(q), branch, energy))
    curves = [Curve("branches", ["p_over_pi", "branch", "energy"], rows)]
    meta = {}
    if p.n_cells == 2:
        ana = np.sort(spectra_n4(p))
        ed = ed_spectrum(p) if _oracle_ok(cfg, p) else np.full(16, NAN)
        diff = np.abs(ana - ed)
        curves.append(Curve("n4_levels", ["level", "E_analytic", "E_ED", "abs_diff"],
                            [(k + 1, a, b, d) for k, (a, b, d) in enumerate(zip(ana, ed, diff))]))
        meta["max_abs_diff"] = float(np.nanmax(diff)) if np.isfinite(diff).any() else NAN
    return ExperimentResult(curves, meta=meta)


def run_gap(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    for pt in _points(cfg):
        p = _point_params(cfg, pt)
        ed = lowest_excitation(p, "even") if _oracle_ok(cfg, p) else NAN
        rows.append((p.alpha, p.h, energy_gap(p), finite_size_gap(p), ed))
    cols = ["alpha", "h", "Delta", "Delta_finite", "Delta_ED"]
    return ExperimentResult([Curve("gap", cols, rows)])


def run_fidelity_map(cfg: ExperimentConfig) -> ExperimentResult:
    delta, lift = float(cfg.options["delta"]), cfg.options["lift"]
    rows, n_deg = [], 0
    for pt in _points(cfg):
        p = _point_params(cfg, pt)
        fh = fidelity(p, "h", delta, lift)
        fa = fidelity(p, "alpha", delta, lift)
        deg = fh.degenerate or fa.degenerate
        n_deg += deg
        rows.append((p.alpha, p.h, fh.value, fa.value, min(fh.value, fa.value), deg))
    cols = ["alpha", "h", "F_h", "F_alpha", "F_min", "degenerate"]
    k = int(np.argmin([r[4] for r in rows]))
    meta = {"F_min_min": rows[k][4], "argmin": {"alpha": rows[k][0], "h": rows[k][1]},
            "degenerate_points": n_deg}
    return ExperimentResult([Curve("fidelity", cols, rows)], meta=meta)


def _fs_curve(params, h_values, opts):
    out, n_deg = [], 0
    for h in h_values:
        p = params.with_(h=float(h))
        chi = fidelity_susceptibility(p, opts.get("direction", "h"), float(opts["delta"]),
                                      bool(opts.get("richardson", False)), opts["lift"])
        n_deg += ground_state(p, opts["lift"]).any_degenerate
        out.append(chi)
    return np.array(out), n_deg


def run_fs_scan(cfg: ExperimentConfig) -> ExperimentResult:
    rows, n_deg = [], 0
    alphas = cfg.grid("alpha")
    alphas = [cfg.params.get("alpha", 1.0)] if alphas is None else alphas
    for a in alphas:
        base = cfg.model_params(alpha=float(a), h=0.0)
        h = cfg.grid("h")
        chi, nd = _fs_curve(base, h, cfg.options)
        n_deg += nd
        rows += [(float(a), x, c, c / base.n_cells) for x, c in zip(h, chi)]
    k = int(np.argmax([r[2] for r in rows]))
    meta = {"h_max": rows[k][1], "chi_F_max": rows[k][2], "degenerate_points": n_deg}
    cols = ["alpha", "h", "chi_F", "chi_F_per_Nprime"]
    return ExperimentResult([Curve("fs", cols, rows)], meta=meta)


def run_fs_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    opts = cfg.options
    sizes = [int(n) for n in opts["sizes"]]
    h = cfg.grid("h")
    if opts.get("synthetic_nu") is not None:
        raw = synthetic_fs_curves(float(opts["synthetic_nu"]), sizes, h,
                                  float(opts.get("noise", 0.0)), cfg.seed)
        curves_chi = {n: c for n, (_, c) in raw.items()}
        n_deg = 0
    else:
        curves_chi, n_deg = {}, 0
        for n in sizes:
            curves_chi[n], nd = _fs_curve(cfg.model_params(n_cells=n, h=0.0), h, opts)
            n_deg += nd
    curves, peak_rows = [], []
    for n in sizes:
        chi = curves_chi[n]
        curves.append(Curve(f"chi_F_N{n}", ["h", "chi_F", "chi_F_per_Nprime"],
                            [(x, c, c / n) for x, c in zip(h, chi)]))
        k = int(np.argmax(chi))
        peak_rows.append((n, h[k], chi[k], chi[k] / n))
    curves.append(Curve("peaks", ["N_prime", "h_max", "chi_F_max", "chi_F_max_per_Nprime"], peak_rows))
    h_max = float(peak_rows[-1][1])
    mu = power_law_fit([r[0] for r in peak_rows], [r[2] for r in peak_rows], cfg.fit.get("window"))
    collapse = fs_collapse({n: (h, curves_chi[n] / n) for n in sizes}, h_max,
                           tuple(opts["nu_range"]))
    curves.append(Curve("collapse", ["nu", "residual"],
                        list(zip(collapse.trial_nu, collapse.trial_residual))))
    fits = {"mu": mu.as_dict(), "nu": {"exponent": collapse.nu, "residual": collapse.residual,
                                       "h_max": h_max, "nu_range": list(opts["nu_range"])}}
    return ExperimentResult(curves, fits, {"degenerate_points": n_deg})


def _concurrence_at(params, pair, lift):
    return concurrence(two_site_density_matrix(ground_majorana(ground_state(params, lift)), pair))


def run_concurrence(cfg: ExperimentConfig) -> ExperimentResult:
    opts = cfg.options
    pair = tuple(int(i) for i in opts["pair"])
    da, lift = float(opts["d_alpha"]), opts["lift"]
    rows = []
    for a in opts["alphas"]:
        for h in cfg.grid("h"):
            p = cfg.model_params(alpha=float(a), h=float(h))
            c = _concurrence_at(p, pair, lift)
            cp = _concurrence_at(p.with_(alpha=p.alpha + da), pair, lift)
            cm = _concurrence_at(p.with_(alpha=p.alpha - da), pair, lift)
            rows.append((p.alpha, p.h, c, (cp - cm) / (2 * da)))
    cols = ["alpha", "h", "C", "dC_dalpha"]
    return ExperimentResult([Curve("concurrence", cols, rows)], meta={"pair": list(pair)})


def run_entropy(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.model_params()
    sizes = cfg.options.get("block_sizes") or list(range(1, p.n_sites // 2 + 1))
    gs = ground_state(p, cfg.options["lift"])
    curve = entropy_curve(gs, sizes)
    rows = list(zip(curve.block_sizes, curve.entropies))
    fit = central_charge_fit(curve, cfg.fit.get("window"))
    slope = saturation_slope(curve)
    thr = float(cfg.options["saturation_threshold"])
    fits = {"c": fit.as_dict(), "saturation_slope": slope, "saturated": slope < thr}
    return ExperimentResult([Curve("entropy", ["L", "S_L"], rows)], fits,
                            {"degenerate": gs.any_degenerate})


def run_correlator(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.model_params()
    r_max = int(cfg.options["r_max"])
    gs = ground_state(p, cfg.options["lift"])
    mcm = ground_majorana(gs)
    rs = np.arange(0, r_max + 1)
    xx = np.array([string_correlator_xx(mcm, int(r)) for r in rs])
    bond = np.array([majorana_bond_correlator(mcm, int(r)) for r in rs])
    rows = list(zip(rs, xx, bond))
    m = rs > 0
    fit = power_law_fit(rs[m], np.abs(xx[m]), cfg.fit.get("window"))
    diag = power_law_fit(rs[m], np.abs(bond[m]), cfg.fit.get("window"))
    fits = {"eta": {**fit.as_dict(), "eta": -fit.exponent},
            "majorana_bond": {**diag.as_dict(), "eta": -diag.exponent}}
    return ExperimentResult([Curve("correlator", ["r", "corr_xx", "majorana_bond"], rows)], fits,
                            {"degenerate": gs.any_degenerate})


def _log_distances(window, count):
    lo, hi = window
    return np.logspace(math.log10(lo), math.log10(hi), int(count))


def _two_sided(center, d):
    return np.concatenate([center - d[::-1], [center], center + d])


def run_magnetization(cfg: ExperimentConfig) -> ExperimentResult:
    lift = cfg.options["lift"]
    base = cfg.model_params(h=0.0)
    h = cfg.grid("h")
    mz = [magnetization(ground_state(base.with_(h=float(x)), lift)) for x in h]
    chi = susceptibility(base, h, lift) if h.size >= 3 else np.full(h.size, NAN)
    curves = [Curve("magnetization", ["h", "sigma_z", "chi"], list(zip(h, mz, chi)))]
    window = cfg.fit["window"]
    hs = _two_sided(0.0, _log_distances(window, cfg.options["fit_points"]))
    chis = susceptibility_at(base, hs, lift=lift)
    fit = susceptibility_exponent(hs, chis, 0.0, window)
    dev = np.abs(chis - chis[hs == 0.0][0])
    curves.append(Curve("chi_scaling", ["h", "chi", "abs_dchi"], list(zip(hs, chis, dev))))
    return ExperimentResult(curves, {"gamma": fit.as_dict()})


def run_ising_check(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    for pt in _points(cfg):
        p = _point_params(cfg, pt)
        e_abc = ising_ground_energy(p)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ValidityWarning)
            e_pbc = ising_ground_energy(p.with_(bc=Boundary.PBC))
        valid = not caught
        ed_e = ed_o = NAN
        if _oracle_ok(cfg, p):
            ed_e = ed_ground_state(p, "even", "ising").energy
            ed_o = ed_ground_state(p, "odd", "ising").energy
        rows.append((p.h, e_abc, ed_e, e_pbc, ed_o, valid))
    cols = ["h", "E_ABC", "E_ED_even", "E_PBC", "E_ED_odd", "pbc_formula_valid"]
    curves = [Curve("ising_energy", cols, rows)]

    window = cfg.fit["window"]
    d = _log_distances(window, cfg.options["fit_points"])
    n = int(cfg.options["fit_cells"])
    compass = cfg.model_params(n_cells=n, alpha=1.0, h=0.0)
    hs = _two_sided(0.0, d)
    chi_c = susceptibility_at(compass, hs, lift=cfg.options["lift"])
    ising = cfg.model_params(n_cells=n, h=0.0)
    h_c = 2.0 * ising.J
    hi = _two_sided(h_c, d)
    chi_i = ising_susceptibility_at(ising, hi)
    fc = susceptibility_exponent(hs, chi_c, 0.0, window)
    fi = susceptibility_exponent(hi, chi_i, h_c, window)
    curves.append(Curve("ising_chi_scaling", ["h", "chi"], list(zip(hi, chi_i))))
    tol = float(cfg.fit["tolerance"])
    fits = {"compass_gamma": fc.as_dict(), "ising_gamma": fi.as_dict(),
            "slope_difference": abs(fc.exponent - fi.exponent),
            "agree": abs(fc.exponent - fi.exponent) <= tol}
    worst = max((abs(r[1] - r[2]) for r in rows if np.isfinite(r[2])), default=NAN)
    return ExperimentResult(curves, fits, {"max_abs_diff_abc": worst})


def run_oracle_validate(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.model_params()
    if p.bc is not Boundary.ABC:
        raise ConfigError("oracle-validate compares the ABC solver against the even sector")
    lift = cfg.options["lift"]
    pair = tuple(int(i) for i in cfg.options["pair"])
    L = int(cfg.options["block"])
    gs = ground_state(p, lift)
    mcm = ground_majorana(gs)
    ed = ed_ground_state(p, "even")
    rows = [("energy_even", gs.energy, ed.energy)]
    if p.is_compass:
        pbc = ground_state(p.with_(bc=Boundary.PBC)).energy
        rows.append(("energy_odd", pbc, ed_ground_state(p, "odd").energy))
    rows.append((f"entropy_L{L}", block_entropy(mcm, L), ed_observable(ed, "block-entropy", L=L)))
    rho = two_site_density_matrix(mcm, pair).rho
    rho_ed = ed_observable(ed, "two-site-rdm", sites=pair)
    rows.append(("rdm_max_entry_diff", 0.0, float(np.abs(rho - rho_ed).max())))
    rows.append(("concurrence", concurrence(rho), concurrence(rho_ed)))
    for kind in ("X", "Y", "Z"):
        ops = {pair[0]: kind, pair[1]: kind}
        rows.append((f"corr_{kind}{kind}", pauli_expectation(mcm, ops),
                     ed_observable(ed, "correlator", ops=ops)))
    r = min(1, p.n_cells // 2)
    far = 2 * r + 2
    rows.append((f"string_xx_r{r}", string_correlator_xx(mcm, r),
                 ed_observable(ed, "correlator", ops={1: "X", far: "X"})))
    rows.append(("magnetization", magnetization(gs), ed_observable(ed, "magnetization")))
    shifted = p.with_(alpha=p.alpha + 1e-4)
    rows.append(("fidelity_alpha", fidelity(p, "alpha", 1e-4, lift).value,
                 ed_observable(ed, "fidelity-overlap", other=ed_ground_state(shifted, "even"))))
    tol = float(cfg.fit["tolerance"])
    out = [(name, a, b, abs(a - b)) for name, a, b in rows]
    worst = max(r[3] for r in out)
    curve = Curve("oracle", ["quantity", "solver", "oracle", "abs_diff"], out)
    return ExperimentResult([curve], meta={"max_abs_diff": worst, "passed": worst <= tol,
                                           "degenerate": gs.any_degenerate})


RUNNERS = {
    "gs-energy": run_gs_energy,
    "spectrum": run_spectrum,
    "gap": run_gap,
    "fidelity-map": run_fidelity_map,
    "fs-scan": run_fs_scan,
    "fs-scaling": run_fs_scaling,
    "concurrence": run_concurrence,
    "entropy": run_entropy,
    "correlator": run_correlator,
    "magnetization": run_magnetization,
    "oracle-validate": run_oracle_validate,
    "ising-check": run_ising_check,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)

