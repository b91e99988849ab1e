"""Experiment orchestration: parameter ladders, job scheduling, CSV output.

Every output file carries the resolved-configuration hash in a comment
header and prints numbers at 17 significant digits, so identical
configurations reproduce byte-identical files.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import resonance as rs
from .classical import SectionConfig
from .config import config_hash, model_config
from .dvr import grid_from_model
from .eigensolver import KrylovParams, ShiftSpec, arnoldi_shift_invert
from .errors import BumpscatError, ConfigError
from .model import ModelConfig, ScalingAngle
from .operator import assemble
from .trapped_set import (
    MeshWindow,
    box_count_dimension,
    compute_islands,
    information_dimension,
)
from .validation_2bump import lattice_map

log = logging.getLogger(__name__)


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, columns, rows, cfg, extra_meta=None):
    """Write rows with a commented metadata header."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# config_hash={config_hash(cfg)}\n")
        for key, value in (extra_meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Read a CSV written by write_csv; returns (columns, rows of floats/strings)."""
    columns = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if columns is None:
                columns = parts
                continue
            converted = []
            for p in parts:
                try:
                    converted.append(float(p))
                except ValueError:
                    converted.append(p)
            rows.append(converted)
    return columns, rows


def section_config(cfg, R=None, E=None):
    cl = cfg["classical"]
    return SectionConfig(
        model=model_config(cfg, R=R),
        E=cl["E"] if E is None else float(E),
        R0=cl["R0"],
        rtol=cl["rtol"],
        atol=cl["atol"],
        crossing_tol=cl["crossing_tol"],
        time_budget_factor=cl["time_budget_factor"],
        escape_vmin=cl["escape_vmin"],
        drift_tol=cl["drift_tol"],
    )


def dimension_window(cfg):
    win = cfg["dimension"]["window"]
    return (tuple(win["theta"]), tuple(win["ptheta"]))


def dimension_cell(cfg, R, E, N0=None):
    """Dimension estimate for one (R, E); N0 may be a list to share the recursion."""
    dim = cfg["dimension"]
    theta_rng, ptheta_rng = dimension_window(cfg)
    scfg = section_config(cfg, R=R, E=E)
    base = MeshWindow(theta_rng, ptheta_rng, dim["N1"])
    islands, diagnostics = compute_islands(scfg, base, dim["N1"], dim["k0"])
    n0_list = [dim["N0"]] if N0 is None else list(np.atleast_1d(N0))
    estimates = []
    for n0 in n0_list:
        L0 = MeshWindow(theta_rng, ptheta_rng, int(n0))
        estimates.append(information_dimension(scfg, L0, islands))
    return (estimates if N0 is not None else estimates[0]), islands, diagnostics


def run_dimension(cfg, out_path=None):
    """Dimension sweep over (R, E); one CSV row per cell."""
    dim = cfg["dimension"]
    rows = []
    for R in dim["R_values"]:
        for E in dim["E_values"]:
            try:
                est, _, diag = dimension_cell(cfg, R, E)
            except BumpscatError as exc:
                log.error("dimension cell (R=%g, E=%g) failed: %s", R, E, exc)
                continue
            rows.append(
                (R, E, dim["N0"], dim["N1"], dim["k0"], est.entropy, est.D_section,
                 est.D_KE, est.exponent, diag.get("undecided", 0))
            )
    columns = ["R", "E", "N0", "N1", "k0", "entropy", "D_section", "D_KE",
               "exponent", "undecided_count"]
    if out_path is None:
        out_path = os.path.join(cfg["output_dir"], "dims.csv")
    write_csv(out_path, columns, rows, cfg)
    return out_path


def run_islands(cfg, k, out_path=None):
    """Surviving cell centers at level k, labeled, for plotting."""
    dim = cfg["dimension"]
    theta_rng, ptheta_rng = dimension_window(cfg)
    scfg = section_config(cfg)
    base = MeshWindow(theta_rng, ptheta_rng, dim["N1"])
    islands, _ = compute_islands(scfg, base, dim["N1"], int(k))
    rows = []
    for isl in islands:
        for cx, cy in isl.centers:
            rows.append((isl.label, float(cx), float(cy)))
    if out_path is None:
        out_path = os.path.join(cfg["output_dir"], "islands.csv")
    write_csv(out_path, ["label", "theta", "ptheta"], rows, cfg, {"k": int(k)})
    return out_path


def _solver_params(cfg, hbar):
    sol = cfg["quantum"]["solver"]
    nev = sol["nev"] or rs.default_nev(hbar, cfg["model"]["m"])
    return KrylovParams(
        nev=nev,
        subspace=sol["subspace"],
        max_restarts=sol["max_restarts"],
        ritz_tol=sol["ritz_tol"],
        inner_tol=sol["inner_tol"],
        inner_max_iter=sol["inner_max_iter"],
    )


def _seed_vector(cfg, hbar, R, alpha, n):
    rng = np.random.default_rng(
        [cfg["seed"], int(round(hbar * 1e9)), int(round(R * 1e6)), int(round(alpha * 1e9))]
    )
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def resonance_run(cfg, hbar, R, alpha):
    """One (hbar, R, alpha) eigenvalue solve."""
    q = cfg["quantum"]
    model = model_config(cfg, R=R)
    grid = grid_from_model(model, hbar, q["grid"]["E_center"], q["grid"]["V_min"],
                           q["grid"]["factor"])
    op = assemble(model, ScalingAngle(alpha), hbar, grid)
    params = _solver_params(cfg, hbar)
    shift = ShiftSpec(q["grid"]["E_center"] + 1j * q["solver"]["a"])
    result = arnoldi_shift_invert(op, shift, params,
                                  v0=_seed_vector(cfg, hbar, R, alpha, op.N))
    gate = 10.0 * max(params.ritz_tol, params.inner_tol) * abs(shift.lambda0)
    keep = result.residuals <= gate
    if not np.all(keep):
        log.info("dropping %d/%d pairs above the residual gate %.1e",
                 int((~keep).sum()), keep.size, gate)
    return rs.ResonanceRun(
        hbar=hbar,
        R=R,
        alpha=alpha,
        eigenvalues=result.eigenvalues[keep],
        residuals=result.residuals[keep],
        metadata={
            "partial": result.partial,
            "grid": (grid.Nx, grid.Ny),
            "nev": params.nev,
            **result.inner_stats,
        },
    )


def _alpha_values(cfg, hbar):
    q = cfg["quantum"]
    base = q["alpha"]["scale"] * math.atan(hbar / q["box"]["E0"])
    return rs.alpha_ladder(hbar, q["box"]["E0"], q["alpha"]["count"],
                           math.radians(q["alpha"]["step_deg"]), base=base)


def _run_job(args):
    cfg, hbar, R, alpha = args
    run = resonance_run(cfg, hbar, R, alpha)
    return (hbar, R, alpha, run.eigenvalues, run.residuals, run.metadata)


def run_resonances(cfg, hbar_values=None, R_values=None, out_path=None, jobs=1):
    """Eigenvalue ladder over (hbar, R, alpha); raw rows into res.csv."""
    q = cfg["quantum"]
    hbars = list(hbar_values) if hbar_values is not None else list(q["hbar_values"])
    Rs = list(R_values) if R_values is not None else [cfg["model"]["R"]]
    jobs_list = [(cfg, h, R, a) for R in Rs for h in hbars for a in _alpha_values(cfg, h)]
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_run_job, jobs_list):
                results.append(out)
    else:
        for job in jobs_list:
            try:
                results.append(_run_job(job))
            except BumpscatError as exc:
                log.error("resonance job (hbar=%g, R=%g, alpha=%g) failed: %s",
                          job[1], job[2], job[3], exc)
    rows = []
    for hbar, R, alpha, lam, res, _meta in results:
        for z, r in zip(lam, res):
            rows.append((hbar, R, alpha, z.real, z.imag, float(r)))
    if out_path is None:
        out_path = os.path.join(cfg["output_dir"], "res.csv")
    write_csv(out_path, ["hbar", "R", "alpha", "re", "im", "residual"], rows, cfg)
    return out_path


def count_from_rows(cfg, rows, E0=None, E1=None):
    """Group raw eigenvalue rows by (hbar, R), match across alpha, count in the box."""
    q = cfg["quantum"]
    E0 = q["box"]["E0"] if E0 is None else float(E0)
    E1 = q["box"]["E1"] if E1 is None else float(E1)
    groups = {}
    for hbar, R, alpha, re_, im_, _res in rows:
        groups.setdefault((hbar, R), {}).setdefault(alpha, []).append(complex(re_, im_))
    out = []
    for (hbar, R), by_alpha in sorted(groups.items()):
        runs = [
            rs.ResonanceRun(hbar=hbar, R=R, alpha=a, eigenvalues=np.array(v))
            for a, v in sorted(by_alpha.items())
        ]
        if len(runs) < 2:
            log.warning("skipping (hbar=%g, R=%g): need >= 2 alpha runs", hbar, R)
            continue
        tol = q["match_tol_factor"] * hbar
        rset = rs.match_alpha_invariant(runs, tol)
        box = rs.CountingBox(E0=E0, E1=E1, depth=hbar)
        out.append((hbar, R, rs.count_in_box(rset, box)))
    return out


def run_count(cfg, res_path, out_path=None, E0=None, E1=None):
    _, rows = read_csv(res_path)
    counts = count_from_rows(cfg, rows, E0=E0, E1=E1)
    if out_path is None:
        out_path = os.path.join(cfg["output_dir"], "counts.csv")
    write_csv(out_path, ["hbar", "R", "N_res"],
              [(h, R, int(n)) for h, R, n in counts], cfg)
    return out_path


def run_weyl_fit(cfg, counts_path, dims_path=None, out_path=None):
    """Per-R slope of log N_res vs -log hbar, compared with the dimension exponent."""
    _, rows = read_csv(counts_path)
    by_R = {}
    for hbar, R, n in rows:
        by_R.setdefault(R, []).append((hbar, int(n)))
    exponents = {}
    if dims_path and os.path.exists(dims_path):
        _, dim_rows = read_csv(dims_path)
        ec = cfg["quantum"]["grid"]["E_center"]
        for row in dim_rows:
            R, E, exponent = row[0], row[1], row[8]
            if abs(E - ec) < 1e-12:
                exponents[round(R, 10)] = exponent
    out_rows = []
    for R, counts in sorted(by_R.items()):
        try:
            fit = rs.weyl_slope(counts)
        except ValueError as exc:
            log.warning("no Weyl fit for R=%g: %s", R, exc)
            continue
        exponent = exponents.get(round(R, 10), float("nan"))
        rel = rs.compare_exponent(fit, exponent) if math.isfinite(exponent) else float("nan")
        out_rows.append((R, fit.slope, exponent, rel))
    if out_path is None:
        out_path = os.path.join(cfg["output_dir"], "fit.csv")
    write_csv(out_path, ["R", "slope", "exponent", "rel_error"], out_rows, cfg)
    return out_path


def run_weyl(cfg, jobs=1):
    """Full pipeline: eigenvalue ladders, invariance counts and the slope fit."""
    res_path = run_resonances(cfg, R_values=cfg["quantum"]["R_values"], jobs=jobs)
    counts_path = run_count(cfg, res_path)
    dims_path = os.path.join(cfg["output_dir"], "dims.csv")
    fit_path = run_weyl_fit(cfg, counts_path,
                            dims_path if os.path.exists(dims_path) else None)
    return res_path, counts_path, fit_path


def run_validate(cfg, hbar_values=None, jobs=1):
    """Two-bump lattice validation over the hbar ladder."""
    if cfg["model"]["m"] != 2:
        raise ConfigError(
            f"the lattice validation needs a two-bump model, got m={cfg['model']['m']}"
        )
    v = cfg["validate"]
    q = cfg["quantum"]
    hbars = list(hbar_values) if hbar_values is not None else list(v["hbar_values"])
    scfg = section_config(cfg)
    paths = []
    summary_rows = []
    for hbar in hbars:
        alphas = rs.alpha_ladder(hbar, q["box"]["E0"], q["alpha"]["count"],
                                 math.radians(q["alpha"]["step_deg"]),
                                 base=v["alpha_scale"] * math.atan(hbar / q["box"]["E0"]))
        runs = []
        for alpha in alphas:
            run = resonance_run(cfg, hbar, cfg["model"]["R"], alpha)
            runs.append(run)
        rset = rs.match_alpha_invariant(runs, q["match_tol_factor"] * hbar)
        gamma_max = v["gamma_max_factor"] * hbar
        lam = rset.resonances
        window = lam[
            (lam.real >= q["box"]["E0"]) & (lam.real <= q["box"]["E1"])
            & (lam.imag < 0) & (-lam.imag <= gamma_max)
        ]
        rows = []
        sups = []
        for z in window:
            img = lattice_map(z, hbar, scfg)
            rows.append((hbar, z.real, z.imag, img.F1, img.F2, img.m, img.n,
                         img.res1, img.res2))
            sups.append(max(abs(img.res1), abs(img.res2)))
        tag = f"{hbar:.6g}".replace(".", "p")
        path = os.path.join(cfg["output_dir"], f"lattice_{tag}.csv")
        write_csv(path, ["hbar", "re", "im", "F1", "F2", "m", "n", "res1", "res2"],
                  rows, cfg)
        paths.append(path)
        if sups:
            summary_rows.append((hbar, len(sups), float(np.median(sups)),
                                 float(np.max(sups))))
    summary = os.path.join(cfg["output_dir"], "lattice_summary.csv")
    write_csv(summary, ["hbar", "count", "median_sup", "max_sup"], summary_rows, cfg)
    return paths, summary
