"""Experiment pipelines behind the CLI: run a resolved configuration and
emit CSV/SVG artifacts plus a JSON manifest that suffices to re-run it."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (
    ErrorSeries,
    ehrenfest_window,
    estimate_convergence_order,
    fit_exponential,
    fit_loglog_slope,
    linear_regression_r2,
    relative_h1_error,
    relative_h1_distance,
)
from .artifacts import (
    write_binary_snapshot,
    write_csv,
    write_error_series_csv,
    write_manifest,
    write_snapshot_csv,
    write_snapshot_manifest,
    write_trajectory_csv,
)
from .config import ExperimentConfig, validate
from .effective import HamiltonianContext, integrate_effective
from .errors import ConfigError, WindowNotReached
from .grid import Grid, SpectralField, h1_norm
from .mkdv import (
    MkdvContext,
    MkdvSolitonParams,
    integrate_mkdv_effective,
    mkdv_hamiltonian,
    mkdv_mass,
    sample_mkdv_on_grid,
    solve_mkdv,
)
from .pde import gp_energy, mass, solve_pde
from .potential import Bin, Num, PotentialExpr, Var, _substitute, parse_expression, rescaled_potential
from .solitons import SolitonParams, choose_grid, rescale_soliton_params, sample_on_grid
from .svg import LinePlot


@dataclass
class RunArtifacts:
    out_dir: Path
    manifest_path: Path
    manifest: dict
    csv_paths: list = field(default_factory=list)
    svg_paths: list = field(default_factory=list)


def compose_slow(w: PotentialExpr, h: float) -> PotentialExpr:
    """V(x) = W(h x) as an expression."""
    if h == 1.0:
        return w
    ast = _substitute(w.ast, Bin("*", Num(h), Var()))
    return PotentialExpr(ast, f"({w.source}) at h={h!r}")


def _nls_params(cfg: ExperimentConfig) -> SolitonParams:
    return SolitonParams(cfg.a, cfg.v, cfg.theta, cfg.mu)


def _mkdv_params(cfg: ExperimentConfig) -> MkdvSolitonParams:
    phases = cfg.phases if cfg.phases else None
    return MkdvSolitonParams(cfg.a, cfg.c, phases)


def _nls_grid(cfg: ExperimentConfig, p: SolitonParams) -> Grid:
    return Grid(cfg.grid_n) if cfg.grid_n else choose_grid(p)


def mkdv_choose_grid(p: MkdvSolitonParams, base: int = 2048, max_n: int = 1 << 17) -> Grid:
    need = int(np.ceil(24.0 * float(p.c.max()) * 2.0 * 8.0 / 7.0))
    n = base
    while n < need and n < max_n:
        n *= 2
    return Grid(min(n, max_n))


def _sample_alignment(cfg: ExperimentConfig, t_final: float):
    """Common sampling cadence for the PDE/ODE comparison."""
    dt = cfg.dt
    dt_ode = cfg.dt_ode if cfg.dt_ode > 0 else dt
    sample_dt = cfg.stride * dt
    ode_stride = max(1, int(round(sample_dt / dt_ode)))
    dt_ode = sample_dt / ode_stride
    return dt, dt_ode, ode_stride, sample_dt


def _traj_lookup(times: np.ndarray):
    times = np.asarray(times)

    def lookup(t: float) -> int:
        return int(np.argmin(np.abs(times - t)))

    return lookup


# --- NLS compare -------------------------------------------------------------


def _nls_compare_core(cfg: ExperimentConfig, t_final: float, expr: PotentialExpr | None,
                      p0: SolitonParams, grid: Grid, collect_fields: bool = False):
    """Run reduced + full dynamics and build the relative H1 error series."""
    ctx = HamiltonianContext(expr, grid, h=cfg.h, exp_cap=cfg.exp_cap)
    u0 = sample_on_grid(p0, grid, cfg.exp_cap)
    norm0 = h1_norm(u0)
    dt, dt_ode, ode_stride, sample_dt = _sample_alignment(cfg, t_final)

    traj = integrate_effective(p0, ctx, t_final, dt_ode, stride=ode_stride)
    lookup = _traj_lookup(traj.times)

    err_t, err_v = [], []

    def cb(step, t, fld):
        i = lookup(t)
        err_t.append(t)
        err_v.append(relative_h1_error(fld, traj.params_at(i), grid, norm0))

    res = solve_pde(
        u0,
        ctx.values,
        t_final,
        dt,
        scheme=cfg.scheme,
        stride=cfg.snapshot_stride,
        callback=cb,
        callback_stride=cfg.stride,
        dealias=cfg.dealias,
    )
    series = ErrorSeries(
        np.asarray(err_t),
        np.asarray(err_v),
        meta={
            "h": cfg.h,
            "N": p0.n,
            "potential": cfg.potential,
            "scheme": cfg.scheme,
            "dt": dt,
            "dt_ode": dt_ode,
            "grid_n": grid.n,
        },
    )
    cons = _conservation(res, ctx.values)
    return {
        "series": series,
        "traj": traj,
        "result": res,
        "ctx": ctx,
        "norm0": norm0,
        "conservation": cons,
    }


def _conservation(res, potential_values) -> dict:
    masses, energies = [], []
    for vals in res.fields:
        f = SpectralField.from_values(res.grid, vals)
        masses.append(mass(f))
        energies.append(gp_energy(f, potential_values))
    m0, e0 = masses[0], energies[0]
    return {
        "mass_drift": float(max(abs(m - m0) for m in masses) / abs(m0)),
        "energy_drift": float(max(abs(e - e0) for e in energies) / max(abs(e0), 1e-30)),
    }


def _emit_compare(outdir: Path, data: dict, cfg: ExperimentConfig, art: RunArtifacts):
    series = data["series"]
    res = data["result"]
    traj = data["traj"]
    grid = res.grid
    art.csv_paths.append(write_error_series_csv(outdir / "error_series.csv", series))
    art.csv_paths.append(write_trajectory_csv(outdir / "trajectory.csv", traj, data["ctx"]))
    art.csv_paths.append(
        write_snapshot_csv(outdir / "final_field.csv", grid.x, res.fields[-1])
    )
    art.csv_paths.append(write_snapshot_manifest(outdir / "snapshots.csv", res.times))
    write_binary_snapshot(
        outdir / "final_field.snap",
        grid.n,
        res.times[-1],
        cfg.h,
        cfg.potential,
        res.fields[-1],
    )

    plot = LinePlot(xlabel="t", ylabel="relative H1 error", logy=True,
                    title="full vs reduced dynamics")
    pos = series.err > 0
    if pos.any():
        plot.add(series.t[pos], series.err[pos], label="H1 error")
        art.svg_paths.append(plot.write(outdir / "error_vs_t.svg"))

    final = LinePlot(xlabel="x", ylabel="|u|", title="final-time profiles")
    final.add(grid.x, np.abs(res.fields[-1]), label="PDE")
    p_final = traj.params_at(len(traj.times) - 1)
    final.add(grid.x, np.abs(sample_on_grid(p_final, grid).values),
              label="reduced dynamics", dashed=True)
    art.svg_paths.append(final.write(outdir / "final_compare.svg"))


def _refinement_check(cfg: ExperimentConfig, data: dict, t_final: float) -> dict:
    """Halve both steps and report self-errors against the base run."""
    sub = ExperimentConfig(**cfg.to_dict())
    sub.dt = cfg.dt / 2.0
    sub.dt_ode = (cfg.dt_ode if cfg.dt_ode > 0 else cfg.dt) / 2.0
    sub.stride = cfg.stride * 2
    grid = data["result"].grid
    expr = data["ctx"].potential
    p0 = _nls_params(cfg)
    fine = _nls_compare_core(sub, t_final, expr, p0, grid)
    norm0 = data["norm0"]
    pde_self = relative_h1_distance(
        data["result"].final(), fine["result"].final(), norm0
    )
    i_base = len(data["traj"].times) - 1
    i_fine = len(fine["traj"].times) - 1
    ode_self = relative_h1_distance(
        sample_on_grid(data["traj"].params_at(i_base), grid),
        sample_on_grid(fine["traj"].params_at(i_fine), grid),
        norm0,
    )
    compare_err = float(data["series"].err[-1])
    return {
        "pde_self_error": float(pde_self),
        "ode_self_error": float(ode_self),
        "compare_error_final": compare_err,
        "resolved": bool(max(pde_self, ode_self) < 0.1 * max(compare_err, 1e-14)),
    }


# --- pipelines ---------------------------------------------------------------


def _pipeline_compare(cfg, outdir, art):
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    data = _nls_compare_core(cfg, cfg.t_final, expr, p0, grid)
    _emit_compare(outdir, data, cfg, art)
    results = {
        "final_error": float(data["series"].err[-1]),
        "max_error": float(data["series"].err.max()),
        "conservation": data["conservation"],
        "grid_n": grid.n,
        "seconds_per_step": data["result"].seconds_per_step,
    }
    if cfg.refine:
        results["refinement"] = _refinement_check(cfg, data, cfg.t_final)
    return results


def _pipeline_pde_only(cfg, outdir, art):
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    ctx = HamiltonianContext(expr, grid, h=cfg.h, exp_cap=cfg.exp_cap)
    u0 = sample_on_grid(p0, grid, cfg.exp_cap)
    res = solve_pde(u0, ctx.values, cfg.t_final, cfg.dt, scheme=cfg.scheme,
                    stride=cfg.snapshot_stride, dealias=cfg.dealias)
    art.csv_paths.append(write_snapshot_manifest(outdir / "snapshots.csv", res.times))
    for i, t in enumerate(res.times):
        art.csv_paths.append(
            write_snapshot_csv(outdir / f"snapshot_{i:04d}.csv", grid.x, res.fields[i])
        )
        write_binary_snapshot(outdir / f"snapshot_{i:04d}.snap", grid.n, t, cfg.h,
                              cfg.potential, res.fields[i])
    return {
        "conservation": _conservation(res, ctx.values),
        "grid_n": grid.n,
        "seconds_per_step": res.seconds_per_step,
    }


def _pipeline_effective_only(cfg, outdir, art):
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    ctx = HamiltonianContext(expr, grid, h=cfg.h, exp_cap=cfg.exp_cap)
    dt_ode = cfg.dt_ode if cfg.dt_ode > 0 else cfg.dt
    traj = integrate_effective(p0, ctx, cfg.t_final, dt_ode, stride=cfg.stride)
    art.csv_paths.append(write_trajectory_csv(outdir / "trajectory.csv", traj, ctx))
    plot = LinePlot(xlabel="t", ylabel="a_j(t)", title="soliton positions")
    for j in range(p0.n):
        plot.add(traj.times, traj.component("a", j), label=f"soliton {j+1}")
    art.svg_paths.append(plot.write(outdir / "positions.svg"))
    from .effective import restricted_hamiltonian

    h_start = restricted_hamiltonian(traj.params_at(0), ctx)
    h_end = restricted_hamiltonian(traj.params_at(len(traj.times) - 1), ctx)
    return {
        "energy_drift": abs(h_end - h_start) / max(abs(h_start), 1e-30),
        "grid_n": grid.n,
    }


def _sweep_point_nls(cfg_dict: dict, h: float, outdir: str) -> dict:
    cfg = ExperimentConfig(**cfg_dict)
    cfg.h = h
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    data = _nls_compare_core(cfg, cfg.t_final, expr, p0, grid)
    sub = Path(outdir) / f"h_{h:g}"
    sub.mkdir(parents=True, exist_ok=True)
    write_error_series_csv(sub / "error_series.csv", data["series"])
    err = (
        float(data["series"].err[-1])
        if cfg.sweep_metric == "final"
        else float(data["series"].err.max())
    )
    return {
        "h": h,
        "err": err,
        "grid_n": grid.n,
        "conservation": data["conservation"],
        "series_t": data["series"].t.tolist(),
        "series_err": data["series"].err.tolist(),
    }


def _run_sweep_points(worker, cfg, args_list):
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(worker, *zip(*args_list)))
    return [worker(*args) for args in args_list]


def _pipeline_h_sweep(cfg, outdir, art):
    args = [(cfg.to_dict(), h, str(outdir)) for h in sorted(cfg.h_values, reverse=True)]
    points = _run_sweep_points(_sweep_point_nls, cfg, args)
    rows = [(p["h"], p["err"], p["grid_n"], cfg.dt) for p in points]
    art.csv_paths.append(write_csv(outdir / "sweep.csv", ["h", "err", "grid_n", "dt"], rows))
    fit = fit_loglog_slope([(p["h"], p["err"]) for p in points], cfg.fit_k)
    _loglog_plot(outdir / "sweep_loglog.svg",
                 [(p["h"], p["err"]) for p in points], fit, art,
                 xlabel="h", ylabel="relative H1 error")
    return {
        "points": [{"h": p["h"], "err": p["err"], "grid_n": p["grid_n"]} for p in points],
        "slope": fit.coefficients["slope"],
        "intercept": fit.coefficients["intercept"],
        "fit_window": fit.window,
    }


def _loglog_plot(path, points, fit, art, xlabel="h", ylabel="err"):
    pts = sorted(points)
    hs = np.array([p[0] for p in pts])
    es = np.array([p[1] for p in pts])
    plot = LinePlot(xlabel=xlabel, ylabel=ylabel, logx=True, logy=True,
                    title="log-log sweep with fitted line")
    plot.add(hs, es, label="measured")
    slope = fit.coefficients["slope"]
    intercept = fit.coefficients["intercept"]
    fit_e = np.exp(intercept + slope * np.log(hs))
    plot.add(hs, fit_e, label=f"fit slope {slope:.3f}", dashed=True)
    art.svg_paths.append(plot.write(path))


def _time_to_reach(p0, ctx, dt_ode, stop, t_seg, max_segments=80):
    """Integrate the reduced dynamics until the position crosses `stop`."""
    t_accum = 0.0
    p = p0
    for _ in range(max_segments):
        steps = max(10, int(round(t_seg / dt_ode)))
        traj = integrate_effective(p, ctx, steps * dt_ode, dt_ode,
                                   stride=max(1, steps // 20))
        pos = traj.component("a", 0)
        if pos.max() >= stop:
            i = int(np.argmax(pos >= stop))
            return t_accum + float(traj.times[i])
        t_accum += float(traj.times[-1])
        p = traj.params_at(len(traj.times) - 1)
    raise WindowNotReached(f"position never reached {stop:g} (ran to t={t_accum:g})")


def _sweep_point_ehrenfest(cfg_dict: dict, h: float, outdir: str) -> dict:
    cfg = ExperimentConfig(**cfg_dict)
    w_expr = parse_expression(cfg.potential)
    p0 = _nls_params(cfg)

    # width rescaling with alpha = h: solve on (-pi, pi) in tilde variables
    p0_t = rescale_soliton_params(p0, h)
    v_expr = rescaled_potential(compose_slow(w_expr, h), h)
    grid = Grid(cfg.grid_n) if cfg.grid_n else choose_grid(p0_t)

    sub_cfg = ExperimentConfig(**cfg_dict)
    sub_cfg.h = 1.0  # tilde problem is already fully scaled
    sub_cfg.dt = cfg.dt * h * h
    sub_cfg.dt_ode = (cfg.dt_ode if cfg.dt_ode > 0 else cfg.dt) * h * h

    # horizon: reduced dynamics until the (tilde) position passes the window
    # top, plus a small margin; the instability rate sets the probe segment
    ctx = HamiltonianContext(v_expr, grid, h=1.0, exp_cap=cfg.exp_cap)
    eps = 1e-3
    w2 = abs(float(w_expr(eps) - 2.0 * w_expr(0.0) + w_expr(-eps))) / eps**2
    rate = np.sqrt(max(w2, 1.0)) / h
    t_cross = _time_to_reach(p0_t, ctx, sub_cfg.dt_ode, cfg.window_hi + 0.08,
                             t_seg=1.0 / rate)
    sample_dt = cfg.stride * sub_cfg.dt
    t_end = float(np.ceil(t_cross / sample_dt) * sample_dt)

    data = _nls_compare_core(sub_cfg, t_end, v_expr, p0_t, grid)
    traj = data["traj"]
    a_orig = traj.component("a", 0) / h
    t_traj_orig = traj.times / (h * h)
    window = ehrenfest_window(t_traj_orig, a_orig, h,
                              lo=cfg.window_lo, hi=cfg.window_hi)

    # back to original time for the fit
    t_orig = data["series"].t / (h * h)
    err = data["series"].err
    fit = fit_exponential((t_orig, err), window)

    sub = Path(outdir) / f"h_{h:g}"
    sub.mkdir(parents=True, exist_ok=True)
    series = ErrorSeries(t_orig, err, meta={"h": h, "N": p0.n,
                                            "potential": cfg.potential,
                                            "scheme": cfg.scheme,
                                            "dt": sub_cfg.dt,
                                            "grid_n": grid.n})
    write_error_series_csv(sub / "error_series.csv", series)
    return {
        "h": h,
        "B": fit.coefficients["B"],
        "A": fit.coefficients["A"],
        "C": fit.coefficients["C"],
        "residual": fit.residual,
        "window": list(fit.window),
        "grid_n": grid.n,
        "series_t": t_orig.tolist(),
        "series_err": err.tolist(),
        "conservation": data["conservation"],
    }


def _pipeline_ehrenfest(cfg, outdir, art):
    args = [(cfg.to_dict(), h, str(outdir)) for h in sorted(cfg.h_values, reverse=True)]
    points = _run_sweep_points(_sweep_point_ehrenfest, cfg, args)
    rows = [
        (p["h"], p["B"], p["A"], p["C"], p["residual"], p["window"][0], p["window"][1])
        for p in points
    ]
    art.csv_paths.append(
        write_csv(outdir / "growth_rates.csv",
                  ["h", "B", "A", "C", "residual", "t_lo", "t_hi"], rows)
    )
    hs = [p["h"] for p in points]
    bs = [p["B"] for p in points]
    slope, intercept, r2 = linear_regression_r2(hs, bs)

    curves = LinePlot(xlabel="t", ylabel="relative H1 error", logy=True,
                      title="error growth at the unstable equilibrium")
    for p in points:
        t = np.array(p["series_t"])
        e = np.array(p["series_err"])
        pos = e > 0
        curves.add(t[pos], e[pos], label=f"h = {p['h']:g}")
    art.svg_paths.append(curves.write(outdir / "error_growth.svg"))

    bplot = LinePlot(xlabel="h", ylabel="fitted B", title="growth rate vs h")
    order = np.argsort(hs)
    hs_s = np.array(hs)[order]
    bplot.add(hs_s, np.array(bs)[order], label="fitted B")
    bplot.add(hs_s, slope * hs_s + intercept, label=f"linear fit (R2 = {r2:.3f})",
              dashed=True)
    art.svg_paths.append(bplot.write(outdir / "b_vs_h.svg"))
    return {
        "points": [{k: p[k] for k in ("h", "B", "A", "C", "residual", "window", "grid_n")}
                   for p in points],
        "b_slope": slope,
        "b_intercept": intercept,
        "r2": r2,
    }


def _convergence_data(cfg, schemes):
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    ctx = HamiltonianContext(expr, grid, h=cfg.h, exp_cap=cfg.exp_cap)
    u0 = sample_on_grid(p0, grid, cfg.exp_cap)
    norm0 = h1_norm(u0)
    dts = sorted(cfg.dt_values, reverse=True)
    out = {}
    for scheme in schemes:
        ref = solve_pde(u0, ctx.values, cfg.t_final, min(dts) / 4.0,
                        scheme=scheme, stride=10**9)
        ref_final = ref.final()
        rows = []
        for dt in dts:
            res = solve_pde(u0, ctx.values, cfg.t_final, dt, scheme=scheme,
                            stride=10**9)
            err = relative_h1_distance(res.final(), ref_final, norm0)
            rows.append({"dt": dt, "err": float(err), "seconds": res.seconds,
                         "steps": res.steps})
        order = estimate_convergence_order([(r["dt"], r["err"]) for r in rows])
        out[scheme] = {"rows": rows, "order": float(order)}
    out["_meta"] = {"grid_n": grid.n, "norm0": norm0}
    return out, (u0, ctx, norm0, grid)


def _pipeline_convergence(cfg, outdir, art):
    data, _ = _convergence_data(cfg, ("etdrk4", "ark436"))
    rows = []
    for scheme in ("etdrk4", "ark436"):
        for r in data[scheme]["rows"]:
            rows.append((scheme, r["dt"], r["err"], r["seconds"], r["steps"]))
    art.csv_paths.append(
        write_csv(outdir / "convergence.csv",
                  ["scheme", "dt", "err", "seconds", "steps"], rows)
    )
    plot = LinePlot(xlabel="dt", ylabel="relative H1 self-error",
                    logx=True, logy=True, title="temporal convergence")
    for scheme in ("etdrk4", "ark436"):
        rs = data[scheme]["rows"]
        plot.add([r["dt"] for r in rs], [max(r["err"], 1e-300) for r in rs],
                 label=f"{scheme} (order {data[scheme]['order']:.2f})")
    art.svg_paths.append(plot.write(outdir / "convergence.svg"))
    return {s: {"order": data[s]["order"], "rows": data[s]["rows"]}
            for s in ("etdrk4", "ark436")}


def _pipeline_scheme_bench(cfg, outdir, art):
    results = _pipeline_convergence(cfg, outdir, art)
    bench = {}
    p0 = _nls_params(cfg)
    grid = _nls_grid(cfg, p0)
    expr = parse_expression(cfg.potential)
    ctx = HamiltonianContext(expr, grid, h=cfg.h, exp_cap=cfg.exp_cap)
    u0 = sample_on_grid(p0, grid, cfg.exp_cap)
    for scheme in ("etdrk4", "ark436"):
        rows = results[scheme]["rows"]
        ld = np.log([r["dt"] for r in rows])
        le = np.log([max(r["err"], 1e-300) for r in rows])
        slope, intercept = np.polyfit(ld, le, 1)
        dt_star = float(np.exp((np.log(cfg.target_accuracy) - intercept) / slope))
        dt_star = min(max(dt_star, min(r["dt"] for r in rows) / 4.0),
                      max(r["dt"] for r in rows))
        res = solve_pde(u0, ctx.values, cfg.t_final, dt_star, scheme=scheme,
                        stride=10**9)
        bench[scheme] = {"dt_star": dt_star, "seconds": res.seconds,
                         "steps": res.steps,
                         "seconds_per_step": res.seconds_per_step}
    ratio = bench["ark436"]["seconds"] / bench["etdrk4"]["seconds"]
    art.csv_paths.append(
        write_csv(outdir / "bench.csv",
                  ["scheme", "dt_star", "seconds", "steps"],
                  [(s, bench[s]["dt_star"], bench[s]["seconds"], bench[s]["steps"])
                   for s in ("etdrk4", "ark436")])
    )
    results["bench"] = bench
    results["wallclock_ratio_ark_over_etd"] = float(ratio)
    results["target_accuracy"] = cfg.target_accuracy
    return results


# --- mKdV pipelines ----------------------------------------------------------


def _mkdv_compare_core(cfg, t_final, b_expr, p0, grid):
    ctx = MkdvContext(b_expr, grid, h=cfg.h)
    u0 = sample_mkdv_on_grid(p0, grid)
    norm0 = h1_norm(u0)
    dt, dt_ode, ode_stride, sample_dt = _sample_alignment(cfg, t_final)
    traj = integrate_mkdv_effective(p0, ctx, t_final, dt_ode, stride=ode_stride)
    lookup = _traj_lookup(traj.times)
    err_t, err_v = [], []

    def cb(step, t, fld):
        i = lookup(t)
        ref = sample_mkdv_on_grid(traj.params_at(i), grid)
        err_t.append(t)
        err_v.append(relative_h1_distance(fld, ref, norm0))

    res = solve_mkdv(u0, ctx, t_final, dt, scheme=cfg.scheme,
                     stride=cfg.snapshot_stride, callback=cb,
                     callback_stride=cfg.stride)
    series = ErrorSeries(np.asarray(err_t), np.asarray(err_v),
                         meta={"h": cfg.h, "N": p0.n, "potential": cfg.potential,
                               "scheme": cfg.scheme, "dt": dt, "dt_ode": dt_ode,
                               "grid_n": grid.n})
    # static-b invariants: integral u dx and the Hamiltonian.  The momentum
    # functional integral u^2 dx is conserved only for constant b (for
    # varying b, d/dt integral u^2 = integral b' u^2 != 0); it is reported
    # for reference.
    masses, integrals, energies = [], [], []
    for vals in res.fields:
        f = SpectralField.from_values(grid, vals)
        masses.append(mkdv_mass(f, ctx))
        integrals.append(float(ctx.weight * vals.real.sum()))
        energies.append(mkdv_hamiltonian(f, ctx))
    scale_i = max(abs(integrals[0]), 1e-30)
    cons = {
        "mass_drift": float(max(abs(m - masses[0]) for m in masses) / abs(masses[0])),
        "integral_drift": float(max(abs(i - integrals[0]) for i in integrals) / scale_i),
        "energy_drift": float(
            max(abs(e - energies[0]) for e in energies) / max(abs(energies[0]), 1e-30)
        ),
    }
    return {"series": series, "traj": traj, "result": res, "ctx": ctx,
            "norm0": norm0, "conservation": cons}


def _pipeline_mkdv_compare(cfg, outdir, art):
    p0 = _mkdv_params(cfg)
    grid = Grid(cfg.grid_n) if cfg.grid_n else mkdv_choose_grid(p0)
    b_expr = parse_expression(cfg.potential)
    data = _mkdv_compare_core(cfg, cfg.t_final, b_expr, p0, grid)
    series = data["series"]
    res = data["result"]
    art.csv_paths.append(write_error_series_csv(outdir / "error_series.csv", series))
    art.csv_paths.append(
        write_snapshot_csv(outdir / "final_field.csv", grid.x, res.fields[-1])
    )
    art.csv_paths.append(write_snapshot_manifest(outdir / "snapshots.csv", res.times))
    write_binary_snapshot(outdir / "final_field.snap", grid.n, res.times[-1],
                          cfg.h, cfg.potential, res.fields[-1])
    traj = data["traj"]
    rows = [(traj.times[i], *traj.vectors[i]) for i in range(len(traj.times))]
    header = (["t"] + [f"a_{j+1}" for j in range(p0.n)]
              + [f"c_{j+1}" for j in range(p0.n)])
    art.csv_paths.append(write_csv(outdir / "trajectory.csv", header, rows))

    final = LinePlot(xlabel="x", ylabel="u", title="final-time profiles")
    final.add(grid.x, np.real(res.fields[-1]), label="PDE")
    p_final = traj.params_at(len(traj.times) - 1)
    final.add(grid.x, np.real(sample_mkdv_on_grid(p_final, grid).values),
              label="reduced dynamics", dashed=True)
    art.svg_paths.append(final.write(outdir / "final_compare.svg"))
    return {
        "final_error": float(series.err[-1]),
        "max_error": float(series.err.max()),
        "conservation": data["conservation"],
        "grid_n": grid.n,
    }


def _sweep_point_mkdv(cfg_dict: dict, h: float, outdir: str) -> dict:
    cfg = ExperimentConfig(**cfg_dict)
    b0_expr = parse_expression(cfg.potential)
    # tilde variables: x~ = h x, t~ = h^3 t, u~ = u/h, c~ = c/h,
    # b~(x~) = b0(x~)/h^2; solitons sit at offsets from the well at -pi/2
    c_t = np.asarray(cfg.c) / h
    a_t = -np.pi / 2.0 + np.asarray(cfg.a)
    phases = cfg.phases if cfg.phases else None
    p0 = MkdvSolitonParams(a_t, c_t, phases)
    grid = Grid(cfg.grid_n) if cfg.grid_n else mkdv_choose_grid(p0)
    b_expr = rescaled_potential(compose_slow(b0_expr, h), h)

    sub_cfg = ExperimentConfig(**cfg_dict)
    sub_cfg.h = 1.0
    sub_cfg.dt = cfg.dt * h**3
    sub_cfg.dt_ode = (cfg.dt_ode if cfg.dt_ode > 0 else cfg.dt) * h**3
    t_final_t = cfg.t_final * h**3
    data = _mkdv_compare_core(sub_cfg, t_final_t, b_expr, p0, grid)
    sub = Path(outdir) / f"h_{h:g}"
    sub.mkdir(parents=True, exist_ok=True)
    series = data["series"]
    series.meta["h"] = h
    write_error_series_csv(sub / "error_series.csv", series)
    err = (float(series.err[-1]) if cfg.sweep_metric == "final"
           else float(series.err.max()))
    return {"h": h, "err": err, "grid_n": grid.n,
            "conservation": data["conservation"]}


def _pipeline_mkdv_h_sweep(cfg, outdir, art):
    args = [(cfg.to_dict(), h, str(outdir)) for h in sorted(cfg.h_values, reverse=True)]
    points = _run_sweep_points(_sweep_point_mkdv, cfg, args)
    rows = [(p["h"], p["err"], p["grid_n"], cfg.dt) for p in points]
    art.csv_paths.append(write_csv(outdir / "sweep.csv",
                                   ["h", "err", "grid_n", "dt"], rows))
    fit = fit_loglog_slope([(p["h"], p["err"]) for p in points], cfg.fit_k)
    _loglog_plot(outdir / "sweep_loglog.svg",
                 [(p["h"], p["err"]) for p in points], fit, art)
    return {
        "points": [{"h": p["h"], "err": p["err"], "grid_n": p["grid_n"]}
                   for p in points],
        "slope": fit.coefficients["slope"],
        "intercept": fit.coefficients["intercept"],
        "fit_window": fit.window,
    }


_PIPELINES = {
    "compare": _pipeline_compare,
    "pde-only": _pipeline_pde_only,
    "effective-only": _pipeline_effective_only,
    "h-sweep": _pipeline_h_sweep,
    "ehrenfest": _pipeline_ehrenfest,
    "convergence": _pipeline_convergence,
    "scheme-bench": _pipeline_scheme_bench,
    "mkdv-compare": _pipeline_mkdv_compare,
    "mkdv-h-sweep": _pipeline_mkdv_h_sweep,
}


def run_experiment(cfg: ExperimentConfig) -> RunArtifacts:
    """Validate, run the requested pipeline, and write all artifacts."""
    import warnings as _warnings

    cfg = validate(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    art = RunArtifacts(out_dir=outdir, manifest_path=outdir / "manifest.json",
                       manifest={})
    t0 = time.perf_counter()
    caught = []
    with _warnings.catch_warnings(record=True) as wlist:
        _warnings.simplefilter("always")
        results = _PIPELINES[cfg.kind](cfg, outdir, art)
        caught = [str(w.message) for w in wlist]
    manifest = {
        "schema": "solitonlab/manifest/v1",
        "version": __version__,
        "kernel_backend": kernels.BACKEND_NAME,
        "config": cfg.to_dict(),
        "results": results,
        "warnings": sorted(set(caught)),
        "timings": {"wall_seconds": time.perf_counter() - t0},
        "artifacts": {
            "csv": sorted(str(p.relative_to(outdir)) for p in art.csv_paths),
            "svg": sorted(str(p.relative_to(outdir)) for p in art.svg_paths),
        },
    }
    art.manifest = manifest
    write_manifest(art.manifest_path, manifest)
    return art


def rerun_from_manifest(path) -> RunArtifacts:
    """Re-run an experiment from its manifest (bit-identical CSV output)."""
    import json

    manifest = json.loads(Path(path).read_text())
    cfg = ExperimentConfig(**manifest["config"])
    return run_experiment(cfg)
