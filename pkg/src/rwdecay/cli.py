"""
Command-line driver.

    rwdecay [--config FILE] [--out DIR] [--threads N] <subcommand>

Exit codes: 0 success (a reported blow-up included), 1 infeasible potential
family, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import ComplianceTracker, convergence_order, fit_power_law, trapping_halftime
from .config import ConfigError, RunConfig, load_config
from .evolve import NO_SOURCE, NonFiniteFieldError, Trajectory, evolve, gaussian_profile
from .functionals import CSV_COLUMNS, morawetz_energy, pointwise_target, theorem_potential_weight
from .geometry import SchwarzschildParams, TortoiseGrid, build_grid, photon_sphere_tortoise
from .mms import manufactured_error
from .potential import (
    ModeSpec,
    PotentialTable,
    critical_radius,
    critical_tortoise,
    potential_table,
    potential_value,
    search_constants,
    second_derivative_at_critical,
    synthetic_table,
)

log = logging.getLogger("rwdecay")

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2
SUBCOMMANDS = ("verify-potential", "critical-curve", "evolve-linear", "evolve-semilinear", "convergence",
               "decay-report")


class UsageError(Exception):
    pass


# -- output helpers ---------------------------------------------------------

def fmt(v) -> str:
    return "%.15g" % v


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.floating):
        return _clean(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.zeros((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}


def mode_tag(mode: ModeSpec) -> str:
    return f"l{mode.l}_m{mode.m}"


# -- verify-potential / critical-curve --------------------------------------

def _verification_family(cfg: RunConfig, grid: TortoiseGrid) -> list[PotentialTable]:
    family = cfg.verification.family
    if family == "synthetic-quadratic":
        return [synthetic_table(grid, lambda y: y * y, lambda y: 2.0 * y, label="y^2")]
    if family == "synthetic-negative":
        return [synthetic_table(grid, lambda y: -np.ones_like(y), np.zeros_like, label="-1")]
    return [potential_table(lam, grid) for lam in cfg.verification.lambdas()]


def cmd_verify_potential(cfg: RunConfig, out: Path) -> int:
    params = SchwarzschildParams(cfg.mass)
    grid = build_grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n, params)
    family = _verification_family(cfg, grid)
    result = search_constants(family, grid, cfg.verification.C_grid, cfg.verification.b_grid)
    report = result.report
    payload = report.to_dict() if report is not None else {"pass": False, "constants": None, "failing": [],
                                                            "modes": []}
    payload["feasible"] = result.feasible
    write_json(out / "condition_report.json", payload)
    if result.feasible:
        print(f"feasible: C={result.C:g} b1={result.b1:g} b2={result.b2:g}")
        return EXIT_OK
    failing = report.failing() if report is not None else []
    name = failing[0] if failing else "(no usable interval)"
    print(f"infeasible: {name} fails", file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_critical_curve(cfg: RunConfig, out: Path) -> int:
    params = SchwarzschildParams(cfg.mass)
    rows = []
    for lam in sorted(cfg.verification.lambdas()):
        r = critical_radius(lam, params)
        rows.append((lam, r, critical_tortoise(lam, params), potential_value(lam, r, params),
                     second_derivative_at_critical(lam, params)))
    write_csv(out / "critical_curve.csv", ("lambda", "r_crit", "x0", "q_at_crit", "q2_at_crit"), rows)
    return EXIT_OK


# -- evolutions ---------------------------------------------------------------

@dataclass
class ModeRun:
    mode: ModeSpec
    table: PotentialTable
    traj: Trajectory
    compliance: float | None = None
    theorem_morawetz: list[float] | None = None


def _grid_for(cfg: RunConfig) -> TortoiseGrid:
    params = SchwarzschildParams(cfg.mass)
    grid = build_grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n, params)
    center = photon_sphere_tortoise(params)
    rad = cfg.analysis.window_radius
    if center - rad < grid.x_min or center + rad > grid.x_max:
        raise ConfigError("analysis.window_radius: local-energy window exceeds the grid")
    if cfg.analysis.probe is not None and not grid.x_min <= cfg.analysis.probe <= grid.x_max:
        raise ConfigError("analysis.probe: outside the grid")
    return grid


def _probe(cfg: RunConfig, grid: TortoiseGrid) -> float:
    return photon_sphere_tortoise(grid.params) if cfg.analysis.probe is None else cfg.analysis.probe


def _run_mode(cfg: RunConfig, grid: TortoiseGrid, mode: ModeSpec, semilinear: bool) -> ModeRun:
    prof = cfg.profile_for(mode)
    psi0, dpsi0 = gaussian_profile(grid, prof.center, prof.width, prof.amplitude, prof.direction)
    table = potential_table(mode.lam, grid)
    hook, tracker, theorem = None, None, None
    if semilinear:
        eps = abs(prof.amplitude)
        if eps > 0:
            tracker = ComplianceTracker(lambda t: pointwise_target(t, None, grid.params, eps, grid=grid),
                                        field=lambda s: s.psi / grid.r_of_x)
            hook = tracker
    else:
        weight = theorem_potential_weight(mode.lam, grid)
        theorem = []

        def hook(snap):
            theorem.append(morawetz_energy(snap, table, grid, q=weight)[0])
    traj = evolve(
        psi0, dpsi0, grid, table,
        t_final=cfg.t_final,
        courant=cfg.courant,
        source=cfg.source if cfg.source is not None else NO_SOURCE,
        semilinear=cfg.semilinear if semilinear else None,
        energy_every=cfg.outputs.energy_every,
        snapshot_every=cfg.outputs.snapshot_every,
        probes=(_probe(cfg, grid),),
        window_radius=cfg.analysis.window_radius,
        on_record=hook,
        label=f"mode l={mode.l} m={mode.m}",
    )
    return ModeRun(mode, table, traj, tracker.max_ratio if tracker is not None else None, theorem)


def _run_modes(cfg: RunConfig, grid: TortoiseGrid, threads: int, semilinear: bool) -> list[ModeRun]:
    modes = list(cfg.modes)
    if threads > 1 and len(modes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda m: _run_mode(cfg, grid, m, semilinear), modes))
    else:
        runs = [_run_mode(cfg, grid, m, semilinear) for m in modes]
    return sorted(runs, key=lambda r: (r.mode.l, r.mode.m))


def _energy_rows(traj: Trajectory):
    return [e.row() for e in traj.energies]


def _assembled_rows(runs: list[ModeRun]):
    """Energies summed over modes; max |psi| and envelope ratio take the largest mode value."""
    summed = {"e_basic", "e_morawetz", "mor_ubar_flux", "mor_u_flux", "mor_potential", "e_local",
              "trapping_integral"}
    n = min(len(r.traj.energies) for r in runs)
    rows = []
    for k in range(n):
        recs = [r.traj.energies[k] for r in runs]
        row = []
        for col in CSV_COLUMNS:
            vals = [getattr(e, col) for e in recs]
            if col == "t":
                row.append(vals[0])
            elif col in summed:
                row.append(math.fsum(vals))
            else:
                row.append(max(vals))
        rows.append(tuple(row))
    return rows


def _write_snapshots(out: Path, run: ModeRun, grid: TortoiseGrid):
    for k, snap in enumerate(run.traj.snapshots):
        rows = zip(grid.x, grid.r_of_x, snap.psi, snap.dpsi_dt)
        write_csv(out / "snapshots" / f"{mode_tag(run.mode)}_{k:05d}.csv", ("x", "r", "psi", "dpsi_dt"), rows)


def _safe_fit(t, v, window):
    try:
        return fit_power_law(t, v, window).to_dict()
    except ValueError as exc:
        return {"exponent": None, "residual": None, "error": str(exc)}


def _boundary_free_time(cfg: RunConfig, mode: ModeSpec) -> float:
    """Last time before the initial pulse (center +- 5 widths) can reach either boundary."""
    prof = cfg.profile_for(mode)
    reach = 5.0 * prof.width
    return max(0.0, min(prof.center - reach - cfg.grid.x_min, cfg.grid.x_max - prof.center - reach))


def _growth_ratio(t, series, t_final) -> float | None:
    """series(t_final) / max of series over t <= t_final / 2."""
    early = series[t <= t_final / 2.0]
    if early.size == 0 or not np.max(early) > 0:
        return None
    return float(series[-1] / np.max(early))


def _mode_summary(cfg: RunConfig, run: ModeRun) -> dict:
    traj = run.traj
    t, e_local = traj.series("e_local")
    _, e_mor = traj.series("e_morawetz")
    t_free = _boundary_free_time(cfg, run.mode)
    d = traj.discrete_energies
    td = t[: len(d)]
    sel = td <= t_free
    drift = float(np.max(np.abs(d[sel] - d[0])) / abs(d[0])) if np.any(sel) and d[0] != 0 else None
    _, e_basic = traj.series("e_basic")
    free = t <= t_free
    basic_drift = float(np.max(np.abs(e_basic[free] - e_basic[0])) / e_basic[0]) if e_basic[0] > 0 else None
    mor_ratio = _growth_ratio(t, e_mor, cfg.t_final)
    return {
        "l": run.mode.l,
        "m": run.mode.m,
        "lambda": run.table.lam,
        "status": traj.status,
        "steps": traj.steps,
        "dt": traj.dt,
        "fit": _safe_fit(t, e_local, cfg.analysis.fit_window),
        "halftimes": {fmt(cfg.analysis.drop_factor): trapping_halftime(t, e_local, cfg.analysis.drop_factor)},
        "morawetz_ratio": mor_ratio,
        "discrete_energy_drift": drift,
        "basic_energy_drift": basic_drift,
        "boundary_free_time": t_free,
    }


def _check_nonempty_modes(cfg: RunConfig):
    if not cfg.modes:
        raise ConfigError("modes: at least one mode is required")


def cmd_evolve_linear(cfg: RunConfig, out: Path, threads: int) -> int:
    _check_nonempty_modes(cfg)
    if cfg.semilinear is not None:
        raise ConfigError("semilinear: not allowed for evolve-linear")
    grid = _grid_for(cfg)
    runs = _run_modes(cfg, grid, threads, semilinear=False)
    for run in runs:
        write_csv(out / f"energy_{mode_tag(run.mode)}.csv", CSV_COLUMNS, _energy_rows(run.traj))
        _write_snapshots(out, run, grid)
    total = _assembled_rows(runs)
    write_csv(out / "energy_total.csv", CSV_COLUMNS, total)
    t = np.array([r[0] for r in total])
    # potential term weighted by f (lam^2/r^2 + M/r^3) instead of Q, summed over modes
    theorem = np.array([math.fsum(vals) for vals in zip(*(r.theorem_morawetz for r in runs))])
    write_csv(out / "morawetz_total.csv", ("t", "e_morawetz", "e_morawetz_3d_weight"),
              zip(t, [r[CSV_COLUMNS.index("e_morawetz")] for r in total], theorem))
    e_local = np.array([r[CSV_COLUMNS.index("e_local")] for r in total])
    report = {
        "experiment": "evolve-linear",
        "modes": [_mode_summary(cfg, r) for r in runs],
        "fit": _safe_fit(t, e_local, cfg.analysis.fit_window),
        "halftimes": {fmt(cfg.analysis.drop_factor): trapping_halftime(t, e_local, cfg.analysis.drop_factor)},
        "morawetz_3d_weight_ratio": _growth_ratio(t, theorem, cfg.t_final),
    }
    write_json(out / "decay_report.json", report)
    return EXIT_OK


def cmd_evolve_semilinear(cfg: RunConfig, out: Path, threads: int) -> int:
    if cfg.semilinear is None:
        raise ConfigError("semilinear: block required for evolve-semilinear")
    if [(m.l, m.m) for m in cfg.modes] != [(0, 0)]:
        raise ConfigError("modes: evolve-semilinear takes the single mode l=0")
    if cfg.source is not None:
        raise ConfigError("source: not allowed for evolve-semilinear")
    grid = _grid_for(cfg)
    run = _run_modes(cfg, grid, threads, semilinear=True)[0]
    write_csv(out / f"energy_{mode_tag(run.mode)}.csv", CSV_COLUMNS, _energy_rows(run.traj))
    _write_snapshots(out, run, grid)
    probe = _probe(cfg, grid)
    phi = np.abs(run.traj.probes[probe]) / grid.r_of_x[grid.index_of(probe)]
    report = {
        "experiment": "evolve-semilinear",
        "status": run.traj.status,
        "blowup_time": run.traj.blowup_time,
        "p": cfg.semilinear.p,
        "kappa": cfg.semilinear.kappa,
        "probe": probe,
        "fit": _safe_fit(run.traj.probe_times, phi, cfg.analysis.fit_window),
        "compliance": {"max_ratio": run.compliance},
    }
    write_json(out / "semilinear_report.json", report)
    print(f"status: {run.traj.status}")
    return EXIT_OK


# -- convergence / decay-report ------------------------------------------------

def cmd_convergence(cfg: RunConfig, out: Path) -> int:
    c = cfg.convergence
    errors = [manufactured_error(n, c.lam, c.x_min, c.x_max, c.t_final, c.courant, cfg.mass) for n in c.resolutions]
    order = convergence_order(*errors)
    write_json(out / "convergence.json", {
        "fixture": c.fixture,
        "lambda": c.lam,
        "resolutions": list(c.resolutions),
        "errors": errors,
        "order": order.order,
        "pairwise": list(order.pairwise),
    })
    print(f"order: {order.order:.4f}")
    return EXIT_OK


def cmd_decay_report(cfg: RunConfig, out: Path, source: Path | None) -> int:
    path = source if source is not None else out / "energy_total.csv"
    if not path.exists():
        raise UsageError(f"energy CSV not found: {path}")
    data = read_csv(path)
    missing = [c for c in CSV_COLUMNS if c not in data]
    if missing:
        raise UsageError(f"{path}: missing column {missing[0]}")
    t, e_local = data["t"], data["e_local"]
    fit = _safe_fit(t, e_local, cfg.analysis.fit_window)
    report = {
        "experiment": path.stem,
        "fit": {"exponent": fit["exponent"], "residual": fit["residual"]},
        "compliance": {"max_ratio": float(np.max(data["envelope_ratio"])) if t.size else None},
        "halftimes": ({fmt(cfg.analysis.drop_factor): trapping_halftime(t, e_local, cfg.analysis.drop_factor)}
                      if t.size else {}),
    }
    write_json(out / "analysis.json", report)
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run configuration")
    parser.add_argument("--out", default=default, help="output directory (overrides outputs.dir)")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="modes evolved concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwdecay", description=__doc__.strip().splitlines()[0])
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _global_flags(p, suppress=True)
        if name == "decay-report":
            p.add_argument("--input", help="energy CSV to analyse (default: OUT/energy_total.csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        cfg = load_config(args.config)
        out = Path(args.out if args.out is not None else cfg.outputs.dir)
        cmd = args.command
        if cmd == "verify-potential":
            return cmd_verify_potential(cfg, out)
        if cmd == "critical-curve":
            return cmd_critical_curve(cfg, out)
        if cmd == "evolve-linear":
            return cmd_evolve_linear(cfg, out, args.threads)
        if cmd == "evolve-semilinear":
            return cmd_evolve_semilinear(cfg, out, args.threads)
        if cmd == "convergence":
            return cmd_convergence(cfg, out)
        return cmd_decay_report(cfg, out, Path(args.input) if args.input else None)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
