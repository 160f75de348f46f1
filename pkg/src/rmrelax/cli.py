"""Command-line front end.

Each subcommand reads one declarative config, runs the corresponding
experiment, and writes CSV/JSON artifacts plus a manifest that lists
every emitted file with its checksum. Outputs are deterministic for a
fixed config and seed; reruns into the same directory are byte-identical
up to the recorded wall-clock time.
"""

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (apply_overrides, config_to_dict, from_dict, read_raw)
from .dynamics import default_contour, evolve
from .errors import CompareThresholdError, RelaxError
from .montecarlo import FiniteModel, ensemble_run
from .selfconsistent import (ModelParams, density_grid,
                             equilibrium_canonical, equilibrium_micro,
                             invert_density, solve_on_grid, spectral_density)
from .vanhove import VanHoveParams, relaxation

_SUBCOMMANDS = {
    "spectrum": "level-resolved spectral densities and transforms",
    "evolve": "limiting reduced dynamics on a time grid",
    "vanhove": "weak-coupling relaxation on a rescaled-time grid",
    "montecarlo": "finite-n ensemble mean and variance",
    "compare": "limit dynamics against the finite-n ensemble mean",
    "equilibrium": "window and Gibbs equilibrium states",
}

_ENTRY_NAMES = ("pp", "pm", "mp", "mm")


def _model(cfg):
    return ModelParams(cfg.measure, splitting=cfg.splitting,
                       coupling=cfg.coupling)


def _contour(cfg, p, times):
    """Default geometry for the latest time, with config overrides on top."""
    over = cfg.contour
    tol = over.tol if over.tol is not None else 1e-5
    if not over.any_geometry():
        return None, tol
    base = default_contour(p, float(np.max(times)), tol)
    fields = {k: v for k, v in (("eta1", over.eta1), ("eta2", over.eta2),
                                ("x", over.x)) if v is not None}
    return dataclasses.replace(base, **fields), tol


def _write_csv(path, header, columns):
    columns = [np.asarray(col, dtype=float) for col in columns]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in zip(*columns):
            handle.write(",".join("%.17g" % value for value in row) + "\n")


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _entry_columns(states, prefix):
    header = []
    columns = []
    for j, name in enumerate(_ENTRY_NAMES):
        entry = states[:, j // 2, j % 2]
        header += [f"re_{prefix}{name}", f"im_{prefix}{name}"]
        columns += [entry.real, entry.imag]
    return header, columns


def _run_spectrum(cfg, out_dir):
    p = _model(cfg)
    eta = cfg.contour.eta1 if cfg.contour.eta1 is not None else 1e-3
    grid = density_grid(p, eta=eta)
    coarse = solve_on_grid(p, grid, eta)
    fine = solve_on_grid(p, grid, 0.5 * eta)
    dens = invert_density(p, coarse, fine)
    path = out_dir / "spectrum.csv"
    _write_csv(path,
               ["lambda", "nu_plus", "nu_minus", "re_f_plus", "im_f_plus",
                "re_f_minus", "im_f_minus"],
               [grid, dens.nu_plus, dens.nu_minus,
                coarse.f_plus.real, coarse.f_plus.imag,
                coarse.f_minus.real, coarse.f_minus.imag])
    diag = {
        "eta": eta,
        "residual_max": float(max(np.max(coarse.residual),
                                  np.max(fine.residual))),
        "mass_plus": dens.mass(1),
        "mass_minus": dens.mass(-1),
        "density_bound_excess": dens.bound_excess,
    }
    return {path: "spectrum"}, diag, None


def _run_evolve(cfg, out_dir):
    p = _model(cfg)
    times = cfg.times.values()
    contour, tol = _contour(cfg, p, times)
    traj = evolve(p, cfg.energy, times, cfg.rho0, contour=contour, tol=tol)
    header, columns = _entry_columns(traj.states, "rho_")
    path = out_dir / "evolve.csv"
    _write_csv(path, ["t"] + header + ["trace_error", "herm_error"],
               [times] + columns
               + [traj.trace_errors(), traj.hermiticity_errors()])
    diag = {"tolerance": tol}
    for key in ("method", "eta1", "eta2", "min_denominator", "trace_error",
                "herm_error"):
        if key in traj.meta:
            value = traj.meta[key]
            diag[key] = value if isinstance(value, str) else float(value)
    return {path: "evolve"}, diag, None


def _run_vanhove(cfg, out_dir):
    vp = VanHoveParams(cfg.measure, splitting=cfg.splitting,
                       energy=cfg.energy, taus=cfg.taus.values())
    res = relaxation(vp, cfg.rho0)
    taus = res.trajectory.times
    ones = np.ones_like(taus)
    path = out_dir / "vanhove.csv"
    _write_csv(path,
               ["tau", "rho_pp", "rho_mm", "offdiag_modulus",
                "offdiag_slow_phase", "gamma_plus", "gamma_minus",
                "stationary_pp", "stationary_mm"],
               [taus,
                res.trajectory.states[:, 0, 0].real,
                res.trajectory.states[:, 1, 1].real,
                res.offdiag.modulus, res.offdiag.slow_phase,
                res.gamma_plus * ones, res.gamma_minus * ones,
                res.stationary[0] * ones, res.stationary[1] * ones])
    diag = {
        "gamma_plus": float(res.gamma_plus),
        "gamma_minus": float(res.gamma_minus),
        "stationary_pp": float(res.stationary[0]),
        "stationary_mm": float(res.stationary[1]),
    }
    return {path: "vanhove"}, diag, None


def _montecarlo_stats(cfg):
    p = _model(cfg)
    fm = FiniteModel.at_energy(p, cfg.n, cfg.energy, seed=cfg.seed)
    return fm, ensemble_run(fm, cfg.rho0, cfg.times.values(), cfg.samples)


def _run_montecarlo(cfg, out_dir):
    fm, stats = _montecarlo_stats(cfg)
    header, columns = _entry_columns(stats.mean, "mean_")
    var_cols = [stats.variance[:, j // 2, j % 2] for j in range(4)]
    bound = stats.variance_bound()
    path = out_dir / "montecarlo.csv"
    _write_csv(path,
               ["t"] + header + [f"var_{n}" for n in _ENTRY_NAMES]
               + ["variance_bound"],
               [stats.times] + columns + var_cols + [bound])
    positive = bound > 0
    margin = 0.0
    if np.any(positive):
        worst = np.max(np.asarray(var_cols)[:, positive], axis=0)
        margin = float(np.max(worst / bound[positive]))
    diag = {
        "n": cfg.n,
        "samples": cfg.samples,
        "initial_level": fm.k,
        "initial_energy": float(fm.initial_energy()),
        "variance_bound_margin": margin,
    }
    return {path: "montecarlo"}, diag, None


def _run_compare(cfg, out_dir):
    p = _model(cfg)
    times = cfg.times.values()
    contour, tol = _contour(cfg, p, times)
    traj = evolve(p, cfg.energy, times, cfg.rho0, contour=contour, tol=tol)
    fm, stats = _montecarlo_stats(cfg)
    deviation = np.abs(traj.states - stats.mean)
    limit_header, limit_cols = _entry_columns(traj.states, "limit_")
    mc_header, mc_cols = _entry_columns(stats.mean, "mc_")
    dev_cols = [deviation[:, j // 2, j % 2] for j in range(4)]
    path = out_dir / "compare.csv"
    _write_csv(path,
               ["t"] + limit_header + mc_header
               + [f"dev_{n}" for n in _ENTRY_NAMES],
               [times] + limit_cols + mc_cols + dev_cols)
    max_dev = float(deviation.max())
    diag = {
        "n": cfg.n,
        "samples": cfg.samples,
        "initial_energy": float(fm.initial_energy()),
        "max_deviation": max_dev,
        "threshold": cfg.threshold,
    }
    if "min_denominator" in traj.meta:
        diag["limit_min_denominator"] = float(traj.meta["min_denominator"])
    failure = None
    if max_dev > cfg.threshold:
        failure = CompareThresholdError(
            f"max deviation {max_dev:.6g} exceeds threshold "
            f"{cfg.threshold:.6g}")
    return {path: "compare"}, diag, failure


def _run_equilibrium(cfg, out_dir):
    p = _model(cfg)
    dens = spectral_density(p)
    micro = equilibrium_micro(p, cfg.energy, eps=cfg.window, densities=dens)
    canon = equilibrium_canonical(p, cfg.beta, densities=dens)
    payload = {
        "microcanonical": {
            "center": micro.lam,
            "half_width": micro.eps,
            "pp": float(micro.omega.pp.real),
            "mm": float(micro.omega.mm.real),
        },
        "canonical": {
            "beta": cfg.beta,
            "pp": float(canon.pp.real),
            "mm": float(canon.mm.real),
        },
        "mass_plus": dens.mass(1),
        "mass_minus": dens.mass(-1),
    }
    path = out_dir / "equilibrium.json"
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    diag = {"window": micro.eps, "beta": cfg.beta}
    return {path: None}, diag, None


_RUNNERS = {
    "spectrum": _run_spectrum,
    "evolve": _run_evolve,
    "vanhove": _run_vanhove,
    "montecarlo": _run_montecarlo,
    "compare": _run_compare,
    "equilibrium": _run_equilibrium,
}


def run(subcommand, cfg, plot=False):
    """Run one subcommand; returns the manifest path.

    The manifest is written even when `compare` ends up over threshold,
    so the deviation table is always inspectable; the error is raised
    afterwards.
    """
    started = time.perf_counter()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files, diagnostics, failure = _RUNNERS[subcommand](cfg, out_dir)
    if plot:
        from .plotting import emit_plot
        for path, kind in list(files.items()):
            if kind is not None:
                svg = path.with_suffix(".svg")
                emit_plot(kind, path, svg)
                files[svg] = None
    manifest = {
        "artifact": {"name": "rmrelax", "version": __version__},
        "subcommand": subcommand,
        "config": config_to_dict(cfg),
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        "diagnostics": diagnostics,
        "files": {path.name: _sha256(path) for path in sorted(files)},
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    if failure is not None:
        raise failure
    return manifest_path


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rmrelax",
        description="random-matrix reservoir relaxation experiments")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, blurb in _SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=blurb)
        sub.add_argument("--config", required=True, help="JSON config path")
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument("--seed", type=int, default=None,
                         help="RNG seed override")
        sub.add_argument("--set", action="append", default=[],
                         metavar="KEY=VALUE", dest="overrides",
                         help="dotted-path config override, repeatable")
        sub.add_argument("--plot", action="store_true",
                         help="emit an SVG next to each CSV")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = read_raw(args.config)
        apply_overrides(raw, args.overrides)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out"] = args.out
        cfg = from_dict(raw)
        run(args.subcommand, cfg, plot=args.plot)
    except RelaxError as exc:
        print(f"rmrelax: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
