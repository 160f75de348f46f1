"""Static SVG figures for the emitted CSV tables.

Each plot kind names the columns it needs; a missing column is an error
rather than an empty axis. Output is deterministic: the SVG hash salt is
pinned and no timestamps are written into the file.
"""

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rmrelax"

import numpy as np
from matplotlib import pyplot as plt

from .errors import MissingColumnError


def read_columns(path):
    """CSV with a header row into a dict of float columns."""
    with open(path, "r", encoding="utf-8") as handle:
        names = handle.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(names)}


def _require(cols, names, path):
    for name in names:
        if name not in cols:
            raise MissingColumnError(f"{path} has no column '{name}'")


def _save(fig, svg_path):
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_spectrum(csv_path, svg_path):
    cols = read_columns(csv_path)
    _require(cols, ["lambda", "nu_plus", "nu_minus"], csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(cols["lambda"], cols["nu_plus"], label="nu_plus")
    ax.plot(cols["lambda"], cols["nu_minus"], label="nu_minus")
    ax.set_xlabel("lambda")
    ax.set_ylabel("density")
    ax.legend()
    _save(fig, svg_path)


def plot_evolution(csv_path, svg_path):
    cols = read_columns(csv_path)
    _require(cols, ["t", "re_rho_pp", "re_rho_mm", "re_rho_pm", "im_rho_pm"],
             csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(cols["t"], cols["re_rho_pp"], label="re_rho_pp")
    ax.plot(cols["t"], cols["re_rho_mm"], label="re_rho_mm")
    modulus = np.hypot(cols["re_rho_pm"], cols["im_rho_pm"])
    ax.plot(cols["t"], modulus, label="|rho_pm|")
    ax.set_xlabel("t")
    ax.set_ylabel("entry")
    ax.legend()
    _save(fig, svg_path)


def plot_montecarlo(csv_path, svg_path):
    cols = read_columns(csv_path)
    needed = ["t", "var_pp", "var_pm", "var_mp", "var_mm", "variance_bound"]
    _require(cols, needed, csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in needed[1:-1]:
        ax.plot(cols["t"], cols[name], label=name)
    ax.plot(cols["t"], cols["variance_bound"], "k--", label="variance_bound")
    ax.set_xlabel("t")
    ax.set_ylabel("variance")
    ax.legend()
    _save(fig, svg_path)


def plot_vanhove(csv_path, svg_path):
    cols = read_columns(csv_path)
    needed = ["tau", "rho_pp", "rho_mm", "stationary_pp", "stationary_mm"]
    _require(cols, needed, csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(cols["tau"], cols["rho_pp"], label="rho_pp")
    ax.plot(cols["tau"], cols["rho_mm"], label="rho_mm")
    ax.axhline(cols["stationary_pp"][0], color="C0", linestyle="--",
               label="stationary_pp")
    ax.axhline(cols["stationary_mm"][0], color="C1", linestyle="--",
               label="stationary_mm")
    ax.set_xlabel("tau")
    ax.set_ylabel("population")
    ax.legend()
    _save(fig, svg_path)


def plot_compare(csv_path, svg_path):
    cols = read_columns(csv_path)
    needed = ["t", "dev_pp", "dev_pm", "dev_mp", "dev_mm"]
    _require(cols, needed, csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in needed[1:]:
        ax.plot(cols["t"], cols[name], label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("|limit - mc mean|")
    ax.legend()
    _save(fig, svg_path)


_PLOTTERS = {
    "spectrum": plot_spectrum,
    "evolve": plot_evolution,
    "montecarlo": plot_montecarlo,
    "vanhove": plot_vanhove,
    "compare": plot_compare,
}


def emit_plot(kind, csv_path, svg_path):
    """Render the figure for one CSV kind; returns the SVG path."""
    try:
        plotter = _PLOTTERS[kind]
    except KeyError:
        raise MissingColumnError(f"no plot defined for '{kind}'")
    plotter(csv_path, svg_path)
    return svg_path
