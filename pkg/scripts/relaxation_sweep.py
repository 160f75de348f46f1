"""Sweep the coupling and watch the crossover to weak-coupling relaxation.

For each v the limiting dynamics is evaluated on a common rescaled-time
grid tau = t v^2, so curves at different couplings become comparable;
the closed weak-coupling law is drawn on top. Small v should collapse
onto the law, large v should visibly depart from it.

Run from the repository root:

    python3 scripts/relaxation_sweep.py --out runs/relaxation_sweep
"""

import argparse
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import numpy as np
from matplotlib import pyplot as plt

from rmrelax.dynamics import evolve
from rmrelax.measures import Uniform
from rmrelax.selfconsistent import ModelParams
from rmrelax.vanhove import VanHoveParams, diagonal_relaxation

SPLITTING = 0.25
ENERGY = 0.0
RHO0 = np.diag([1.0 + 0j, 0.0])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/relaxation_sweep")
    parser.add_argument("--couplings", type=float, nargs="+",
                        default=[0.1, 0.2, 0.4, 0.8])
    parser.add_argument("--tau-max", type=float, default=1.0)
    parser.add_argument("--points", type=int, default=9)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    taus = np.linspace(0.0, args.tau_max, args.points)

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for v in args.couplings:
        p = ModelParams(Uniform(-1.0, 1.0), splitting=SPLITTING, coupling=v)
        started = time.perf_counter()
        traj = evolve(p, ENERGY, taus / v ** 2, RHO0, tol=1e-4)
        pop = traj.states[:, 0, 0].real
        print(f"v={v:4.2f}  t_max={taus[-1] / v**2:7.1f}  "
              f"final rho_pp={pop[-1]:.4f}  "
              f"({time.perf_counter() - started:.1f}s)")
        ax.plot(taus, pop, "o-", label=f"v={v:g}")
        np.savetxt(out / f"populations_v{v:g}.csv",
                   np.column_stack([taus, pop]),
                   delimiter=",", header="tau,rho_pp", comments="")

    vp = VanHoveParams(Uniform(-1.0, 1.0), splitting=SPLITTING, energy=ENERGY)
    fine = np.linspace(0.0, args.tau_max, 200)
    law = diagonal_relaxation(vp, fine, RHO0)
    ax.plot(fine, law[:, 0], "k--", label="weak-coupling law")

    ax.set_xlabel("tau = t v^2")
    ax.set_ylabel("rho_pp")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "relaxation_sweep.svg")
    print(f"wrote {out}/relaxation_sweep.svg")


if __name__ == "__main__":
    main()
