"""Self-averaging in practice: ensemble deviation from the limit vs n.

Runs the finite-n ensemble at growing reservoir sizes against the exact
limiting dynamics and plots the maximal entrywise deviation of the mean
together with the per-entry variance envelope 8 v^2 t^2 / n. Expect the
deviation to fall roughly like 1/sqrt(n M) and the variance to track
well below the envelope.

    python3 scripts/finite_size_convergence.py --out runs/finite_size
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
from rmrelax.montecarlo import FiniteModel, ensemble_run
from rmrelax.selfconsistent import ModelParams

COUPLING = 0.4
SPLITTING = 0.25
RHO0 = np.diag([1.0 + 0j, 0.0])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/finite_size")
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[50, 100, 200, 400])
    parser.add_argument("--samples", type=int, default=30)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = ModelParams(Uniform(-1.0, 1.0), splitting=SPLITTING,
                    coupling=COUPLING)
    times = np.linspace(0.5, 2.0, 4)
    traj = evolve(p, 0.0, times, RHO0)

    rows = []
    for n in args.sizes:
        started = time.perf_counter()
        fm = FiniteModel.at_energy(p, n, 0.0, seed=args.seed)
        stats = ensemble_run(fm, RHO0, times, args.samples)
        deviation = float(np.abs(stats.mean - traj.states).max())
        var_peak = float(stats.variance.max())
        envelope = float(stats.variance_bound().max())
        rows.append((n, deviation, var_peak, envelope))
        print(f"n={n:4d}  max|mean - limit|={deviation:.5f}  "
              f"peak var={var_peak:.2e}  envelope={envelope:.2e}  "
              f"({time.perf_counter() - started:.1f}s)")

    table = np.array(rows)
    np.savetxt(out / "deviation_vs_n.csv", table, delimiter=",",
               header="n,max_deviation,peak_variance,variance_envelope",
               comments="")

    fig, (left, right) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    left.loglog(table[:, 0], table[:, 1], "o-")
    left.loglog(table[:, 0], table[0, 1] * (table[0, 0] / table[:, 0]) ** 0.5,
                "k--", label="1/sqrt(n)")
    left.set_xlabel("n")
    left.set_ylabel("max |ensemble mean - limit|")
    left.legend()
    right.loglog(table[:, 0], table[:, 2], "o-", label="peak variance")
    right.loglog(table[:, 0], table[:, 3], "k--", label="8 v^2 t^2 / n")
    right.set_xlabel("n")
    right.legend()
    fig.tight_layout()
    fig.savefig(out / "finite_size_convergence.svg")
    print(f"wrote {out}/finite_size_convergence.svg")


if __name__ == "__main__":
    main()
