"""Plot the report files written by a sweep (needs the optional matplotlib extra).

Usage:  python3 scripts/plot_sweep.py sweep_out
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANELS = (
    ("energy_loglog.dat", "log(a*-a)", "log I"),
    ("profile_distance.dat", "a/a*", "sup |w_a - Q/sqrt(a*)|"),
    ("max_point.dat", "a/a*", "(|x_a|^2-1)/eps_bar^2"),
    ("vortex_radius.dat", "a/a*", "vortex-free radius"),
)


def main():
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "sweep_out")
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    for ax, (name, xl, yl) in zip(axes.ravel(), PANELS):
        data = np.loadtxt(outdir / name, ndmin=2)
        ax.plot(data[:, 0], data[:, 1], "o-")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
    fig.tight_layout()
    fig.savefig(outdir / "sweep.png", dpi=120)
    print(outdir / "sweep.png")


if __name__ == "__main__":
    main()
