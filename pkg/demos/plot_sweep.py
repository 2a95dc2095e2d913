"""Plot a heatmap.csv written by ``memrc sweep``.

    python demos/plot_sweep.py out/mc_sweep/heatmap.csv capacity
"""
import sys

import matplotlib.pyplot as plt
import numpy as np


def main(path, metric):
    rows = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8", comments="#")
    rows = rows[rows["metric"] == metric]
    vs, lams = np.unique(rows["v"]), np.unique(rows["lambda"])
    grid = np.full((len(vs), len(lams)), np.nan)
    for r in rows:
        grid[np.searchsorted(vs, r["v"]), np.searchsorted(lams, r["lambda"])] = r["mean"]
    plt.pcolormesh(lams, vs, grid, shading="nearest")
    plt.colorbar(label=metric)
    plt.xlabel("lambda")
    plt.ylabel("v (V)")
    plt.title(path)
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "capacity")
