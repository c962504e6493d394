"""Plot the Xi and delta columns of an ``audit.csv`` (needs matplotlib).

    python scripts/plot_audit.py out/audit.csv
"""

import csv
import sys

import matplotlib.pyplot as plt


def main(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    N = [int(r["N"]) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(N, [float(r["xi"]) for r in rows], lw=0.8)
    ax1.set(xlabel="N", ylabel="Xi_N")
    ax2.plot(N, [float(r["delta"]) for r in rows], lw=0.8, label="delta_N")
    ax2.plot(N, [float(r["delta_pred_conjecture"]) for r in rows], "--", label="boundary term")
    ax2.plot(N, [float(r["delta_pred_weylsigma"]) for r in rows], ":", label="square perimeter term")
    ax2.set(xlabel="N")
    ax2.legend()
    fig.tight_layout()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1])
