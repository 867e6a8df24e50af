#!/usr/bin/env python3
"""Render a contact_forces.csv as a per-foot force plot (matplotlib).

Usage: python scripts/plot_contact_forces.py out/contact_forces.csv [plot.png]
"""

import csv
import sys


def main() -> None:
    if len(sys.argv) < 2:
        sys.exit("usage: plot_contact_forces.py contact_forces.csv [plot.png]")
    times, left, right = [], [], []
    with open(sys.argv[1]) as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["time_s"]))
            left.append(float(row["left_foot_n"]))
            right.append(float(row["right_foot_n"]))

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(9, 3.2))
    ax.plot(times, left, label="left foot", lw=1.2)
    ax.plot(times, right, label="right foot", lw=1.2)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("contact force [N]")
    ax.legend(loc="upper right")
    ax.set_title("ground contact force per foot")
    fig.tight_layout()
    out = sys.argv[2] if len(sys.argv) > 2 else "contact_forces.png"
    fig.savefig(out, dpi=140)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
