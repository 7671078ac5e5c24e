#!/usr/bin/env python3
"""Overlay classical vs emulated sigma_z from a pipeline readout CSV.

Usage:
    python3 scripts/plot_sigma_z.py runs/model4/sigma_z.csv -o sigma_z.png

Without -o the plot opens interactively.
"""

import argparse
import csv
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", help="sigma_z.csv written by `gqme pipeline`")
    parser.add_argument("-o", "--out", help="write a PNG instead of showing the plot")
    parser.add_argument("--title", default=None, help="plot title (default: the CSV path)")
    args = parser.parse_args()

    t, classical, emulated = [], [], []
    with open(args.csv, newline="") as f:
        for row in csv.DictReader(f):
            t.append(float(row["t"]))
            classical.append(float(row["sigma_z_classical"]))
            emulated.append(float(row["sigma_z_emulated"]))
    if not t:
        print(f"{args.csv}: no data rows", file=sys.stderr)
        return 1

    import matplotlib

    if args.out:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(t, classical, color="black", lw=1.2, label="classical")
    ax.plot(t, emulated, "o", color="tab:red", ms=3.5, alpha=0.8, label="emulated")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\sigma_z$")
    ax.set_title(args.title or args.csv)
    ax.legend(frameon=False)
    ax.grid(alpha=0.25)
    fig.tight_layout()

    if args.out:
        fig.savefig(args.out, dpi=150)
        print(f"wrote {args.out}")
    else:
        plt.show()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
