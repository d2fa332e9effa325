#!/usr/bin/env python3
"""Plot CSV output of the isac_smi tool.

    plot.py l-sweep lsweep.csv [-o lsweep.png]
    plot.py pareto pareto.csv [-o pareto.png]
    plot.py admm admm.csv [-o admm.png]
"""

import argparse
import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def plot_l_sweep(rows, ax):
    L = [int(r["L"]) for r in rows]
    theo = [float(r["smi_theoretical"]) for r in rows]
    mean = [float(r["smi_empirical_mean"]) for r in rows]
    err = [2.0 * float(r["smi_empirical_stderr"]) for r in rows]
    ax.plot(L, theo, "-o", label="deterministic equivalent")
    ax.errorbar(L, mean, yerr=err, fmt="s", capsize=3, label="Monte-Carlo (±2 s.e.)")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("frame length L")
    ax.set_ylabel("SMI")


def plot_pareto(rows, ax):
    by_method = {}
    for r in rows:
        by_method.setdefault(r["method"], []).append(r)
    styles = {"proposed": "-o", "timeshare": "--", "sensing": "^", "comm": "v"}
    for method, style in styles.items():
        pts = [(float(r["rate"]), float(r["smi"])) for r in by_method.get(method, [])]
        pts = [p for p in pts if not any(math.isnan(v) for v in p)]
        if pts:
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=method)
    ax.set_xlabel("communication rate")
    ax.set_ylabel("SMI")


def plot_admm(rows, ax):
    it = [int(r["iteration"]) for r in rows]
    ax.semilogy(it, [float(r["primal_residual"]) for r in rows], label="primal residual")
    ax.semilogy(it, [max(float(r["dual_residual"]), 1e-300) for r in rows], label="dual residual")
    ax.set_xlabel("ADMM iteration")
    ax.set_ylabel("residual")


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("kind", choices=["l-sweep", "pareto", "admm"])
    parser.add_argument("csv")
    parser.add_argument("-o", "--output", help="image path (default: <csv>.png)")
    args = parser.parse_args()

    rows = read_rows(args.csv)
    fig, ax = plt.subplots(figsize=(6, 4))
    {"l-sweep": plot_l_sweep, "pareto": plot_pareto, "admm": plot_admm}[args.kind](rows, ax)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output or args.csv.rsplit(".", 1)[0] + ".png", dpi=150)


if __name__ == "__main__":
    main()
