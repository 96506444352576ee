"""Render the CSVs written by the other scripts (matplotlib, optional)."""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


def read(path):
    with open(path) as f:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def plot_sweep(path, ax):
    _, rows = read(path)
    by_beta = defaultdict(list)
    for beta, e, _, _, v in rows:
        by_beta[beta].append((float(e), float(v)))
    for beta, pts in by_beta.items():
        x, y = zip(*pts)
        ax.plot(x, y, "--" if beta == "inf" else "-", label=f"beta={beta}")
    ax.set_title(path.stem, fontsize=8)
    ax.legend(fontsize=6)


def plot_capacitance(path, ax):
    header, rows = read(path)
    cols = list(zip(*[[float(v) for v in r] for r in rows]))
    for name, col in zip(header[1:], cols[1:]):
        ax.plot(cols[0], col, label=name)
    ax.legend(fontsize=6)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default=str(ROOT / "results"))
    d = Path(ap.parse_args().dir)
    sweeps = sorted(d.glob("sweep_*.csv"))
    fig, axes = plt.subplots(1, len(sweeps) + 1, figsize=(4 * (len(sweeps) + 1), 3.5), squeeze=False)
    for ax, p in zip(axes[0], sweeps):
        plot_sweep(p, ax)
    if (d / "capacitance.csv").exists():
        plot_capacitance(d / "capacitance.csv", axes[0][-1])
    fig.tight_layout()
    fig.savefig(d / "curves.png", dpi=120)
    print(d / "curves.png")
