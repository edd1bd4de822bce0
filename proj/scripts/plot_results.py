#!/usr/bin/env python3
"""Plot monthly observed vs expected AVC totals and the top hotspots.

Inputs are the CSV files written by `avc monthly` and `avc hotspots`.

    python3 scripts/plot_results.py --monthly monthly.csv --hotspots hot.csv --out figures/
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_monthly(path: Path, out: Path) -> None:
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.fill_between(df["month"], df["lower"], df["upper"], alpha=0.3, label="95% interval")
    ax.plot(df["month"], df["expected"], marker="o", label="expected")
    ax.plot(df["month"], df["observed"], marker="s", linestyle="--", label="observed")
    ax.set_xlabel("month")
    ax.set_ylabel("AVC total")
    ax.set_xticks(df["month"])
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "monthly_totals.png", dpi=150)
    plt.close(fig)


def plot_hotspots(path: Path, out: Path, top: int) -> None:
    df = pd.read_csv(path).sort_values("rank").head(top)
    labels = df["segment_id"] + " / m" + df["month"].astype(str)
    fig, ax = plt.subplots(figsize=(7, 0.3 * len(df) + 1.5))
    ax.barh(labels[::-1], df["expected_avc"][::-1])
    ax.set_xlabel("posterior mean expected AVCs")
    fig.tight_layout()
    fig.savefig(out / "hotspots.png", dpi=150)
    plt.close(fig)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--monthly", type=Path)
    parser.add_argument("--hotspots", type=Path)
    parser.add_argument("--top", type=int, default=20)
    parser.add_argument("--out", type=Path, default=Path("."))
    args = parser.parse_args()
    if args.monthly is None and args.hotspots is None:
        parser.error("give --monthly and/or --hotspots")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.monthly is not None:
        plot_monthly(args.monthly, args.out)
    if args.hotspots is not None:
        plot_hotspots(args.hotspots, args.out, args.top)


if __name__ == "__main__":
    main()
