"""Plot traces written by `iohlqg synth`.

usage: python docs/plot_trace.py OUT_DIR [--baseline J] [--save fig.png]
"""

import argparse
import glob
import os

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--baseline", type=float)
    ap.add_argument("--save")
    args = ap.parse_args()

    paths = sorted(glob.glob(os.path.join(args.out_dir, "trace_seed*.csv")))
    if not paths:
        raise SystemExit(f"no trace_seed*.csv in {args.out_dir}")

    fig, (ax_j, ax_h) = plt.subplots(1, 2, figsize=(11, 4))
    for p in paths:
        df = pd.read_csv(p)
        ax_j.plot(df["iter"], df["J"], lw=1)
        for col in [c for c in df.columns if c.startswith("hsv_")]:
            ax_h.plot(df["iter"], df[col], lw=1)
    if args.baseline is not None:
        ax_j.axhline(args.baseline, color="k", ls=":")
    ax_j.set_xlabel("iteration")
    ax_j.set_ylabel("J")
    ax_j.set_yscale("log")
    ax_h.set_xlabel("iteration")
    ax_h.set_ylabel("Hankel singular values")
    ax_h.set_yscale("log")
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
