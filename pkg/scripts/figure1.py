"""Write the d3 / LP / SDP / HB curves for one triple and optionally plot them."""

from __future__ import annotations

import argparse
import csv

from tridist.config import load_config
from tridist.ktriples import KTriple
from tridist.reporting import export_figure1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=7)
    ap.add_argument("--k", default="1,-3,3")
    ap.add_argument("--out", default="results/figure1.csv")
    ap.add_argument("--png", help="render with matplotlib if installed")
    args = ap.parse_args()
    export_figure1(args.dim, KTriple.parse(args.k), load_config(), args.out)
    if args.png:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        with open(args.out) as fh:
            rows = list(csv.DictReader(fh))
        x = [float(r["d3"]) for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        for col in ("hb", "lp", "sdp"):
            ax.plot(x, [float(r[col]) if r[col] else float("nan") for r in rows], label=col.upper())
        ax.set_xlabel("d3")
        ax.set_yscale("log")
        ax.legend()
        fig.savefig(args.png, dpi=120, bbox_inches="tight")


if __name__ == "__main__":
    main()
