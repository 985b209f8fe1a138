"""Dimension-level upper bounds, resumable through the shared result cache."""

from __future__ import annotations

import argparse
import logging

from tridist.config import load_config
from tridist.reporting import rows_to_json, run_table4


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="7,20,21,23,24,25")
    ap.add_argument("--out", default="results/dimension_bounds.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = load_config(dims=tuple(int(x) for x in args.dims.split(",")))
    rows = run_table4(cfg.dims, cfg)
    for r in rows:
        flag = "  NON-RIGOROUS" if r.non_rigorous else ""
        print(f"n={r.dim:3d} bound={r.bound} (floor {r.floor_bound}, failures {r.failures}){flag}", flush=True)
    with open(args.out, "w") as fh:
        fh.write(rows_to_json(rows, {"config_hash": cfg.config_hash()}))


if __name__ == "__main__":
    main()
