"""Exploratory sweep over (d1, d2, d3) grid nodes without the integrality reduction."""

from __future__ import annotations

import argparse
import json

from tridist.config import load_config
from tridist.harmonic import DistanceTriple
from tridist.sweep import Evaluator, grid_sweep_unreduced


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--parts", default="100,100,50")
    ap.add_argument("--cell", default="-0.76,-0.16,0.54", help="also report LP and SDP at this node")
    ap.add_argument("--out", default="results/grid_sweep.json")
    args = ap.parse_args()
    cfg = load_config()
    sc = cfg.sweep_config()
    rep = grid_sweep_unreduced(args.dim, tuple(int(x) for x in args.parts.split(",")), sc)
    ev = Evaluator(args.dim, sc)
    cell = DistanceTriple(*(float(x) for x in args.cell.split(",")))
    payload = dict(rep.to_dict(), cell={"distances": list(cell.as_tuple()),
                                        "lp": ev.one("lp", cell).to_dict(), "sdp": ev.one("sdp", cell).to_dict()})
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(json.dumps(payload, indent=2))


if __name__ == "__main__":
    main()
