"""Command-line entry point (``tridist``).

Exit codes: 0 success, 1 audit failure or bad input, 2 a non-rigorous result
was produced, 3 a solver failure affected the result.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import reporting
from .config import RunConfig, load_config
from .conic import solver_info
from .errors import CertificationFailed, OutOfDomainError, ParameterError
from .harmonic import DistanceTriple, harmonic_bound
from .ktriples import KTriple, enumerate_k_triples, triple_context, recover_distances
from .programs import lp_bound, sdp_bound
from .sos import SosCertificate, audit_certificate, certify_interval
from .sweep import dimension_bound, grid_sweep_unreduced, sweep_triple

EXIT_OK, EXIT_BAD, EXIT_NON_RIGOROUS, EXIT_SOLVER = 0, 1, 2, 3


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _emit(payload, cfg: RunConfig, out: Optional[str], csv_text: Optional[str] = None) -> None:
    """Write JSON (or the CSV projection when requested and available)."""
    if cfg.output_format == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(type(o).__name__)


def _provenance(cfg: RunConfig) -> dict:
    return {"solver": solver_info(cfg.settings), "config_hash": cfg.config_hash(),
            "p_lp": cfg.p_lp, "p_sdp": cfg.p_sdp, "step": cfg.step}


def _point(args) -> DistanceTriple:
    if args.d is not None:
        return DistanceTriple(*_floats(args.d))
    if None not in (args.d1, args.d2, args.d3) and args.k is None:
        return DistanceTriple(args.d1, args.d2, args.d3)
    if args.k is None or args.d3 is None:
        raise ParameterError("give --d d1,d2,d3 or both --k and --d3")
    return recover_distances(KTriple.parse(args.k), args.d3)


# ----------------------------------------------------------------- commands


def cmd_bound(args, cfg: RunConfig) -> int:
    d = _point(args)
    if args.kind == "hb":
        hb = harmonic_bound(args.dim, d)
        _emit({"kind": "hb", "distances": list(d.as_tuple()), "value": hb.value, "upper": hb.upper,
               "ambiguous": hb.ambiguous}, cfg, args.out)
        return EXIT_OK
    bv = lp_bound(args.dim, d, cfg.p_lp, cfg.settings) if args.kind == "lp" else sdp_bound(args.dim, d, cfg.params, cfg.settings)
    payload = dict(bv.to_dict(), kind=args.kind, distances=list(d.as_tuple()),
                   integer=None if not bv.ok else int(bv.integer), provenance=_provenance(cfg))
    _emit(payload, cfg, args.out)
    return EXIT_OK if bv.ok else EXIT_SOLVER


def cmd_enumerate(args, cfg: RunConfig) -> int:
    ctx = triple_context(args.dim)
    triples = enumerate_k_triples(args.dim)
    if cfg.output_format == "csv":
        text = "k1,k2,k3\n" + "".join(f"{a},{b},{c}\n" for a, b, c in (t.as_tuple() for t in triples))
    else:
        text = "".join(json.dumps({"dimension": args.dim, "N": ctx.N, "k_cap": ctx.k_cap,
                                   "k_triple": list(t.as_tuple())}) + "\n" for t in triples)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    sc = cfg.sweep_config()
    if args.k is None:
        rep = dimension_bound(args.dim, sc)
        payload = dict(rep.to_dict(), provenance=_provenance(cfg))
        _emit(payload, cfg, args.out)
        if rep.non_rigorous:
            return EXIT_SOLVER
        return EXIT_OK
    sweep = sweep_triple(args.dim, KTriple.parse(args.k), sc, region=args.region)
    recs = sorted(sweep.records, key=lambda r: r.d3)
    best = {kind: sweep.max_in_red(kind) for kind in ("lp", "sdp")}
    payload = {
        "dimension": args.dim, "k_triple": list(sweep.k_triple.as_tuple()), "ceiling": sweep.ceiling,
        "red_max": {k: None if r is None else {"d3": r.d3, "value": r.curve_value(k)} for k, r in best.items()},
        "failures": sweep.failures, "records": [r.to_dict() for r in recs], "provenance": _provenance(cfg),
    }
    csv_text = "d3,d1,d2,hb,lp,sdp,b,integer_bound,flagged,refined\n" + "".join(
        f"{r.d3!r},{r.distances.d1!r},{r.distances.d2!r},{r.hb},{r.curve_value('lp')!r},"
        f"{r.curve_value('sdp')!r},{r.b!r},{r.integer_bound},{int(r.flagged)},{int(r.refined)}\n" for r in recs)
    _emit(payload, cfg, args.out, csv_text)
    if args.plot_data:
        reporting.export_figure1(args.dim, sweep.k_triple, cfg, args.plot_data)
    return EXIT_OK


def cmd_grid(args, cfg: RunConfig) -> int:
    rep = grid_sweep_unreduced(args.dim, _ints(args.parts), cfg.sweep_config())
    _emit(dict(rep.to_dict(), provenance=_provenance(cfg)), cfg, args.out)
    return EXIT_NON_RIGOROUS


def cmd_certify(args, cfg: RunConfig) -> int:
    k = KTriple.parse(args.k)
    try:
        cert = certify_interval(args.dim, k, args.lo, args.hi, cfg.params, cfg.settings)
    except CertificationFailed as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = args.out or f"cert_{args.dim}_{'_'.join(map(str, k.as_tuple()))}_{args.lo}_{args.hi}.json"
    cert.save(out)
    print(json.dumps({"certificate": out, "certified_value": cert.certified_value,
                      "margins": cert.margins}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_audit(args, cfg: RunConfig) -> int:
    rep = audit_certificate(SosCertificate.load(args.cert))
    print(json.dumps(rep.to_dict(), indent=2, sort_keys=True, default=_default))
    return EXIT_OK if rep.passed else EXIT_BAD


def cmd_table2(args, cfg: RunConfig) -> int:
    rows = reporting.run_table2(cfg.dims, cfg)
    _emit(json.loads(reporting.rows_to_json(rows, _provenance(cfg))), cfg, args.out, reporting.rows_to_csv(rows))
    return EXIT_SOLVER if any(r.flagged for r in rows) else EXIT_OK


def cmd_table4(args, cfg: RunConfig) -> int:
    rows = reporting.run_table4(cfg.dims, cfg)
    _emit(json.loads(reporting.rows_to_json(rows, _provenance(cfg))), cfg, args.out, reporting.rows_to_csv(rows))
    return EXIT_SOLVER if any(r.non_rigorous for r in rows) else EXIT_OK


def cmd_figure1(args, cfg: RunConfig) -> int:
    text = reporting.export_figure1(args.dim, KTriple.parse(args.k), cfg, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    # shared options are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--cache-dir", help="result cache directory (overrides config and env)")
    common.add_argument("--no-cache", action="store_true", help="keep results in memory only")
    common.add_argument("--format", choices=("json", "csv"), dest="output_format")
    common.add_argument("--plp", type=int, dest="p_lp")
    common.add_argument("--psdp", type=int, dest="p_sdp")
    common.add_argument("--step", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="tridist", parents=[common],
                                description="Upper bounds for spherical three-distance sets.")
    sub = p.add_subparsers(dest="command", required=True)
    sub_parser = sub.add_parser

    def add(name, **kw):
        return sub_parser(name, parents=[common], **kw)


    b = add("bound", help="single HB, LP or SDP evaluation")
    b.add_argument("kind", choices=("hb", "lp", "sdp"))
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--d", help="d1,d2,d3")
    b.add_argument("--k", help="K1,K2,K3 (with --d3)")
    b.add_argument("--d1", type=float)
    b.add_argument("--d2", type=float)
    b.add_argument("--d3", type=float)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    e = add("enumerate-k", help="list admissible K-triples")
    e.add_argument("--dim", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    s = add("sweep", help="dimension bound, or one triple's sample curve with --k")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--k")
    s.add_argument("--region", choices=("red", "all"), default="red")
    s.add_argument("--plot-data", help="also write d3/LP/SDP/HB curves to this CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    g = add("grid-sweep", help="exploratory sweep over (d1, d2, d3) without the K-triple reduction")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--parts", default="100,100,50")
    g.add_argument("--out")
    g.set_defaults(func=cmd_grid)

    c = add("certify", help="SOS certificate on an interval of d3")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--k", required=True)
    c.add_argument("--from", type=float, required=True, dest="lo")
    c.add_argument("--to", type=float, required=True, dest="hi")
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    a = add("audit", help="re-verify a certificate file")
    a.add_argument("--cert", required=True)
    a.set_defaults(func=cmd_audit)

    for name, fn in (("table2", cmd_table2), ("table4", cmd_table4)):
        t = add(name)
        t.add_argument("--dims", help="comma separated dimensions")
        t.add_argument("--out")
        t.set_defaults(func=fn)

    f = add("figure1", help="plot data for one triple")
    f.add_argument("--dim", type=int, default=7)
    f.add_argument("--k", default="1,-3,3")
    f.add_argument("--out")
    f.set_defaults(func=cmd_figure1)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    overrides = {k: getattr(args, k, None) for k in ("output_format", "p_lp", "p_sdp", "step", "workers", "cache_dir")}
    if getattr(args, "dims", None):
        overrides["dims"] = _ints(args.dims)
    try:
        cfg = load_config(getattr(args, "config", None), **overrides)
        if getattr(args, "no_cache", False):
            cfg = replace(cfg, cache_dir=None)
        return args.func(args, cfg)
    except (ParameterError, OutOfDomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD


if __name__ == "__main__":
    sys.exit(main())
