"""Table and plot-data generation on top of the sweep engine."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .config import RunConfig
from .ktriples import KTriple
from .sos import audit_certificate, certify_interval
from .errors import CertificationFailed
from .harmonic import blue_ceiling
from .sweep import Evaluator, dimension_bound, improved_triples, sweep_triple


def _num(x: float) -> Optional[float]:
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass
class Table2Row:
    dim: int
    k_triple: str
    lp_max: Optional[float]
    lp_d3: Optional[float]
    sdp_max: Optional[float]
    sdp_d3: Optional[float]
    hb_ceiling: int
    flagged: bool


def table2_row(n: int, k: KTriple, config: RunConfig, evaluator: Optional[Evaluator] = None) -> Table2Row:
    """Maxima of the LP and SDP curves over the red region of one triple."""
    sweep = sweep_triple(n, k, config.sweep_config(), region="red", evaluator=evaluator)
    lp = sweep.max_in_red("lp")
    sdp = sweep.max_in_red("sdp")
    return Table2Row(
        dim=n, k_triple=str(k),
        lp_max=None if lp is None else _num(lp.lp.value), lp_d3=None if lp is None else lp.d3,
        sdp_max=None if sdp is None else _num(sdp.sdp.value), sdp_d3=None if sdp is None else sdp.d3,
        hb_ceiling=sweep.ceiling, flagged=sdp is None,
    )


def run_table2(dims: Iterable[int], config: RunConfig = RunConfig()) -> list[Table2Row]:
    """One row per triple whose red region needs the SDP, in each dimension."""
    rows = []
    for n in dims:
        ev = Evaluator(n, config.sweep_config())
        for imp in improved_triples(n, config.sweep_config()):
            rows.append(table2_row(n, imp.k_triple, config, ev))
    return rows


@dataclass
class Table4Row:
    dim: int
    bound: int
    floor_bound: int
    non_rigorous: bool
    failures: int
    triples: int


def run_table4(dims: Iterable[int], config: RunConfig = RunConfig()) -> list[Table4Row]:
    out = []
    for n in dims:
        rep = dimension_bound(n, config.sweep_config())
        out.append(Table4Row(n, rep.overall, rep.floor_bound, rep.non_rigorous, rep.failures, len(rep.triples)))
    return out


@dataclass
class Table5Row:
    dim: int
    k_triple: str
    a1: float
    a2: float
    value: Optional[float]
    ceiling: int
    audit_passed: bool
    integer_bound: Optional[int]


def run_table5(rows: Sequence[tuple[int, KTriple, float, float]], config: RunConfig = RunConfig(),
               save_dir: Optional[str | Path] = None) -> list[Table5Row]:
    out = []
    for n, k, a1, a2 in rows:
        try:
            cert = certify_interval(n, k, a1, a2, config.params, config.settings)
        except CertificationFailed:
            out.append(Table5Row(n, str(k), a1, a2, None, blue_ceiling(n), False, None))
            continue
        passed = audit_certificate(cert).passed
        if save_dir is not None:
            Path(save_dir).mkdir(parents=True, exist_ok=True)
            cert.save(Path(save_dir) / f"cert_{n}_{'_'.join(map(str, k.as_tuple()))}_{a1:.3f}_{a2:.3f}.json")
        out.append(Table5Row(n, str(k), a1, a2, cert.certified_value, blue_ceiling(n), passed,
                             math.floor(cert.certified_value)))
    return out


def export_figure1(dim: int, k: KTriple, config: RunConfig = RunConfig(),
                   path: Optional[str | Path] = None) -> str:
    """CSV of (d3, LP, SDP, HB) at every in-domain grid sample; blank cells mark failed solves."""
    sweep = sweep_triple(dim, k, config.sweep_config(), region="all")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d3", "lp", "sdp", "hb"])
    for r in sweep.grid_records():
        lp, sdp = r.curve_value("lp"), r.curve_value("sdp")
        w.writerow([f"{r.d3:.6f}",
                    "" if math.isnan(lp) else f"{lp:.6f}",
                    "" if math.isnan(sdp) else f"{sdp:.6f}",
                    r.hb])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def rows_to_csv(rows: Sequence) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(asdict(rows[0])), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def rows_to_json(rows: Sequence, provenance: dict) -> str:
    return json.dumps({"provenance": provenance, "rows": [asdict(r) for r in rows]}, indent=2, sort_keys=True)
