"""Sampling sweeps over d3 for each admissible K-triple, and the grid sweep
that ignores the integrality of K.

Every LP/SDP solve goes through :class:`ResultCache`, keyed on the exact
inputs plus the solver description, so interrupted runs resume cheaply.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import sqlite3
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .conic import SolverSettings, solver_info
from .harmonic import DistanceTriple, blue_ceiling, harmonic_bound_array
from .ktriples import KTriple, enumerate_k_triples, triple_context, recover_arrays
from .programs import BoundValue, lp_bound, sdp_bound
from .threepoint import SdpParams

log = logging.getLogger(__name__)

KINDS = ("lp", "sdp")
CACHE_FILE = "results.sqlite"


# ------------------------------------------------------------------ caching


class ResultCache:
    """Persistent map from solve inputs to :class:`BoundValue`.

    ``path=None`` keeps everything in memory. Keys are SHA-256 digests of a
    canonical JSON description, so the raw inputs are also stored alongside
    for inspection.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        if path is not None:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self._conn = sqlite3.connect(path or ":memory:", check_same_thread=False, timeout=60.0)
        self._lock = threading.Lock()
        with self._conn:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS results (key TEXT PRIMARY KEY, inputs TEXT, value TEXT)"
            )
        self.hits = 0
        self.misses = 0

    @staticmethod
    def describe(kind: str, n: int, d: DistanceTriple, params: SdpParams, info: str) -> str:
        payload = {
            "kind": kind,
            "n": n,
            "d": [repr(float(x)) for x in d.as_tuple()],
            "p_lp": params.p_lp,
            "p_sdp": params.p_sdp if kind == "sdp" else None,
            "solver": info,
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def key(description: str) -> str:
        return hashlib.sha256(description.encode()).hexdigest()

    def get(self, description: str) -> Optional[BoundValue]:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM results WHERE key = ?", (self.key(description),)
            ).fetchone()
        if row is None:
            self.misses += 1
            return None
        self.hits += 1
        return BoundValue.from_dict(json.loads(row[0]))

    def put(self, description: str, value: BoundValue) -> None:
        data = dict(value.to_dict(), solve_time=value.solve_time)
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO results VALUES (?, ?, ?)",
                (self.key(description), description, json.dumps(data)),
            )

    def __len__(self) -> int:
        with self._lock:
            return int(self._conn.execute("SELECT COUNT(*) FROM results").fetchone()[0])

    def close(self) -> None:
        self._conn.close()


# ------------------------------------------------------------ configuration


@dataclass(frozen=True)
class SweepConfig:
    step: float = 0.001
    refine_tol: float = 1e-4
    refine_count: int = 3
    params: SdpParams = field(default_factory=SdpParams)
    settings: SolverSettings = field(default_factory=SolverSettings)
    cache_dir: Optional[str] = None
    workers: int = 1
    use_lp: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.step < 0.5:
            raise ValueError(f"step {self.step} outside (0, 0.5)")
        if not 0 < self.refine_tol <= self.step:
            raise ValueError("refine_tol must lie in (0, step]")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def grid(self) -> np.ndarray:
        """Sample points i*step strictly inside (0, 1)."""
        count = int(round(1.0 / self.step))
        pts = np.round(np.arange(1, count) * self.step, 12)
        return pts[pts < 1.0]

    def open_cache(self) -> ResultCache:
        path = None if self.cache_dir is None else os.path.join(self.cache_dir, CACHE_FILE)
        return ResultCache(path)

    def fingerprint(self) -> str:
        body = json.dumps(
            {"step": self.step, "refine_tol": self.refine_tol, "params": asdict(self.params),
             "solver": solver_info(self.settings), "use_lp": self.use_lp},
            sort_keys=True,
        )
        return hashlib.sha256(body.encode()).hexdigest()[:16]


# ---------------------------------------------------------- point evaluation


def _solve_one(job: tuple) -> BoundValue:
    kind, n, d, params, settings = job
    if kind == "lp":
        return lp_bound(n, d, params.p_lp, settings)
    return sdp_bound(n, d, params, settings)


class Evaluator:
    """Cached LP/SDP evaluation with optional process-level parallelism."""

    def __init__(self, n: int, config: SweepConfig, cache: Optional[ResultCache] = None):
        self.n = n
        self.config = config
        self.cache = cache if cache is not None else config.open_cache()
        self.info = solver_info(config.settings)

    def _desc(self, kind: str, d: DistanceTriple) -> str:
        return ResultCache.describe(kind, self.n, d, self.config.params, self.info)

    def one(self, kind: str, d: DistanceTriple) -> BoundValue:
        desc = self._desc(kind, d)
        hit = self.cache.get(desc)
        if hit is not None:
            return hit
        val = _solve_one((kind, self.n, d, self.config.params, self.config.settings))
        self.cache.put(desc, val)
        return val

    def many(self, kind: str, points: Sequence[DistanceTriple]) -> list[BoundValue]:
        out: list[Optional[BoundValue]] = [None] * len(points)
        todo = []
        for i, d in enumerate(points):
            hit = self.cache.get(self._desc(kind, d))
            if hit is None:
                todo.append(i)
            else:
                out[i] = hit
        jobs = [(kind, self.n, points[i], self.config.params, self.config.settings) for i in todo]
        if self.config.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(self.config.workers) as pool:
                solved = list(pool.map(_solve_one, jobs, chunksize=8))
        else:
            solved = [_solve_one(j) for j in jobs]
        for i, val in zip(todo, solved):
            self.cache.put(self._desc(kind, points[i]), val)
            out[i] = val
        return out  # type: ignore[return-value]


# ------------------------------------------------------------------ records


@dataclass(frozen=True)
class BoundRecord:
    """Bounds at one sample.

    ``b`` is the minimum of the raw available values; ``integer_bound`` is the
    rigorous integer conclusion, using ``floor(value + margin)`` for solver
    values and the conservative harmonic bound.
    """

    k_triple: Optional[KTriple]
    d3: float
    distances: DistanceTriple
    hb: int
    hb_strict: int
    lp: Optional[BoundValue]
    sdp: Optional[BoundValue]
    refined: bool = False

    @property
    def b(self) -> float:
        vals = [float(self.hb)]
        vals += [bv.value for bv in (self.lp, self.sdp) if bv is not None and bv.ok]
        return min(vals)

    @property
    def integer_bound(self) -> int:
        vals = [float(self.hb)]
        vals += [bv.integer for bv in (self.lp, self.sdp) if bv is not None]
        return int(min(vals))

    @property
    def flagged(self) -> bool:
        """True when a requested solve produced no usable value."""
        return any(bv is not None and not bv.ok for bv in (self.lp, self.sdp))

    def curve_value(self, kind: str) -> float:
        bv = self.lp if kind == "lp" else self.sdp
        return bv.value if bv is not None and bv.ok else math.nan

    def to_dict(self) -> dict:
        return {
            "k_triple": None if self.k_triple is None else list(self.k_triple.as_tuple()),
            "d3": self.d3,
            "distances": list(self.distances.as_tuple()),
            "hb": self.hb,
            "hb_strict": self.hb_strict,
            "lp": None if self.lp is None else self.lp.to_dict(),
            "sdp": None if self.sdp is None else self.sdp.to_dict(),
            "b": self.b,
            "integer_bound": self.integer_bound,
            "flagged": self.flagged,
            "refined": self.refined,
        }


def _records_for(k: KTriple, d3: np.ndarray, n: int) -> tuple[list[DistanceTriple], np.ndarray, np.ndarray, np.ndarray]:
    d1, d2, d3, ok = recover_arrays(k, d3)
    if (~ok).any():
        log.debug("%s: %d samples out of domain", k, int((~ok).sum()))
    d1, d2, d3 = d1[ok], d2[ok], d3[ok]
    strict, upper = harmonic_bound_array(n, d1, d2, d3)
    pts = [DistanceTriple(float(a), float(b), float(c)) for a, b, c in zip(d1, d2, d3)]
    return pts, d3, strict, upper


@dataclass
class TripleSweep:
    """All samples of one K-triple plus the refined points near maxima."""

    n: int
    k_triple: KTriple
    ceiling: int
    records: list[BoundRecord]

    def red(self) -> list[BoundRecord]:
        return [r for r in self.records if r.hb > self.ceiling]

    def grid_records(self) -> list[BoundRecord]:
        return sorted((r for r in self.records if not r.refined), key=lambda r: r.d3)

    def max_in_red(self, kind: str) -> Optional[BoundRecord]:
        cands = [r for r in self.red() if math.isfinite(r.curve_value(kind))]
        return max(cands, key=lambda r: r.curve_value(kind), default=None)

    @property
    def failures(self) -> int:
        return sum(r.flagged for r in self.records)


def sweep_triple(
    n: int,
    k: KTriple,
    config: SweepConfig = SweepConfig(),
    region: str = "red",
    evaluator: Optional[Evaluator] = None,
) -> TripleSweep:
    """Evaluate HB everywhere and LP/SDP on the chosen region, then refine maxima.

    ``region="red"`` restricts solves to samples whose harmonic bound exceeds
    the blue ceiling h1 + h3; ``"all"`` solves every in-domain sample.
    """
    if region not in ("red", "all"):
        raise ValueError(f"unknown region {region!r}")
    ev = evaluator or Evaluator(n, config)
    ceiling = blue_ceiling(n)
    pts, d3, strict, upper = _records_for(k, config.grid(), n)
    chosen = [i for i in range(len(pts)) if region == "all" or upper[i] > ceiling]
    sel = [pts[i] for i in chosen]
    lps = ev.many("lp", sel) if config.use_lp else [None] * len(sel)
    sdps = ev.many("sdp", sel)
    solved = dict(zip(chosen, zip(lps, sdps)))
    records = []
    for i, d in enumerate(pts):
        lp, sdp = solved.get(i, (None, None))
        records.append(BoundRecord(k, float(d3[i]), d, int(upper[i]), int(strict[i]), lp, sdp))
    sweep = TripleSweep(n, k, ceiling, records)
    for kind in ("sdp", "lp") if config.use_lp else ("sdp",):
        sweep.records.extend(_refine(sweep, kind, config, ev, region))
    return sweep


def _local_maxima(recs: list[BoundRecord], kind: str, step: float) -> list[int]:
    """Interior grid maxima: both grid neighbours present and no larger.

    A curve that peaks where the region ends has no interior maximum there;
    bisecting it would only creep toward the edge, so it is left at the grid.
    """
    vals = np.array([r.curve_value(kind) for r in recs])
    d3 = np.array([r.d3 for r in recs])
    out = []
    for i in range(1, len(recs) - 1):
        if not np.isfinite(vals[i - 1 : i + 2]).all():
            continue
        if d3[i] - d3[i - 1] > 1.5 * step or d3[i + 1] - d3[i] > 1.5 * step:
            continue
        if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]:
            out.append(i)
    return sorted(out, key=lambda i: -vals[i])


def _refine(sweep: TripleSweep, kind: str, config: SweepConfig, ev: Evaluator, region: str) -> list[BoundRecord]:
    """Bisect around the strongest local maxima of one curve down to ``refine_tol``."""
    base = [r for r in sweep.grid_records() if r.curve_value(kind) == r.curve_value(kind)]
    if region == "red":
        base = [r for r in base if r.hb > sweep.ceiling]
    extra: list[BoundRecord] = []
    seen = {r.d3 for r in sweep.records}
    for idx in _local_maxima(base, kind, config.step)[: config.refine_count]:
        best = base[idx]
        h = config.step
        while h > config.refine_tol:
            h /= 2
            for x in (best.d3 - h, best.d3 + h):
                x = round(x, 12)
                if x in seen:
                    continue
                rec = _evaluate_single(sweep.n, sweep.k_triple, x, config, ev)
                if rec is None:
                    continue
                seen.add(x)
                extra.append(rec)
                if region == "red" and rec.hb <= sweep.ceiling:
                    continue
                if rec.curve_value(kind) > best.curve_value(kind):
                    best = rec
    return extra


def _evaluate_single(n: int, k: KTriple, d3: float, config: SweepConfig, ev: Evaluator) -> Optional[BoundRecord]:
    pts, d3s, strict, upper = _records_for(k, np.array([d3]), n)
    if not pts:
        return None
    d = pts[0]
    lp = ev.one("lp", d) if config.use_lp else None
    sdp = ev.one("sdp", d)
    return BoundRecord(k, float(d3s[0]), d, int(upper[0]), int(strict[0]), lp, sdp, refined=True)


# ---------------------------------------------------------- dimension bound


@dataclass
class TripleSummary:
    k_triple: KTriple
    bound: int
    argmax_d3: Optional[float]
    hb_ceiling: int
    samples: int
    solved_lp: int
    solved_sdp: int
    failures: int
    unresolved: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k_triple"] = list(self.k_triple.as_tuple())
        return d


@dataclass
class SweepReport:
    dimension: int
    triples: list[TripleSummary]
    floor_bound: int
    overall: int
    non_rigorous: bool
    grid: dict
    solver: str

    @property
    def failures(self) -> int:
        return sum(t.failures for t in self.triples)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "overall": self.overall,
            "floor_bound": self.floor_bound,
            "non_rigorous": self.non_rigorous,
            "failures": self.failures,
            "grid": self.grid,
            "solver": self.solver,
            "triples": [t.to_dict() for t in self.triples],
        }


def triple_bound(
    n: int,
    k: KTriple,
    config: SweepConfig,
    evaluator: Evaluator,
    ceiling: Optional[int] = None,
) -> TripleSummary:
    """Exact maximum over grid samples of the integer bound, with pruning.

    Samples are visited in decreasing harmonic bound, so once HB drops to the
    running maximum nothing later can raise it. The LP is tried before the
    SDP because it is an order of magnitude cheaper.
    """
    ceiling = blue_ceiling(n) if ceiling is None else ceiling
    pts, d3, _strict, upper = _records_for(k, config.grid(), n)
    if not pts:
        return TripleSummary(k, 0, None, 0, 0, 0, 0, 0, 0)
    # seed with the sample closest to d3 = 1, which HB alone controls
    seed = int(np.argmax(d3))
    order = [seed] + [i for i in np.lexsort((-d3, -upper)) if i != seed]
    best, arg = -1, None
    n_lp = n_sdp = fails = unresolved = 0
    for pos, i in enumerate(order):
        hb = int(upper[i])
        if pos > 0 and hb <= best:
            break
        cur = hb
        lp = None
        if config.use_lp:
            lp = evaluator.one("lp", pts[i])
            n_lp += 1
            cur = int(min(cur, lp.integer))
        sdp_failed = False
        if cur > best:
            sdp = evaluator.one("sdp", pts[i])
            n_sdp += 1
            sdp_failed = not sdp.ok
            cur = int(min(cur, sdp.integer))
        if sdp_failed:
            fails += 1
            if cur > ceiling:
                unresolved += 1
        if cur > best:
            best, arg = cur, float(d3[i])
    return TripleSummary(k, best, arg, int(upper[seed]), len(pts), n_lp, n_sdp, fails, unresolved)


def dimension_bound(
    n: int,
    config: SweepConfig = SweepConfig(),
    triples: Optional[Iterable[KTriple]] = None,
    progress: Optional[Callable[[TripleSummary], None]] = None,
) -> SweepReport:
    ctx = triple_context(n)
    ev = Evaluator(n, config)
    ceiling = blue_ceiling(n)
    summaries = []
    for k in (enumerate_k_triples(n) if triples is None else triples):
        s = triple_bound(n, k, config, ev, ceiling)
        log.info("n=%d %s -> %d (lp %d, sdp %d)", n, k, s.bound, s.solved_lp, s.solved_sdp)
        summaries.append(s)
        if progress:
            progress(s)
    floor_bound = 2 * ctx.N - 1
    overall = max([s.bound for s in summaries] + [floor_bound])
    return SweepReport(
        dimension=n,
        triples=summaries,
        floor_bound=floor_bound,
        overall=overall,
        non_rigorous=any(s.unresolved for s in summaries),
        grid={"step": config.step, "p_lp": config.params.p_lp, "p_sdp": config.params.p_sdp,
              "use_lp": config.use_lp, "config_hash": config.fingerprint()},
        solver=ev.info,
    )


# ---------------------------------------------------------- improved triples


@dataclass(frozen=True)
class Improvement:
    k_triple: KTriple
    lp_era: float
    sdp_era: float
    ceiling: int

    @property
    def improved(self) -> bool:
        return self.lp_era > self.ceiling >= self.sdp_era


def triple_improvement(n: int, k: KTriple, config: SweepConfig, evaluator: Evaluator) -> Improvement:
    """Compare the worst red-region bound with and without the SDP.

    Values include their safety margins. The SDP is only solved where LP and
    HB together fail to reach the ceiling, since elsewhere it cannot matter.
    """
    ceiling = blue_ceiling(n)
    pts, _d3, _s, upper = _records_for(k, config.grid(), n)
    red = [i for i in range(len(pts)) if upper[i] > ceiling]
    if not red:
        return Improvement(k, -math.inf, -math.inf, ceiling)
    lps = evaluator.many("lp", [pts[i] for i in red])
    before = [min(float(upper[i]), lp.certified) for i, lp in zip(red, lps)]
    hot = [j for j, v in enumerate(before) if v > ceiling]
    sdps = evaluator.many("sdp", [pts[red[j]] for j in hot])
    after = list(before)
    for j, sdp in zip(hot, sdps):
        after[j] = min(after[j], sdp.certified)
    return Improvement(k, max(before), max(after), ceiling)


def improved_triples(n: int, config: SweepConfig = SweepConfig()) -> list[Improvement]:
    ev = Evaluator(n, config)
    return [imp for k in enumerate_k_triples(n) if (imp := triple_improvement(n, k, config, ev)).improved]


# -------------------------------------------------------- exploratory grid


@dataclass
class GridReport:
    """Result of the exploratory sweep over (d1, d2, d3) without integrality.

    Only grid nodes are examined, so the bound is not rigorous.
    """

    dimension: int
    parts: tuple[int, int, int]
    cells: int
    sdp_bound: int
    lp_bound: int
    argmax_sdp: Optional[tuple[float, float, float]]
    argmax_lp: Optional[tuple[float, float, float]]
    solved_lp: int
    solved_sdp: int
    failures: int
    solver: str
    rigorous: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = "non-rigorous exploratory sweep (grid nodes only)"
        return d


def grid_nodes(parts: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interior nodes: d1, d2 on (-1, 1) and d3 on (0, 1), ordered d1 < d2 < d3."""
    p1, p2, p3 = parts
    a = np.round(-1 + 2 * np.arange(1, p1) / p1, 12)
    b = np.round(-1 + 2 * np.arange(1, p2) / p2, 12)
    c = np.round(np.arange(1, p3) / p3, 12)
    d1, d2, d3 = (x.ravel() for x in np.meshgrid(a, b, c, indexing="ij"))
    keep = (d1 < d2) & (d2 < d3)
    return d1[keep], d2[keep], d3[keep]


def _grid_max(kind: str, pts_hb: np.ndarray, pts: tuple, ev: Evaluator) -> tuple[int, Optional[int], int, int]:
    order = np.argsort(-pts_hb, kind="stable")
    best, arg, solved, fails = -1, None, 0, 0
    for i in order:
        hb = int(pts_hb[i])
        if hb <= best:
            break
        d = DistanceTriple(float(pts[0][i]), float(pts[1][i]), float(pts[2][i]))
        bv = ev.one(kind, d)
        solved += 1
        fails += not bv.ok
        cur = int(min(hb, bv.integer))
        if cur > best:
            best, arg = cur, int(i)
    return best, arg, solved, fails


def grid_sweep_unreduced(
    n: int,
    parts: tuple[int, int, int] = (100, 100, 50),
    config: SweepConfig = SweepConfig(),
) -> GridReport:
    """Max over grid nodes of min(SDP, HB) and, separately, of min(LP, HB)."""
    d1, d2, d3 = grid_nodes(parts)
    _strict, upper = harmonic_bound_array(n, d1, d2, d3)
    ev = Evaluator(n, config)
    pts = (d1, d2, d3)
    lp_best, lp_arg, lp_n, lp_f = _grid_max("lp", upper, pts, ev)
    sdp_best, sdp_arg, sdp_n, sdp_f = _grid_max("sdp", upper, pts, ev)

    def node(i):
        return None if i is None else (float(d1[i]), float(d2[i]), float(d3[i]))

    return GridReport(
        dimension=n, parts=tuple(parts), cells=int(d1.size),
        sdp_bound=sdp_best, lp_bound=lp_best, argmax_sdp=node(sdp_arg), argmax_lp=node(lp_arg),
        solved_lp=lp_n, solved_sdp=sdp_n, failures=lp_f + sdp_f, solver=ev.info,
    )


__all__ = [
    "BoundRecord", "Evaluator", "GridReport", "Improvement", "ResultCache", "SweepConfig",
    "SweepReport", "TripleSummary", "TripleSweep", "dimension_bound", "grid_nodes",
    "grid_sweep_unreduced", "improved_triples", "sweep_triple", "triple_bound",
    "triple_improvement",
]
