"""Sweep engine: caching, records, per-triple maxima, dimension bounds, grid mode."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tridist.conic import SolverSettings, solver_info
from tridist.harmonic import DistanceTriple, blue_ceiling, harmonic_bound
from tridist.ktriples import KTriple, moment_residuals, triple_context, recover_arrays
from tridist.programs import BoundValue
from tridist.sweep import (
    BoundRecord, Evaluator, ResultCache, SweepConfig, _local_maxima, dimension_bound, grid_nodes,
    improved_triples, sweep_triple,
)
from tridist.threepoint import SdpParams

K7 = KTriple(1, -3, 3)


@pytest.fixture(scope="module")
def shared(cache_dir):
    return SweepConfig(cache_dir=cache_dir)


@pytest.fixture(scope="module")
def sweep7(shared):
    return sweep_triple(7, K7, shared)


# -------------------------------------------------------------------- cache


def test_cache_round_trip_in_memory():
    c = ResultCache()
    d = DistanceTriple(-0.5, 0.0, 0.5)
    desc = ResultCache.describe("sdp", 7, d, SdpParams(), "cvxopt")
    assert c.get(desc) is None
    bv = BoundValue(80.1, "optimal", 1e-6, "cvxopt", 0.05)
    c.put(desc, bv)
    back = c.get(desc)
    assert back.value == bv.value and back.status == bv.status
    assert back.safety_margin == bv.safety_margin
    assert len(c) == 1 and c.hits == 1 and c.misses == 1


def test_cache_persists_across_connections(tmp_path):
    path = str(tmp_path / "sub" / "r.sqlite")
    desc = ResultCache.describe("lp", 23, DistanceTriple(-1 / 3, 0.0, 1 / 3), SdpParams(), "x")
    c = ResultCache(path)
    c.put(desc, BoundValue(math.nan, "solver-failure", math.nan, "x"))
    c.close()
    again = ResultCache(path)
    got = again.get(desc)
    assert got is not None and not got.ok
    assert math.isinf(got.integer)


def test_cache_key_separates_inputs():
    d = DistanceTriple(-0.5, 0.0, 0.5)
    base = ResultCache.describe("sdp", 7, d, SdpParams(), "a")
    variants = [
        ResultCache.describe("lp", 7, d, SdpParams(), "a"),
        ResultCache.describe("sdp", 8, d, SdpParams(), "a"),
        ResultCache.describe("sdp", 7, DistanceTriple(-0.5, 0.0, 0.5000001), SdpParams(), "a"),
        ResultCache.describe("sdp", 7, d, SdpParams(18, 5), "a"),
        ResultCache.describe("sdp", 7, d, SdpParams(), "b"),
    ]
    keys = {ResultCache.key(x) for x in variants + [base]}
    assert len(keys) == 6
    assert all(len(k) == 64 for k in keys)


def test_lp_key_ignores_sdp_degree():
    d = DistanceTriple(-0.5, 0.0, 0.5)
    assert ResultCache.describe("lp", 7, d, SdpParams(18, 6), "a") == ResultCache.describe("lp", 7, d, SdpParams(18, 5), "a")


def test_evaluator_serves_repeat_from_cache():
    ev = Evaluator(7, SweepConfig())
    d = DistanceTriple(-0.6, -0.1, 0.45)
    first = ev.one("lp", d)
    second = ev.one("lp", d)
    assert ev.cache.hits == 1
    assert first.value == second.value


def test_parallel_matches_serial():
    pts = [DistanceTriple(-0.7, -0.2 + 0.01 * i, 0.4) for i in range(4)]
    serial = Evaluator(7, SweepConfig()).many("lp", pts)
    par = Evaluator(7, SweepConfig(workers=2)).many("lp", pts)
    assert [a.value for a in serial] == pytest.approx([b.value for b in par], rel=1e-9)


# ------------------------------------------------------------------- config


@pytest.mark.parametrize("kw", [dict(step=0.0), dict(step=0.7), dict(refine_tol=0.01, step=0.001), dict(workers=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SweepConfig(**kw)


def test_grid_points():
    g = SweepConfig(step=0.001).grid()
    assert g.size == 999
    assert g[0] == pytest.approx(0.001) and g[-1] == pytest.approx(0.999)
    assert (g > 0).all() and (g < 1).all()


def test_fingerprint_tracks_solver():
    a = SweepConfig()
    b = SweepConfig(settings=SolverSettings(feastol=1e-7))
    assert a.fingerprint() != b.fingerprint()
    assert solver_info(a.settings) != solver_info(b.settings)


# ------------------------------------------------------------------ records


def _record(hb: int, lp=None, sdp=None) -> BoundRecord:
    return BoundRecord(K7, 0.4, DistanceTriple(-0.8, -0.1, 0.4), hb, hb, lp, sdp)


def test_record_min_and_flags():
    ok = BoundValue(80.3, "optimal", 0.001)
    bad = BoundValue(math.nan, "solver-failure", math.nan)
    r = _record(120, BoundValue(91.0, "optimal", 0.001), ok)
    assert r.b == pytest.approx(80.3)
    assert r.integer_bound == 80
    assert not r.flagged
    f = _record(120, None, bad)
    assert f.flagged and f.b == 120 and f.integer_bound == 120
    assert math.isnan(f.curve_value("sdp"))


def _curve(d3s, vals):
    return [BoundRecord(K7, x, DistanceTriple(-0.8, -0.1, 0.4), 99, 99, None,
                        BoundValue(v, "optimal", 0.0)) for x, v in zip(d3s, vals)]


def test_edge_peak_is_not_a_local_maximum():
    rising = _curve([0.551, 0.552, 0.553, 0.554], [1.0, 2.0, 3.0, 4.0])
    assert _local_maxima(rising, "sdp", 0.001) == []


def test_maximum_next_to_a_gap_is_skipped():
    recs = _curve([0.1, 0.2, 0.201, 0.202], [1.0, 5.0, 2.0, 1.0])
    assert _local_maxima(recs, "sdp", 0.001) == []


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30))
def test_local_maxima_are_interior_peaks(vals):
    recs = _curve([0.001 * (i + 1) for i in range(len(vals))], vals)
    found = _local_maxima(recs, "sdp", 0.001)
    for i in found:
        assert 0 < i < len(vals) - 1
        assert vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]
    brute = [i for i in range(1, len(vals) - 1) if vals[i] >= max(vals[i - 1], vals[i + 1])]
    assert sorted(found) == brute


def test_sweep_records_invariants(sweep7):
    assert sweep7.records
    for r in sweep7.records:
        assert r.b <= r.hb
        if r.sdp is not None and r.sdp.ok:
            assert r.b <= r.sdp.value
        assert r.integer_bound <= r.hb
        d = r.distances
        assert -1 <= d.d1 < d.d2 < d.d3 < 1
        assert max(abs(x) for x in moment_residuals(K7, d)) < 1e-9


def test_out_of_domain_samples_are_skipped(sweep7, shared):
    grid = shared.grid()
    ok = recover_arrays(K7, grid)[3]
    assert len(sweep7.grid_records()) == int(ok.sum())
    assert ok.sum() < grid.size  # the triple does leave the domain somewhere


def test_red_region_only_solves_above_ceiling(sweep7):
    ceiling = blue_ceiling(7)
    for r in sweep7.grid_records():
        assert (r.sdp is not None) == (r.hb > ceiling)


def test_harmonic_values_in_records(sweep7):
    for r in sweep7.grid_records()[::50]:
        assert r.hb == harmonic_bound(7, r.distances).upper


# --------------------------------------------------------------- dimension 7


def test_sdp_red_maximum_n7(sweep7):
    best = sweep7.max_in_red("sdp")
    assert best.sdp.value == pytest.approx(80.23, rel=0.01)
    assert abs(best.d3 - 0.479) <= 0.005


def test_lp_red_maximum_n7(sweep7):
    best = sweep7.max_in_red("lp")
    assert best.lp.value == pytest.approx(91.22, rel=0.01)
    assert abs(best.d3 - 0.474) <= 0.005


def test_refinement_adds_points(sweep7):
    refined = [r for r in sweep7.records if r.refined]
    assert refined
    gaps = np.diff(sorted(r.d3 for r in sweep7.records))
    assert gaps.min() <= 1e-4 + 1e-12


def test_dimension_bound_n7(shared):
    rep = dimension_bound(7, shared)
    assert rep.overall == 84
    assert not rep.non_rigorous
    assert rep.overall <= 91  # LP-only bound
    assert rep.overall >= rep.floor_bound == 2 * triple_context(7).N - 1
    assert len(rep.triples) == 6


def test_improved_triples_n7(shared):
    imps = improved_triples(7, shared)
    assert [i.k_triple for i in imps] == [K7]
    assert imps[0].lp_era > 84 >= imps[0].sdp_era


@given(st.integers(2, 50))
def test_overall_never_below_floor(n):
    rep = dimension_bound(n, SweepConfig(), triples=[])
    assert rep.overall == rep.floor_bound == 2 * triple_context(n).N - 1
    assert 2 * n + 1 < rep.floor_bound


@pytest.mark.slow
def test_finer_grid_is_stable(sweep7, cache_dir):
    fine = sweep_triple(7, K7, SweepConfig(step=0.0005, cache_dir=cache_dir))
    for kind in ("lp", "sdp"):
        a = sweep7.max_in_red(kind).curve_value(kind)
        b = fine.max_in_red(kind).curve_value(kind)
        assert abs(a - b) <= 0.5


def test_unknown_region():
    with pytest.raises(ValueError):
        sweep_triple(7, K7, SweepConfig(), region="blue")


# ---------------------------------------------------------------- grid mode


def test_grid_node_count():
    d1, d2, d3 = grid_nodes((100, 100, 50))
    assert d1.size == 137_249
    assert (d1 < d2).all() and (d2 < d3).all()
    assert (d3 > 0).all() and (d3 < 1).all() and (d1 > -1).all()


@given(st.integers(2, 12), st.integers(2, 12), st.integers(2, 8))
def test_grid_nodes_brute_force(p1, p2, p3):
    d1, d2, d3 = grid_nodes((p1, p2, p3))
    count = 0
    for i in range(1, p1):
        for j in range(1, p2):
            for l in range(1, p3):
                a, b, c = -1 + 2 * i / p1, -1 + 2 * j / p2, l / p3
                count += a < b - 1e-12 and b < c - 1e-12
    assert d1.size == count


def test_grid_includes_the_reference_cell():
    d1, d2, d3 = grid_nodes((100, 100, 50))
    hit = np.isclose(d1, -0.76) & np.isclose(d2, -0.16) & np.isclose(d3, 0.54)
    assert hit.sum() == 1
