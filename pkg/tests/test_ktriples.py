import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tridist.errors import OutOfDomainError, ParameterError
from tridist.harmonic import DistanceTriple, harmonic_space_dim
from tridist.ktriples import (
    KTriple,
    enumerate_k_triples,
    k_from_distances,
    moment_residuals,
    triple_context,
    recover_arrays,
    recover_distances,
    rejected_branch,
)

TABLE_COUNTS = {7: 6, 20: 55, 21: 55, 23: 66, 24: 78, 25: 78}


def brute_force_triples(n):
    """Independent enumeration: scan every integer triple and a fine d3 grid."""
    ctx = triple_context(n)
    out = set()
    grid = np.arange(1, 200) * 0.005
    for k1 in range(-ctx.k_cap, ctx.k_cap + 1):
        for k2 in range(-ctx.k_cap, ctx.k_cap + 1):
            k3 = 1 - k1 - k2
            if abs(k3) > ctx.k_cap or k1 * k2 * k3 == 0 or k1 * k2 >= 0 or abs(k1) >= abs(k2) or -k1 * k2 * k3 <= 0:
                continue
            r = math.sqrt(-k1 * k2 * k3)
            for d3 in grid:
                d1 = (k1 - d3 * k1 * k3 - (d3 - 1) * r) / (k1 * (k1 + k2))
                d2 = (k2 - d3 * k2 * k3 + (d3 - 1) * r) / (k2 * (k1 + k2))
                if -1 <= d1 < d2 < d3:
                    out.add((k1, k2, k3))
                    break
    return sorted(out)


class TestContext:
    def test_examples(self):
        c = triple_context(23)
        assert (c.N, c.k_cap) == (299, 12)
        c = triple_context(2)
        assert (c.N, c.k_cap) == (5, 2)

    @pytest.mark.parametrize("n", range(2, 51))
    def test_invariants(self, n):
        c = triple_context(n)
        assert c.N == 1 + n + (n * (n + 1) // 2 - 1) == sum(harmonic_space_dim(n, k) for k in range(3))
        assert c.k_cap == math.floor(0.5 + math.sqrt(c.N ** 2 / (2 * c.N - 2) + 0.25))

    @pytest.mark.parametrize("n", range(2, 51))
    def test_rankin_cap_below_floor(self, n):
        assert 2 * n + 1 < 2 * triple_context(n).N - 1


class TestKTriple:
    @pytest.mark.parametrize("bad", [(1, -3, 2), (0, -1, 2), (2, 3, -4), (3, -2, 0), (-3, 4, 0), (1, 1, -1)])
    def test_invalid(self, bad):
        with pytest.raises(ParameterError):
            KTriple(*bad)

    def test_parse_and_str(self):
        k = KTriple.parse("(1,-3,3)")
        assert k == KTriple(1, -3, 3) and str(k) == "(1,-3,3)"


class TestEnumeration:
    @pytest.mark.parametrize("n,count", sorted(TABLE_COUNTS.items()))
    def test_counts(self, n, count):
        assert len(enumerate_k_triples(n)) == count

    @pytest.mark.parametrize("n", [7, 23])
    def test_against_brute_force(self, n):
        assert [k.as_tuple() for k in enumerate_k_triples(n)] == brute_force_triples(n)

    def test_named_triples_present(self):
        assert KTriple(1, -3, 3) in enumerate_k_triples(7)
        found = enumerate_k_triples(23)
        for k in [(1, -3, 3), (2, -6, 5), (3, -8, 6)]:
            assert KTriple(*k) in found

    @pytest.mark.parametrize("n", sorted(TABLE_COUNTS))
    def test_sorted_unique_valid(self, n):
        ks = enumerate_k_triples(n)
        assert ks == sorted(set(ks))
        for k in ks:
            assert k.k1 * k.k2 < 0 and abs(k.k1) < abs(k.k2) and 0 not in k.as_tuple()


class TestRecovery:
    def test_symmetric_example(self):
        d = recover_distances(KTriple(3, -8, 6), 1 / 3)
        assert np.allclose(d.as_tuple(), (-1 / 3, 0, 1 / 3), atol=1e-12)
        assert np.allclose(moment_residuals(KTriple(3, -8, 6), d), 0, atol=1e-12)

    def test_antipodal_boundary(self):
        d1, d2, d3, ok = recover_arrays(KTriple(1, -3, 3), np.array([1 / 3]))
        assert d1[0] == pytest.approx(-1.0, abs=1e-12)

    def test_collapse_near_one(self):
        with pytest.raises(OutOfDomainError):
            recover_distances(KTriple(1, -3, 3), 1.0)
        gaps = [d3 - recover_distances(KTriple(1, -3, 3), d3).d1 for d3 in (0.9, 0.99, 0.999)]
        assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.01

    def test_k_from_distances_examples(self):
        assert np.allclose(k_from_distances(DistanceTriple(-1 / 3, 0, 1 / 3)), (3, -8, 6))
        # rational oracle for the second triple
        d1, d2, d3 = Fraction(-1, 2), Fraction(0), Fraction(1, 2)
        exact = ((d2 - 1) * (d3 - 1) / ((d2 - d1) * (d3 - d1)),
                 (d1 - 1) * (d3 - 1) / ((d1 - d2) * (d3 - d2)),
                 (d1 - 1) * (d2 - 1) / ((d1 - d3) * (d2 - d3)))
        assert exact == (1, -3, 3)
        assert np.allclose(k_from_distances(DistanceTriple(-0.5, 0, 0.5)), [float(x) for x in exact])

    @given(st.lists(st.floats(-0.99, 0.99), min_size=3, max_size=3, unique=True).map(sorted))
    def test_k_sum_is_one(self, ds):
        assume(min(np.diff(ds)) > 1e-3)
        assert sum(k_from_distances(DistanceTriple(*ds))) == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("n", [7, 23])
    def test_round_trip_and_moments_on_sweep_grid(self, n):
        grid = np.round(np.arange(1, 1000) * 0.001, 12)
        for k in enumerate_k_triples(n):
            d1, d2, d3, ok = recover_arrays(k, grid)
            for a, b, c in zip(d1[ok], d2[ok], d3[ok]):
                d = DistanceTriple(float(a), float(b), float(c))
                assert np.allclose(k_from_distances(d), k.as_tuple(), atol=1e-8)
                assert max(map(abs, moment_residuals(k, d))) < 1e-9

    @given(st.sampled_from(enumerate_k_triples(23)), st.floats(0.001, 0.999))
    def test_rejected_branch_is_unordered(self, k, d3):
        d1s, d2s = rejected_branch(k, d3)
        assert d1s - d2s >= -1e-12
