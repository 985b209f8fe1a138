"""Interval certificates: constraint polynomials, transform, Gram matrices, audit."""

from __future__ import annotations

import copy

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from tridist.errors import ParameterError
from tridist.ktriples import KTriple, recover_distances
from tridist.poly import Polynomial, poly_mul
from tridist.programs import sdp_bound
from tridist.sos import (
    DualLayout, DualVariables, SosCertificate, audit_certificate, certify_interval,
    constraint_polynomials, dual_constraint_values, gram_residual, gram_verify,
    interval_transform, stack_blocks,
)
from tridist.threepoint import SdpParams

PARAMS = SdpParams(18, 6)
LAY = DualLayout(18, 6)


def zero_dual() -> DualVariables:
    return LAY.unpack(np.zeros(LAY.size))


def random_dual(rng) -> DualVariables:
    v = rng.normal(size=LAY.size)
    return LAY.unpack(v)


def local_value(poly: Polynomial, a: float, interval) -> float:
    mid, half = 0.5 * (interval[0] + interval[1]), 0.5 * (interval[1] - interval[0])
    return float(poly((a - mid) / half))


# ------------------------------------------------------ constraint polynomials


def test_only_beta22_negative_gives_unit_slack():
    dual = zero_dual()
    dual.beta[1, 1] = -1.0
    v = LAY.pack(dual)
    cons = constraint_polynomials(7, KTriple(1, -3, 3), PARAMS, (0.475, 0.48))
    assert len(cons) == 13
    # the ten product constraints become 1 >= 0, identically in d3
    for c in cons[3:]:
        p = c.evaluate(v).coeffs
        assert p[0] == pytest.approx(1.0, abs=1e-12)
        assert np.abs(p[1:]).max() < 1e-12


def test_degree_bound():
    cons = constraint_polynomials(23, KTriple(3, -8, 6), PARAMS, (0.332, 0.335))
    for c in cons[:3]:
        assert c.degree <= 18
    for c in cons[3:]:
        assert c.degree <= 12


@pytest.mark.parametrize("route", ["interpolate", "compose"])
def test_polynomials_match_pointwise_values(route):
    k = KTriple(3, -8, 6)
    interval = (0.30, 0.36)
    cons = constraint_polynomials(23, k, PARAMS, interval, route=route)
    rng = np.random.default_rng(3)
    for _ in range(3):
        dual = random_dual(rng)
        v = LAY.pack(dual)
        for a in (1 / 3, 0.31, 0.355):
            d = recover_distances(k, a)
            want = dual_constraint_values(23, d, dual, PARAMS)
            got = np.array([local_value(c.evaluate(v), a, interval) for c in cons])
            assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(want).max()))


def test_k386_at_one_third_is_the_symmetric_triple():
    d = recover_distances(KTriple(3, -8, 6), 1 / 3)
    assert np.allclose(d.as_tuple(), (-1 / 3, 0.0, 1 / 3), atol=1e-12)


def test_unknown_route():
    with pytest.raises(ParameterError):
        constraint_polynomials(7, KTriple(1, -3, 3), PARAMS, (0.475, 0.48), route="symbolic")


# -------------------------------------------------------- interval transform


def test_transform_constant():
    out = interval_transform(Polynomial([2.5, 0.0, 0.0]), 0.1, 0.4, m=2)
    assert np.allclose(out.coeffs[:5], [2.5, 0, 5.0, 0, 2.5])


def test_transform_identity_on_unit_interval():
    out = interval_transform(Polynomial([0.0, 1.0]), 0.0, 1.0)
    assert np.allclose(out.coeffs[:3], [0.0, 0.0, 1.0])
    assert np.abs(out.coeffs[3:]).max(initial=0.0) < 1e-15


def test_transform_bump_is_nonnegative():
    a1, a2 = 0.2, 0.7
    f = poly_mul(Polynomial([-a1, 1.0]), Polynomial([a2, -1.0]))
    fp = interval_transform(f, a1, a2)
    assert fp.degree % 2 == 0
    xs = np.random.default_rng(0).normal(scale=5.0, size=50)
    assert (fp(xs) >= -1e-12).all()


def test_transform_rejects_empty_interval():
    with pytest.raises(ParameterError):
        interval_transform(Polynomial([1.0]), 0.5, 0.5)


def _square(coeffs):
    p = Polynomial(list(coeffs))
    return poly_mul(p, p)


@hsettings(max_examples=40)
@given(
    a1=st.floats(-0.9, 0.8),
    width=st.floats(0.01, 0.9),
    s0=st.lists(st.floats(-2, 2), min_size=1, max_size=4),
    s1=st.lists(st.floats(-2, 2), min_size=1, max_size=3),
)
def test_transform_preserves_interval_nonnegativity(a1, width, s0, s1):
    a2 = min(a1 + width, 0.99)
    bump = poly_mul(Polynomial([-a1, 1.0]), Polynomial([a2, -1.0]))
    sig0, sig1 = _square(s0), poly_mul(bump, _square(s1))
    m = max(sig0.coeffs.size, sig1.coeffs.size) - 1
    n0, n1 = np.zeros(m + 1), np.zeros(m + 1)
    n0[: sig0.coeffs.size] = sig0.coeffs
    n1[: sig1.coeffs.size] = sig1.coeffs
    f = Polynomial(n0 + n1)
    fp = interval_transform(f, a1, a2, m=m)
    xs = np.random.default_rng(1).normal(scale=3.0, size=100)
    scale = 1.0 + np.abs(f.coeffs).sum() * (1 + xs**2) ** m
    assert (fp(xs) >= -1e-10 * scale).all()


# ------------------------------------------------------------ Gram matrices


def test_gram_single_square():
    Q = gram_verify(Polynomial([0.0, 0.0, 1.0]))
    assert Q is not None
    assert np.allclose(Q, [[0.0, 0.0], [0.0, 1.0]], atol=1e-7)


def test_gram_square_of_quadratic():
    c = np.array([1.0, 0.0, 2.0, 0.0, 1.0])
    Q = gram_verify(Polynomial(c))
    assert Q is not None and Q.shape == (3, 3)
    assert np.linalg.eigvalsh(Q)[0] >= -1e-8
    assert np.abs(gram_residual(c, Q)).max() <= 1e-7


def test_gram_negative_constant_fails():
    assert gram_verify(Polynomial([-1.0])) is None


def test_gram_negative_somewhere_fails():
    # a^2 - 1 is negative at 0
    assert gram_verify(Polynomial([-1.0, 0.0, 1.0])) is None


def test_gram_odd_degree_raises():
    with pytest.raises(ParameterError):
        gram_verify(Polynomial([0.0, 0.0, 0.0, 1.0]))


@hsettings(max_examples=25)
@given(st.lists(st.lists(st.floats(-3, 3), min_size=3, max_size=3), min_size=1, max_size=3))
def test_gram_finds_sums_of_squares(rows):
    total = np.zeros(5)
    for r in rows:
        sq = _square(r).coeffs[:5]
        total[: sq.size] += sq
    total[0] += 0.1
    total[4] += 0.1  # strictly positive, leading term present
    Q = gram_verify(Polynomial(total))
    assert Q is not None
    assert np.abs(gram_residual(total, Q)).max() <= 1e-7 * max(1.0, np.abs(total).max())


@hsettings(max_examples=30)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=5), st.integers(0, 10_000))
def test_block_assembly_min_eigenvalue(orders, seed):
    rng = np.random.default_rng(seed)
    blocks = []
    for r in orders:
        A = rng.normal(size=(r, r))
        blocks.append(A @ A.T + rng.uniform(-0.5, 0.5) * np.eye(r))
    big = stack_blocks(blocks)
    want = min(np.linalg.eigvalsh(b)[0] for b in blocks)
    assert np.linalg.eigvalsh(big)[0] == pytest.approx(want, abs=1e-9)


# ------------------------------------------------------------- certificates


@pytest.fixture(scope="module")
def cert7():
    return certify_interval(7, KTriple(1, -3, 3), 0.475, 0.480, PARAMS)


def test_certificate_value(cert7):
    assert cert7.certified_value == pytest.approx(80.29, rel=0.01)
    assert len(cert7.grams) == 13


def test_fresh_certificate_passes_audit(cert7):
    rep = audit_certificate(cert7)
    assert rep.passed, rep.messages
    assert rep.identity_residual <= 1e-7
    assert min(rep.min_eigenvalues.values()) >= -1e-8


def test_certificate_dominates_pointwise_sdp(cert7):
    for a in np.linspace(0.475, 0.480, 4):
        bv = sdp_bound(7, recover_distances(KTriple(1, -3, 3), float(a)), PARAMS)
        assert bv.ok
        assert cert7.certified_value >= bv.value - 1e-6 * max(1.0, bv.value)


def test_perturbed_gram_entry_fails(cert7):
    bad = copy.deepcopy(cert7)
    Q = bad.grams[0].Q
    Q[0, 1] += 1e-3
    Q[1, 0] += 1e-3
    rep = audit_certificate(bad)
    assert not rep.passed
    assert rep.identity_residual > 1e-7


def test_shifted_gram_fails_eigenvalue_floor(cert7):
    bad = copy.deepcopy(cert7)
    i = min(range(13), key=lambda j: np.linalg.eigvalsh(bad.grams[j].Q)[0])
    assert np.linalg.eigvalsh(bad.grams[i].Q)[0] < 1e-3
    bad.grams[i].Q = bad.grams[i].Q - 1e-3 * np.eye(bad.grams[i].Q.shape[0])
    assert not audit_certificate(bad).passed


def test_negative_alpha_fails(cert7):
    bad = copy.deepcopy(cert7)
    bad.dual.alphas[0] = -1e-3
    assert not audit_certificate(bad).passed


def test_stated_value_must_match(cert7):
    bad = copy.deepcopy(cert7)
    bad.certified_value -= 1.0
    assert not audit_certificate(bad).passed


def test_round_trip(cert7, tmp_path):
    path = tmp_path / "c.json"
    cert7.save(path)
    back = SosCertificate.load(path)
    assert back.certified_value == cert7.certified_value
    assert back.k_triple == cert7.k_triple
    assert audit_certificate(back).passed


def test_certify_rejects_out_of_domain():
    with pytest.raises(ParameterError):
        certify_interval(7, KTriple(1, -3, 3), 0.5, 0.4, PARAMS)
    with pytest.raises(ParameterError):
        certify_interval(7, KTriple(1, -3, 3), 0.9, 1.0, PARAMS)
