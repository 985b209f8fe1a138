"""Harmonic absolute bound and the Delsarte-Goethals-Seidel bound for three-distance sets."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ConsistencyError, ParameterError
from .poly import gegenbauer_table

SIGN_TOL = 1e-9
CROSS_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class DistanceTriple:
    """Three inner products ordered as -1 <= d1 < d2 < d3 < 1."""

    d1: float
    d2: float
    d3: float

    def __post_init__(self) -> None:
        if not (-1.0 <= self.d1 < self.d2 < self.d3 < 1.0):
            raise ParameterError(f"need -1 <= d1 < d2 < d3 < 1, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.d1, self.d2, self.d3)

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True)
class AnnihilatorCoeffs:
    """Gegenbauer coefficients of the monic cubic vanishing on the three inner products."""

    f0: float
    f1: float
    f2: float
    f3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f0, self.f1, self.f2, self.f3])


@dataclass(frozen=True)
class HarmonicBound:
    """Result of the harmonic bound.

    ``value`` counts only coefficients that are positive beyond the sign
    tolerance; ``upper`` also counts the ones within tolerance of zero, which
    is the safe choice whenever ``ambiguous`` is set.
    """

    value: int
    upper: int
    ambiguous: bool
    coeffs: AnnihilatorCoeffs

    def __int__(self) -> int:
        return self.value


def dgs_bound(n: int, s: int) -> int:
    if n < 1 or s < 1:
        raise ParameterError("need n >= 1 and s >= 1")
    return comb(n + s - 1, n - 1) + comb(n + s - 2, n - 1)


def harmonic_space_dim(n: int, k: int) -> int:
    if n < 2 or k < 0:
        raise ParameterError("need n >= 2 and k >= 0")
    return comb(n + k - 1, k) - (comb(n + k - 3, k - 2) if k >= 2 else 0)


def _closed_form(n: int, d1, d2, d3):
    e1 = d1 + d2 + d3
    e2 = d1 * d2 + d1 * d3 + d2 * d3
    e3 = d1 * d2 * d3
    f0 = -e3 - e1 / n
    f1 = e2 + 3.0 / (n + 2)
    f2 = (1.0 - n) / n * e1
    f3 = (n - 1.0) / (n + 2)
    return f0, f1, f2, f3


def _fit_cubic(n: int, d: DistanceTriple) -> np.ndarray:
    """Least-squares expansion of (x-d1)(x-d2)(x-d3) in G_0..G_3 at ten nodes."""
    x = np.linspace(-1.0, 1.0, 10)
    basis = gegenbauer_table(n, 3, x).T
    target = (x - d.d1) * (x - d.d2) * (x - d.d3)
    sol, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return sol


def annihilator_coeffs(n: int, d: DistanceTriple) -> AnnihilatorCoeffs:
    """Closed-form coefficients, verified against a direct numerical expansion."""
    if n < 2:
        raise ParameterError("need n >= 2")
    closed = np.array(_closed_form(n, d.d1, d.d2, d.d3))
    fitted = _fit_cubic(n, d)
    if np.abs(closed - fitted).max() > CROSS_CHECK_TOL:
        raise ConsistencyError(f"closed form {closed} disagrees with fit {fitted}")
    return AnnihilatorCoeffs(*map(float, closed))


def harmonic_bound(n: int, d: DistanceTriple, sign_tol: float = SIGN_TOL) -> HarmonicBound:
    coeffs = annihilator_coeffs(n, d)
    h = [harmonic_space_dim(n, k) for k in range(4)]
    f = coeffs.as_array()
    strict = sum(hk for hk, fk in zip(h, f) if fk > sign_tol)
    loose = sum(hk for hk, fk in zip(h, f) if fk > -sign_tol)
    return HarmonicBound(strict, loose, loose != strict, coeffs)


def harmonic_bound_array(n: int, d1, d2, d3, sign_tol: float = SIGN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (strict, upper) harmonic bounds for arrays of inner products."""
    f = np.stack(np.broadcast_arrays(*_closed_form(n, *map(np.asarray, (d1, d2, d3)))))
    h = np.array([harmonic_space_dim(n, k) for k in range(4)], dtype=np.int64)
    strict = np.tensordot(h, f > sign_tol, axes=(0, 0))
    upper = np.tensordot(h, f > -sign_tol, axes=(0, 0))
    return strict.astype(np.int64), upper.astype(np.int64)


def blue_ceiling(n: int) -> int:
    """Harmonic bound as all three inner products approach 1: h_1 + h_3."""
    return harmonic_space_dim(n, 1) + harmonic_space_dim(n, 3)
