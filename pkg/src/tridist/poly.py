"""Dense univariate polynomials and Gegenbauer polynomials.

Coefficients are stored lowest degree first in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import DegreeMismatchError, ParameterError

EQUALITY_TOL = 1e-9


class Polynomial:
    """Immutable polynomial with real coefficients, lowest degree first."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[float] | np.ndarray):
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        """Degree after dropping exact trailing zeros (zero polynomial has degree 0)."""
        nz = np.flatnonzero(self._c)
        return int(nz[-1]) if nz.size else 0

    def normalized(self) -> "Polynomial":
        return Polynomial(self._c[: self.degree + 1])

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self._c)

    def __add__(self, other) -> "Polynomial":
        return poly_add(self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Polynomial":
        return poly_add(self, poly_scale(_lift(other), -1.0))

    def __rsub__(self, other) -> "Polynomial":
        return poly_add(_lift(other), poly_scale(self, -1.0))

    def __neg__(self) -> "Polynomial":
        return poly_scale(self, -1.0)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return poly_scale(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "Polynomial":
        return poly_scale(self, 1.0 / float(other))

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ParameterError("negative power")
        out = Polynomial([1.0])
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def almost_equal(self, other: "Polynomial", tol: float = EQUALITY_TOL) -> bool:
        a, b = _pad(self._c, other._c)
        return bool(np.all(np.abs(a - b) <= tol))

    def __repr__(self) -> str:
        return f"Polynomial({self.normalized()._c.tolist()})"


def _lift(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial([float(x)])


def _pad(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size))


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    a, b = _pad(p.coeffs, q.coeffs)
    return Polynomial(a + b)


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(np.convolve(p.coeffs, q.coeffs))


def poly_scale(p: Polynomial, s: float) -> Polynomial:
    return Polynomial(p.coeffs * s)


def poly_compose_rational(
    p: Polynomial, num: Polynomial, den: Polynomial, m: int
) -> Polynomial:
    """Expand ``den(a)**m * p(num(a) / den(a))`` as a polynomial in ``a``."""
    if not np.any(den.coeffs):
        raise ParameterError("denominator is identically zero")
    if m < p.degree:
        raise ParameterError(f"m={m} is below deg p={p.degree}")
    out = Polynomial([0.0])
    num_pow = Polynomial([1.0])
    den_pows = [Polynomial([1.0])]
    for _ in range(m):
        den_pows.append(den_pows[-1] * den)
    for j, cj in enumerate(p.coeffs[: m + 1]):
        if cj != 0.0:
            out = out + cj * (num_pow * den_pows[m - j])
        num_pow = num_pow * num
    return out


def poly_compose(p: Polynomial, q: Polynomial) -> Polynomial:
    """Return ``p(q(x))`` by Horner's scheme."""
    out = Polynomial([0.0])
    for c in p.coeffs[::-1]:
        out = out * q + c
    return out


# ---------------------------------------------------------------- Gegenbauer


@dataclass(frozen=True)
class GegenbauerParams:
    n: int
    k: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or int(self.k) != self.k:
            raise ParameterError("n and k must be integers")
        if self.n < 2:
            raise ParameterError(f"dimension n={self.n} must be at least 2")
        if self.k < 0:
            raise ParameterError(f"degree k={self.k} must be nonnegative")


def gegenbauer_eval(params: GegenbauerParams, t):
    """Evaluate G_k^n at ``t`` (scalar or array) by the forward three-term recurrence."""
    n, k = params.n, params.k
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), t.copy()
    if k == 0:
        return prev if prev.ndim else float(prev)
    for j in range(2, k + 1):
        prev, cur = cur, ((2 * j + n - 4) * t * cur - (j - 1) * prev) / (j + n - 3)
    return cur if cur.ndim else float(cur)


def gegenbauer_table(n: int, kmax: int, t) -> np.ndarray:
    """Values G_0^n(t), ..., G_kmax^n(t) stacked along the first axis."""
    GegenbauerParams(n, kmax)
    t = np.asarray(t, dtype=float)
    out = np.empty((kmax + 1,) + t.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = t
    for j in range(2, kmax + 1):
        out[j] = ((2 * j + n - 4) * t * out[j - 1] - (j - 1) * out[j - 2]) / (j + n - 3)
    return out


@lru_cache(maxsize=None)
def _gegenbauer_coeff_rows(n: int, kmax: int) -> tuple[tuple[float, ...], ...]:
    rows = [np.array([1.0]), np.array([0.0, 1.0])]
    for j in range(2, kmax + 1):
        a = (2 * j + n - 4) * np.concatenate([[0.0], rows[j - 1]])
        b = (j - 1) * np.concatenate([rows[j - 2], [0.0, 0.0]])
        rows.append((a - b) / (j + n - 3))
    return tuple(tuple(r) for r in rows[: kmax + 1])


def gegenbauer_coeffs(params: GegenbauerParams) -> Polynomial:
    """Monomial coefficients of G_k^n, exact degree k."""
    return Polynomial(_gegenbauer_coeff_rows(params.n, max(params.k, 1))[params.k])


# ------------------------------------------------------------- interpolation


def chebyshev_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    """Chebyshev points of the first kind mapped to [lo, hi]."""
    j = np.arange(count)
    x = np.cos((2 * j + 1) * np.pi / (2 * count))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def interpolate(
    samples: Sequence[tuple[float, float]] | np.ndarray,
    degree: int,
    tol: float = 1e-9,
) -> Polynomial:
    """Least-squares fit of the stated degree, checked against every sample.

    The fit is done in a Chebyshev basis on the node range and converted to
    monomials afterwards. Residuals are measured relative to the largest sample
    magnitude (absolute when all samples are tiny).
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("samples must be (node, value) pairs")
    x, y = arr[:, 0], arr[:, 1]
    if np.unique(x).size != x.size:
        raise ParameterError("duplicate interpolation nodes")
    if x.size < degree + 1:
        raise ParameterError(f"need {degree + 1} nodes, got {x.size}")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return Polynomial([float(y[0])])
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    s = (x - mid) / half
    c = cheb.chebfit(s, y, degree)
    resid = np.abs(cheb.chebval(s, c) - y).max()
    scale = max(1.0, float(np.abs(y).max()))
    if resid > tol * scale:
        raise DegreeMismatchError(f"residual {resid:.3e} at degree {degree}")
    local = Polynomial(cheb.cheb2poly(c))
    out = poly_compose(local, Polynomial([-mid / half, 1.0 / half]))
    return Polynomial(out.coeffs[: degree + 1])


def interpolate_many(nodes: np.ndarray, values: np.ndarray, degree: int, tol: float = 1e-9) -> np.ndarray:
    """Batch form of :func:`interpolate` for nodes already spanning [-1, 1].

    ``values`` has shape (len(nodes), m); the result holds monomial
    coefficients column by column, shape (degree + 1, m).
    """
    x = np.asarray(nodes, dtype=float)
    y = np.asarray(values, dtype=float).reshape(x.size, -1)
    if np.unique(x).size != x.size:
        raise ParameterError("duplicate interpolation nodes")
    if x.size < degree + 1:
        raise ParameterError(f"need {degree + 1} nodes, got {x.size}")
    c = cheb.chebfit(x, y, degree)
    resid = np.abs(cheb.chebval(x, c).T - y).max(initial=0.0)
    if resid > tol * max(1.0, float(np.abs(y).max(initial=0.0))):
        raise DegreeMismatchError(f"residual {resid:.3e} at degree {degree}")
    return _cheb_to_mono(degree) @ c


def chebyshev_interpolate(values: np.ndarray, degree: int, tol: float = 1e-9) -> np.ndarray:
    """Monomial coefficients on [-1, 1] from samples at ``chebyshev_nodes(-1, 1, N)``.

    Uses the discrete orthogonality of Chebyshev polynomials at first-kind
    nodes, carried out in the dtype of ``values`` (pass ``np.longdouble`` for
    extra headroom). ``values`` has shape (N, m); returns (degree + 1, m) floats.
    """
    v = np.asarray(values)
    v = v.reshape(v.shape[0], -1)
    count = v.shape[0]
    if count < degree + 1:
        raise ParameterError(f"need {degree + 1} nodes, got {count}")
    dt = np.result_type(v.dtype, np.float64)
    j = np.arange(count, dtype=dt)
    i = np.arange(degree + 1, dtype=dt)
    pi = np.arccos(np.asarray(-1, dtype=dt))
    basis = np.cos(np.outer(i, 2 * j + 1) * pi / (2 * count))  # T_i(x_j)
    c = (2 / np.asarray(count, dtype=dt)) * (basis @ v)
    c[0] /= 2
    resid = np.abs(basis.T @ c - v).max(initial=0.0)
    if resid > tol * max(1.0, float(np.abs(v).max(initial=0.0))):
        raise DegreeMismatchError(f"residual {float(resid):.3e} at degree {degree}")
    return (_cheb_to_mono(degree).astype(dt) @ c).astype(np.float64)


@lru_cache(maxsize=None)
def _cheb_to_mono(degree: int) -> np.ndarray:
    """Column i holds the monomial coefficients of T_i (exact integers)."""
    M = np.zeros((degree + 1, degree + 1))
    for i in range(degree + 1):
        col = cheb.cheb2poly(np.eye(degree + 1)[i])
        M[: col.size, i] = col
    return M
