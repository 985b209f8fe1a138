"""Three-point matrices Y_k and their symmetrisations S_k.

An entry of Y_k is u^i v^j w^{k/2} G_k^{n-1}(z / sqrt(w)) with z = t - uv and
w = (1-u^2)(1-v^2). Only monomials of G_k with the parity of k appear, so the
expression equals u^i v^j sum_m c_m z^m w^{(k-m)/2}, a polynomial in (u, v, t).
The helpers here evaluate that polynomial form directly, which works for
floats, numpy arrays and :class:`Polynomial` arguments alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ParameterError
from .poly import GegenbauerParams, Polynomial, gegenbauer_coeffs

ARG_TOL = 1e-12


@dataclass(frozen=True)
class SdpParams:
    p_lp: int = 18
    p_sdp: int = 6

    def __post_init__(self) -> None:
        if self.p_lp < 1 or self.p_sdp < 0:
            raise ParameterError("need p_lp >= 1 and p_sdp >= 0")


def _check(n: int, k: int, p_sdp: int) -> None:
    if n < 3:
        raise ParameterError("three-point matrices need n >= 3")
    if not 0 <= k <= p_sdp:
        raise ParameterError(f"need 0 <= k <= p_sdp, got k={k}, p_sdp={p_sdp}")


def _kernel(n: int, k: int, u, v, t):
    """w^{k/2} G_k^{n-1}(z/sqrt(w)) in parity-paired form."""
    c = gegenbauer_coeffs(GegenbauerParams(n - 1, k)).coeffs
    z = t - u * v
    w = (1 - u * u) * (1 - v * v)
    acc = None
    for m in range(k % 2, k + 1, 2):
        term = c[m] * (z**m) * (w ** ((k - m) // 2))
        acc = term if acc is None else acc + term
    return acc


def _powers(x, count: int) -> list:
    out = [x**0 if not isinstance(x, Polynomial) else Polynomial([1.0])]
    for _ in range(count - 1):
        out.append(out[-1] * x)
    return out


def y_entries(n: int, k: int, u, v, t, p_sdp: int) -> list[list]:
    """Y_k entries as a nested list over any ring supporting + and *."""
    _check(n, k, p_sdp)
    r = p_sdp - k + 1
    kern = _kernel(n, k, u, v, t)
    pu, pv = _powers(u, r), _powers(v, r)
    return [[pu[i] * pv[j] * kern for j in range(r)] for i in range(r)]


def _clip_unit(x: float) -> float:
    """Accept roundoff up to ``ARG_TOL`` outside [-1, 1] and clip it away."""
    if not -1.0 - ARG_TOL <= x <= 1.0 + ARG_TOL:
        raise ParameterError(f"argument {x} outside [-1, 1]")
    return min(1.0, max(-1.0, float(x)))


def y_matrix(n: int, k: int, u: float, v: float, t: float, p_sdp: int) -> np.ndarray:
    u, v, t = (_clip_unit(x) for x in (u, v, t))
    return np.array(y_entries(n, k, u, v, t, p_sdp), dtype=float)


def s_entries(n: int, k: int, u, v, t, p_sdp: int) -> list[list]:
    """Permutation average of :func:`y_entries`, generic over the scalar ring."""
    acc = None
    for args in permutations((u, v, t)):
        y = y_entries(n, k, *args, p_sdp)
        acc = y if acc is None else [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(acc, y)]
    return [[x * (1.0 / 6.0) for x in row] for row in acc]


def s_matrix(n: int, k: int, u: float, v: float, t: float, p_sdp: int) -> np.ndarray:
    """Symmetric matrix S_k^n(u, v, t) of order p_sdp - k + 1."""
    acc = sum(y_matrix(n, k, *args, p_sdp) for args in permutations((u, v, t))) / 6.0
    return 0.5 * (acc + acc.T)


def s_matrices(n: int, u: float, v: float, t: float, p_sdp: int) -> list[np.ndarray]:
    return [s_matrix(n, k, u, v, t, p_sdp) for k in range(p_sdp + 1)]
