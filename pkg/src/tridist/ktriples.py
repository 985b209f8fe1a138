"""Integer invariants (K1, K2, K3) of large three-distance sets and conversions to inner products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError, ParameterError
from .harmonic import DistanceTriple, harmonic_space_dim
from .poly import Polynomial

PROBE_STEP = 0.005


@dataclass(frozen=True, order=True)
class KTriple:
    k1: int
    k2: int
    k3: int

    def __post_init__(self) -> None:
        k1, k2, k3 = self.k1, self.k2, self.k3
        if k1 + k2 + k3 != 1:
            raise ParameterError(f"{self.as_tuple()} does not sum to 1")
        if 0 in (k1, k2, k3):
            raise ParameterError("components must be nonzero")
        if not (k1 * k2 < 0 and abs(k1) < abs(k2)):
            raise ParameterError("need k1*k2 < 0 and |k1| < |k2|")
        if -k1 * k2 * k3 <= 0:
            raise ParameterError("need -k1*k2*k3 > 0")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.k1, self.k2, self.k3)

    @classmethod
    def parse(cls, text: str) -> "KTriple":
        return cls(*(int(p) for p in text.replace("(", "").replace(")", "").split(",")))

    @property
    def root(self) -> float:
        return math.sqrt(-self.k1 * self.k2 * self.k3)

    def __str__(self) -> str:
        return f"({self.k1},{self.k2},{self.k3})"


@dataclass(frozen=True)
class TripleContext:
    n: int
    N: int
    k_cap: int


def triple_context(n: int) -> TripleContext:
    if n < 2:
        raise ParameterError("need n >= 2")
    N = sum(harmonic_space_dim(n, k) for k in range(3))
    cap = math.floor(0.5 + math.sqrt(N * N / (2 * N - 2) + 0.25))
    return TripleContext(n, N, cap)


def distance_lines(k: KTriple) -> tuple[Polynomial, Polynomial, Polynomial]:
    """d1, d2, d3 as affine polynomials in d3."""
    k1, k2, k3 = k.as_tuple()
    r = k.root
    s = k1 + k2
    d1 = Polynomial([(k1 + r) / (k1 * s), -(k1 * k3 + r) / (k1 * s)])
    d2 = Polynomial([(k2 - r) / (k2 * s), -(k2 * k3 - r) / (k2 * s)])
    return d1, d2, Polynomial([0.0, 1.0])


def recover_arrays(k: KTriple, d3) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised recovery; returns (d1, d2, d3, valid_mask)."""
    d3 = np.asarray(d3, dtype=float)
    k1, k2, k3 = k.as_tuple()
    if k1 + k2 == 0:
        raise ParameterError("k1 + k2 = 0")
    r = k.root
    d1 = (k1 - d3 * k1 * k3 - (d3 - 1) * r) / (k1 * (k1 + k2))
    d2 = (k2 - d3 * k2 * k3 + (d3 - 1) * r) / (k2 * (k1 + k2))
    ok = (d3 > 0) & (d3 < 1) & (d1 >= -1.0) & (d1 < d2) & (d2 < d3)
    return d1, d2, d3, ok


def recover_distances(k: KTriple, d3: float) -> DistanceTriple:
    d1, d2, _, ok = recover_arrays(k, d3)
    if not bool(ok):
        raise OutOfDomainError(f"{k} at d3={d3}: ({float(d1)}, {float(d2)}, {d3}) not ordered")
    return DistanceTriple(float(d1), float(d2), float(d3))


def rejected_branch(k: KTriple, d3: float) -> tuple[float, float]:
    """The other root pair of the quadratic system, which always has d1 >= d2."""
    k1, k2, k3 = k.as_tuple()
    r = k.root
    d1 = (k1 - d3 * k1 * k3 + (d3 - 1) * r) / (k1 * (k1 + k2))
    d2 = (k2 - d3 * k2 * k3 - (d3 - 1) * r) / (k2 * (k1 + k2))
    return d1, d2


def k_from_distances(d: DistanceTriple) -> tuple[float, float, float]:
    d1, d2, d3 = d.as_tuple()
    return (
        (d2 - 1) * (d3 - 1) / ((d2 - d1) * (d3 - d1)),
        (d1 - 1) * (d3 - 1) / ((d1 - d2) * (d3 - d2)),
        (d1 - 1) * (d2 - 1) / ((d1 - d3) * (d2 - d3)),
    )


def moment_residuals(k: KTriple, d: DistanceTriple) -> tuple[float, float, float]:
    """Residuals of sum K_i d_i^p = 1 for p = 0, 1, 2."""
    ks = np.array(k.as_tuple(), dtype=float)
    ds = np.array(d.as_tuple())
    return tuple(float(ks @ ds**p - 1.0) for p in range(3))


def enumerate_k_triples(n: int, probe_step: float = PROBE_STEP) -> list[KTriple]:
    """All admissible triples with |K_i| <= k_cap that admit some valid d3 on the probe grid."""
    cap = triple_context(n).k_cap
    grid = np.arange(1, round(1 / probe_step)) * probe_step
    found = []
    for k1 in range(-cap, cap + 1):
        for k2 in range(-cap, cap + 1):
            k3 = 1 - k1 - k2
            if abs(k3) > cap or 0 in (k1, k2, k3):
                continue
            if not (k1 * k2 < 0 and abs(k1) < abs(k2)) or -k1 * k2 * k3 <= 0:
                continue
            kt = KTriple(k1, k2, k3)
            if recover_arrays(kt, grid)[3].any():
                found.append(kt)
    return sorted(found)
