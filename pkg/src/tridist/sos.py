"""Interval certificates for the three-point bound.

The dual of the pointwise SDP has thirteen scalar constraints. Along a
K-triple every inner product is affine in d3, so on an interval [a1, a2] each
constraint becomes a univariate polynomial that has to stay nonnegative. The
substitution d3 = (a1 + a2 tau^2) / (1 + tau^2) turns this into global
nonnegativity, which is certified by a PSD Gram matrix.

Internally polynomials use the local variable s with d3 = mid + half * s and
s in [-1, 1]; the transform is then tau -> (tau^2 - 1) / (tau^2 + 1), which is
the same map written in better conditioned coordinates.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .conic import ConicProgram, PsdConstraint, SolverReport, SolverSettings, solve, solver_info
from .errors import CertificationFailed, ParameterError
from .harmonic import DistanceTriple
from .ktriples import KTriple, distance_lines, recover_arrays
from .poly import (
    GegenbauerParams,
    Polynomial,
    chebyshev_nodes,
    gegenbauer_coeffs,
    gegenbauer_table,
    chebyshev_interpolate,
    poly_compose,
    poly_compose_rational,
)
from .programs import triple_arguments
from .threepoint import SdpParams, s_entries, s_matrices

EIG_FLOOR = -1e-8
IDENTITY_TOL = 1e-7
MIN_WIDTH = 1e-3
SOS_SLACK = 1e-8
FORMAT = "tridist-sos-certificate/1"


# ------------------------------------------------------------- dual layout


def _tri(r: int) -> list[tuple[int, int]]:
    return [(i, j) for j in range(r) for i in range(j + 1)]


@dataclass(frozen=True)
class DualLayout:
    """Positions of alpha, beta and the upper triangles of F_k in a flat vector."""

    p_lp: int
    p_sdp: int

    @property
    def f_orders(self) -> list[int]:
        return [self.p_sdp - k + 1 for k in range(self.p_sdp + 1)]

    @property
    def alpha(self) -> slice:
        return slice(0, self.p_lp)

    @property
    def beta(self) -> slice:
        return slice(self.p_lp, self.p_lp + 3)

    def f_slice(self, k: int) -> slice:
        start = self.p_lp + 3 + sum(r * (r + 1) // 2 for r in self.f_orders[:k])
        r = self.f_orders[k]
        return slice(start, start + r * (r + 1) // 2)

    @property
    def size(self) -> int:
        return self.f_slice(self.p_sdp).stop

    def pack(self, dual: "DualVariables") -> np.ndarray:
        v = np.zeros(self.size)
        v[self.alpha] = dual.alphas
        v[self.beta] = [dual.beta[0, 0], dual.beta[0, 1], dual.beta[1, 1]]
        for k, F in enumerate(dual.F):
            v[self.f_slice(k)] = [F[i, j] for i, j in _tri(F.shape[0])]
        return v

    def unpack(self, v: np.ndarray) -> "DualVariables":
        b11, b12, b22 = v[self.beta]
        Fs = []
        for k, r in enumerate(self.f_orders):
            F = np.zeros((r, r))
            for val, (i, j) in zip(v[self.f_slice(k)], _tri(r)):
                F[i, j] = F[j, i] = val
            Fs.append(F)
        return DualVariables(np.array(v[self.alpha]), np.array([[b11, b12], [b12, b22]]), Fs)

    def inner_weights(self, k: int) -> np.ndarray:
        """Weights w with <F_k, S> = sum_t w_t F_t S_t over upper-triangle slots."""
        return np.array([1.0 if i == j else 2.0 for i, j in _tri(self.f_orders[k])])


@dataclass
class DualVariables:
    alphas: np.ndarray
    beta: np.ndarray
    F: list[np.ndarray]

    def objective(self, n: int, p_sdp: int) -> float:
        ones = s_matrices(n, 1.0, 1.0, 1.0, p_sdp)[0]
        return float(1.0 + self.alphas.sum() + self.beta[0, 0] + np.sum(self.F[0] * ones))

    def to_dict(self) -> dict:
        return {"alphas": self.alphas.tolist(), "beta": self.beta.tolist(), "F": [f.tolist() for f in self.F]}

    @classmethod
    def from_dict(cls, data: dict) -> "DualVariables":
        return cls(np.array(data["alphas"], float), np.array(data["beta"], float),
                   [np.array(f, float) for f in data["F"]])


# ---------------------------------------------------- pointwise dual values


def dual_constraint_values(n: int, d: DistanceTriple, dual: DualVariables,
                           params: SdpParams = SdpParams()) -> np.ndarray:
    """The thirteen dual constraint expressions at one point; feasible iff all are >= 0."""
    b = dual.beta
    args = triple_arguments(*d.as_tuple())
    g = gegenbauer_table(n, params.p_lp, np.array(d.as_tuple()))[1:]
    out = []
    for j, arg in enumerate(args):
        S = s_matrices(n, *arg, params.p_sdp)
        inner = sum(float(np.sum(F * Sk)) for F, Sk in zip(dual.F, S))
        if j < 3:
            out.append(-1.0 - 2 * b[0, 1] - b[1, 1] - float(dual.alphas @ g[:, j]) - 3.0 * inner)
        else:
            out.append(-b[1, 1] - inner)
    return np.array(out)


def dual_from_primal_report(report: SolverReport) -> DualVariables:
    """Read dual variables off a solve of the primal SDP built by ``build_sdp_primal``."""
    return DualVariables(3.0 * report.ineq_duals, report.psd_duals[0], list(report.psd_duals[1:]))


def build_pointwise_dual(n: int, d: DistanceTriple, params: SdpParams = SdpParams()) -> ConicProgram:
    """The pointwise dual as a minimisation over (alpha, beta, F) in image form."""
    lay = DualLayout(params.p_lp, params.p_sdp)
    nv = lay.size
    names = [f"alpha{i + 1}" for i in range(params.p_lp)] + ["b11", "b12", "b22"]
    for k, r in enumerate(lay.f_orders):
        names += [f"F{k}_{i}{j}" for i, j in _tri(r)]
    ones = s_matrices(n, 1.0, 1.0, 1.0, params.p_sdp)[0]
    obj = np.zeros(nv)
    obj[lay.alpha] = 1.0
    obj[lay.beta.start] = 1.0
    obj[lay.f_slice(0)] = lay.inner_weights(0) * np.array([ones[i, j] for i, j in _tri(lay.f_orders[0])])

    rows = np.zeros((13, nv))
    offs = np.zeros(13)
    g = gegenbauer_table(n, params.p_lp, np.array(d.as_tuple()))[1:]
    for j, arg in enumerate(triple_arguments(*d.as_tuple())):
        S = s_matrices(n, *arg, params.p_sdp)
        scale = 3.0 if j < 3 else 1.0
        for k, r in enumerate(lay.f_orders):
            rows[j, lay.f_slice(k)] = -scale * lay.inner_weights(k) * np.array([S[k][a, c] for a, c in _tri(r)])
        rows[j, lay.beta.start + 2] = -1.0
        if j < 3:
            rows[j, lay.beta.start + 1] = -2.0
            rows[j, lay.alpha] = -g[:, j]
            offs[j] = -1.0

    nonneg = np.zeros(nv, bool)
    nonneg[lay.alpha] = True
    blocks = []
    beta = np.zeros((nv, 2, 2))
    for t, (i, j) in enumerate([(0, 0), (0, 1), (1, 1)]):
        beta[lay.beta.start + t, i, j] = beta[lay.beta.start + t, j, i] = 1.0
    blocks.append(PsdConstraint(np.zeros((2, 2)), beta, "beta"))
    for k, r in enumerate(lay.f_orders):
        co = np.zeros((nv, r, r))
        for t, (i, j) in enumerate(_tri(r)):
            co[lay.f_slice(k).start + t, i, j] = co[lay.f_slice(k).start + t, j, i] = 1.0
        blocks.append(PsdConstraint(np.zeros((r, r)), co, f"F{k}"))
    return ConicProgram(names, obj, "min", 1.0, nonneg, rows, offs, psd=blocks)


# ---------------------------------------------------- constraint polynomials


@dataclass
class ConstraintPolynomial:
    """f(s) = constant(s) + linear(s) @ v, required to be >= 0 for s in [-1, 1]."""

    name: str
    degree: int
    constant: np.ndarray  # (degree+1,)
    linear: np.ndarray  # (degree+1, layout.size)

    def evaluate(self, v: np.ndarray) -> Polynomial:
        return Polynomial(self.constant + self.linear @ v)


@dataclass(frozen=True)
class IntervalFrame:
    """Affine change of variable d3 = mid + half * s."""

    a1: float
    a2: float

    def __post_init__(self) -> None:
        if not self.a1 < self.a2:
            raise ParameterError(f"need a1 < a2, got [{self.a1}, {self.a2}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.a1 + self.a2)

    @property
    def half(self) -> float:
        return 0.5 * (self.a2 - self.a1)

    def d3(self, s):
        return self.mid + self.half * np.asarray(s)

    def to_local(self, p: Polynomial) -> Polynomial:
        return poly_compose(p, Polynomial([self.mid, self.half]))

    def to_d3(self, p: Polynomial) -> Polynomial:
        return poly_compose(p, Polynomial([-self.mid / self.half, 1.0 / self.half]))


def constraint_names() -> list[str]:
    labels = ["d1", "d2", "d3"]
    pattern = [(0, 0, 9), (1, 1, 9), (2, 2, 9), (0, 0, 0), (1, 1, 1), (2, 2, 2), (0, 0, 1),
               (0, 0, 2), (1, 1, 0), (1, 1, 2), (2, 2, 0), (2, 2, 1), (0, 1, 2)]
    return [",".join(labels[i] if i < 3 else "1" for i in p) for p in pattern]


def _local_lines(k: KTriple, frame: IntervalFrame) -> list[Polynomial]:
    return [frame.to_local(p) for p in distance_lines(k)]


def _s_entry_polys_interp(n: int, k: KTriple, frame: IntervalFrame, params: SdpParams):
    """S_k entry coefficients in s for each of the 13 arguments, via Chebyshev interpolation.

    Node values are computed in extended precision so that rounding noise
    stays well below what the interval transform amplifies. Returns a nested
    list [argument][k] of arrays shaped (r, r, 2 p_sdp + 1).
    """
    deg = 2 * params.p_sdp
    count = deg + 6
    ld = np.longdouble
    jj = np.arange(count, dtype=ld)
    s = np.cos((2 * jj + 1) * np.arccos(ld(-1)) / (2 * count))
    d3 = ld(frame.mid) + ld(frame.half) * s
    k1, k2, k3 = (ld(x) for x in k.as_tuple())
    r = np.sqrt(-k1 * k2 * k3)
    d1 = (k1 - d3 * k1 * k3 - (d3 - 1) * r) / (k1 * (k1 + k2))
    d2 = (k2 - d3 * k2 * k3 + (d3 - 1) * r) / (k2 * (k1 + k2))
    out = []
    for arg in triple_arguments(d1, d2, d3):
        u, v, t = (np.broadcast_to(np.asarray(x, dtype=ld), s.shape) for x in arg)
        per_k = []
        for kk in range(params.p_sdp + 1):
            vals = np.array(s_entries(n, kk, u, v, t, params.p_sdp))  # (r, r, nodes)
            order = vals.shape[0]
            coeffs = chebyshev_interpolate(vals.reshape(order * order, -1).T, deg)
            per_k.append(coeffs.T.reshape(order, order, deg + 1))
        out.append(per_k)
    return out


def _s_entry_polys_exact(n: int, k: KTriple, frame: IntervalFrame, params: SdpParams):
    """Same quantity by exact polynomial composition."""
    deg = 2 * params.p_sdp
    d1, d2, d3 = _local_lines(k, frame)
    one = Polynomial([1.0])
    out = []
    for (u, v, t) in triple_arguments(d1, d2, d3):
        t = t if isinstance(t, Polynomial) else one
        per_k = []
        for kk in range(params.p_sdp + 1):
            ent = s_entries(n, kk, u, v, t, params.p_sdp)
            r = len(ent)
            arr = np.zeros((r, r, deg + 1))
            for i in range(r):
                for j in range(r):
                    c = ent[i][j].coeffs[: deg + 1]
                    arr[i, j, : c.size] = c
            per_k.append(arr)
        out.append(per_k)
    return out


def _gegenbauer_polys_coeffwise(n: int, p_lp: int, line: Polynomial) -> list[Polynomial]:
    return [poly_compose(gegenbauer_coeffs(GegenbauerParams(n, i)), line) for i in range(1, p_lp + 1)]


def _gegenbauer_polys_recurrence(n: int, p_lp: int, line: Polynomial) -> list[Polynomial]:
    g = [Polynomial([1.0]), line]
    for j in range(2, p_lp + 1):
        g.append(((2 * j + n - 4) * (line * g[j - 1]) - (j - 1) * g[j - 2]) / (j + n - 3))
    return g[1:p_lp + 1]


def constraint_polynomials(n: int, k: KTriple, params: SdpParams, interval: tuple[float, float],
                           route: str = "interpolate") -> list[ConstraintPolynomial]:
    """The thirteen dual constraints as polynomials in the local variable s.

    ``route="interpolate"`` recovers S-matrix entries from numeric evaluations;
    ``route="compose"`` expands them exactly and is used by the auditor.
    """
    frame = IntervalFrame(*interval)
    lay = DualLayout(params.p_lp, params.p_sdp)
    if route == "interpolate":
        S = _s_entry_polys_interp(n, k, frame, params)
        geg = _gegenbauer_polys_coeffwise
    elif route == "compose":
        S = _s_entry_polys_exact(n, k, frame, params)
        geg = _gegenbauer_polys_recurrence
    else:
        raise ParameterError(f"unknown route {route!r}")
    lines = _local_lines(k, frame)
    pair_deg = max(params.p_lp, 2 * params.p_sdp)
    out = []
    for j, name in enumerate(constraint_names()):
        deg = pair_deg if j < 3 else 2 * params.p_sdp
        L = np.zeros((deg + 1, lay.size))
        const = np.zeros(deg + 1)
        scale = 3.0 if j < 3 else 1.0
        for kk, r in enumerate(lay.f_orders):
            w = lay.inner_weights(kk)
            for t, (a, b) in enumerate(_tri(r)):
                c = S[j][kk][a, b, : deg + 1]
                L[: c.size, lay.f_slice(kk).start + t] -= scale * w[t] * c
        L[0, lay.beta.start + 2] -= 1.0
        if j < 3:
            L[0, lay.beta.start + 1] -= 2.0
            const[0] = -1.0
            for i, gp in enumerate(geg(n, params.p_lp, lines[j]), start=0):
                c = gp.coeffs[: deg + 1]
                L[: c.size, lay.alpha.start + i] -= c
        out.append(ConstraintPolynomial(name, deg, const, L))
    return out


# ------------------------------------------------------ transform and Gram


def interval_transform(f: Polynomial, a1: float, a2: float, m: Optional[int] = None) -> Polynomial:
    """(1 + a^2)^m f((a1 + a2 a^2) / (1 + a^2)) with m = deg f unless given."""
    if not a1 < a2:
        raise ParameterError("need a1 < a2")
    m = f.degree if m is None else m
    return poly_compose_rational(f, Polynomial([a1, 0.0, a2]), Polynomial([1.0, 0.0, 1.0]), m)


@lru_cache(maxsize=None)
def _local_transform_matrix(m: int) -> np.ndarray:
    """Column j holds the coefficients of (tau^2 - 1)^j (tau^2 + 1)^(m - j)."""
    T = np.zeros((2 * m + 1, m + 1))
    for j in range(m + 1):
        e = np.zeros(m + 1)
        e[j] = 1.0
        T[:, j] = poly_compose_rational(Polynomial(e), Polynomial([-1.0, 0.0, 1.0]),
                                        Polynomial([1.0, 0.0, 1.0]), m).coeffs[: 2 * m + 1]
    return T


def gram_residual(f_plus: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Coefficients of f_plus - X Q X^T, with X the monomial vector."""
    m = Q.shape[0] - 1
    out = np.array(f_plus[: 2 * m + 1], dtype=float).copy()
    out = np.pad(out, (0, max(0, 2 * m + 1 - out.size)))
    for l in range(2 * m + 1):
        i = np.arange(max(0, l - m), min(l, m) + 1)
        out[l] -= Q[i, l - i].sum()
    return out


def _match_gram(f_plus: np.ndarray, Q: np.ndarray, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Symmetric correction along anti-diagonals that makes X Q X^T equal f_plus.

    The residual of coefficient l is spread over the entries (i, l - i) in
    proportion to ``weights[i] * weights[l - i]`` (uniformly by default).
    """
    m = Q.shape[0] - 1
    w = np.ones(m + 1) if weights is None else np.asarray(weights, float)
    Q = 0.5 * (Q + Q.T)
    r = gram_residual(f_plus, Q)
    for l in range(2 * m + 1):
        i = np.arange(max(0, l - m), min(l, m) + 1)
        ww = w[i] * w[l - i]
        Q[i, l - i] += r[l] * ww / ww.sum()
    return Q


def gram_verify(f_plus: Polynomial, settings: Optional[SolverSettings] = None) -> Optional[np.ndarray]:
    """Find a PSD Gram matrix for an even-degree polynomial, or None if none was found."""
    c = f_plus.normalized().coeffs
    if (c.size - 1) % 2:
        raise ParameterError("odd-degree polynomials are not sums of squares")
    m = (c.size - 1) // 2
    slots = _tri(m + 1)
    nv = len(slots)
    # feasibility: Q(q) PSD with the coefficient identity; maximise min-eig proxy 0
    eq = np.zeros((2 * m + 1, nv))
    for t, (i, j) in enumerate(slots):
        eq[i + j, t] += 1.0 if i == j else 2.0
    co = np.zeros((nv, m + 1, m + 1))
    for t, (i, j) in enumerate(slots):
        co[t, i, j] = co[t, j, i] = 1.0
    scale = max(1.0, np.abs(c).max())
    prog = ConicProgram([f"q{i}{j}" for i, j in slots], np.zeros(nv), "min", 0.0,
                        eq_matrix=eq / scale, eq_offset=-c / scale,
                        psd=[PsdConstraint(np.zeros((m + 1, m + 1)), co / scale, "gram")])
    rep = solve(prog, settings)
    if rep.status not in ("optimal", "near-optimal"):
        return None
    Q = prog.psd[0].evaluate(rep.x) * scale
    Q = _match_gram(c, Q)
    if np.linalg.eigvalsh(Q)[0] < EIG_FLOOR or np.abs(gram_residual(c, Q)).max() > IDENTITY_TOL:
        return None
    return Q


# -------------------------------------------------------------- certificate


@dataclass
class GramBlock:
    name: str
    degree: int
    Q: np.ndarray


@dataclass
class SosCertificate:
    n: int
    k_triple: KTriple
    interval: tuple[float, float]
    params: SdpParams
    dual: DualVariables
    grams: list[GramBlock]
    certified_value: float
    margins: dict = field(default_factory=dict)
    solver: str = ""
    solve_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "n": self.n,
            "k_triple": list(self.k_triple.as_tuple()),
            "interval": list(self.interval),
            "params": {"p_lp": self.params.p_lp, "p_sdp": self.params.p_sdp},
            "certified_value": self.certified_value,
            "dual": self.dual.to_dict(),
            "grams": [{"name": g.name, "degree": g.degree, "Q": g.Q.tolist()} for g in self.grams],
            "margins": self.margins,
            "solver": self.solver,
            "solve_time": self.solve_time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SosCertificate":
        if data.get("format") != FORMAT:
            raise ParameterError(f"unrecognised certificate format {data.get('format')!r}")
        return cls(
            n=int(data["n"]),
            k_triple=KTriple(*data["k_triple"]),
            interval=tuple(data["interval"]),
            params=SdpParams(**data["params"]),
            dual=DualVariables.from_dict(data["dual"]),
            grams=[GramBlock(g["name"], int(g["degree"]), np.array(g["Q"], float)) for g in data["grams"]],
            certified_value=float(data["certified_value"]),
            margins=data.get("margins", {}),
            solver=data.get("solver", ""),
            solve_time=float(data.get("solve_time", 0.0)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "SosCertificate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _f_scaling(n: int, k: KTriple, frame: IntervalFrame, params: SdpParams) -> list[np.ndarray]:
    """Diagonal congruence scalings that equalise the S_k diagonals at the interval midpoint."""
    d = recover_arrays(k, frame.mid)[:3]
    diag = [np.zeros(r) for r in DualLayout(params.p_lp, params.p_sdp).f_orders]
    for arg in triple_arguments(*(float(x) for x in d)):
        for kk, S in enumerate(s_matrices(n, *arg, params.p_sdp)):
            diag[kk] = np.maximum(diag[kk], np.abs(np.diag(S)))
    diag[0] = np.maximum(diag[0], 1.0)
    return [1.0 / np.sqrt(np.maximum(x, 1e-300)) for x in diag]


def _variable_scale(lay: DualLayout, D: list[np.ndarray]) -> np.ndarray:
    sc = np.ones(lay.size)
    for kk, Dk in enumerate(D):
        sc[lay.f_slice(kk)] = [Dk[i] * Dk[j] for i, j in _tri(lay.f_orders[kk])]
    return sc


def _psd_part(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    P = (V * np.maximum(w, 0.0)) @ V.T
    return 0.5 * (P + P.T)


def _check_domain(k: KTriple, a1: float, a2: float) -> None:
    if not (0.0 < a1 < a2 < 1.0):
        raise ParameterError(f"interval [{a1}, {a2}] must lie inside (0, 1)")
    ok = recover_arrays(k, np.array([a1, 0.5 * (a1 + a2), a2]))[3]
    if not ok.all():
        raise ParameterError(f"{k} leaves the ordered domain on [{a1}, {a2}]")


def certify_interval(n: int, k: KTriple, a1: float, a2: float, params: SdpParams = SdpParams(),
                     settings: Optional[SolverSettings] = None, slack: float = SOS_SLACK,
                     route: str = "interpolate") -> SosCertificate:
    """Minimise the dual objective subject to SOS certificates of all thirteen constraints.

    The SOS problem is solved through its moment (image-form) counterpart;
    the certificate is read from that solve's dual variables. Each transformed
    constraint is asked to exceed ``slack * (1 + tau^2)^m``, which leaves a
    strictly positive eigenvalue margin in the final Gram matrices.
    """
    _check_domain(k, a1, a2)
    t0 = time.perf_counter()
    frame = IntervalFrame(a1, a2)
    lay = DualLayout(params.p_lp, params.p_sdp)
    cons = constraint_polynomials(n, k, params, (a1, a2), route=route)
    vscale = _variable_scale(lay, _f_scaling(n, k, frame, params))

    # unknowns: scaled dual variables, then parity Gram blocks of every constraint
    blocks: list[tuple[str, slice, int]] = [("beta", lay.beta, 2)]
    blocks += [(f"F{kk}", lay.f_slice(kk), r) for kk, r in enumerate(lay.f_orders)]
    pos = lay.size
    gram_meta = []
    for ci, c in enumerate(cons):
        m = c.degree
        parts = []
        for parity in (0, 1):
            idx = list(range(parity, m + 1, 2))
            sz = len(idx) * (len(idx) + 1) // 2
            sl = slice(pos, pos + sz)
            pos += sz
            blocks.append((f"Q{ci}_{parity}", sl, len(idx)))
            parts.append((idx, sl))
        gram_meta.append(parts)
    nv = pos

    rows, rhs = [], []
    for c, parts in zip(cons, gram_meta):
        m = c.degree
        T = _local_transform_matrix(m)
        TL = np.zeros((2 * m + 1, nv))
        TL[:, : lay.size] = (T @ c.linear) * vscale
        Tc = T @ c.constant
        for idx, sl in parts:
            for t, (i, j) in enumerate(_tri(len(idx))):
                a, b = idx[i], idx[j]
                TL[a + b, sl.start + t] -= math.sqrt(comb(m, a) * comb(m, b)) * (1.0 if i == j else 2.0)
        for l in range(0, 2 * m + 1, 2):
            nrm = np.abs(TL[l]).max()
            rows.append(TL[l] / nrm)
            rhs.append((-Tc[l] + slack * comb(m, l // 2)) / nrm)
    E = np.array(rows)
    e = np.array(rhs)

    cost = np.zeros(nv)
    cost[lay.alpha] = 1.0
    cost[lay.beta.start] = 1.0
    ones = s_matrices(n, 1.0, 1.0, 1.0, params.p_sdp)[0]
    f0 = lay.f_slice(0)
    cost[f0] = lay.inner_weights(0) * np.array([ones[i, j] for i, j in _tri(lay.f_orders[0])]) * vscale[f0]

    # moment form: maximise e'y subject to cost - E'y in the cone
    ny = E.shape[0]
    psd = []
    for name, sl, r in blocks:
        C = np.zeros((r, r))
        co = np.zeros((ny, r, r))
        for t, (i, j) in enumerate(_tri(r)):
            col = E[:, sl.start + t]
            if i == j:
                C[i, i] = cost[sl.start + t]
                co[:, i, i] = -col
            else:
                C[i, j] = C[j, i] = 0.5 * cost[sl.start + t]
                co[:, i, j] = co[:, j, i] = -0.5 * col
        psd.append(PsdConstraint(C, co, name))
    moment = ConicProgram(
        [f"y{i}" for i in range(ny)], e, "max", 1.0,
        ineq_matrix=-E[:, lay.alpha].T, ineq_offset=cost[lay.alpha], psd=psd,
    )
    settings = settings or SolverSettings()
    rep = solve(moment, settings)
    if rep.status not in ("optimal", "near-optimal"):
        raise CertificationFailed(f"{k} on [{a1}, {a2}]: solver status {rep.status} ({rep.message})")

    v = np.zeros(nv)
    v[lay.alpha] = rep.ineq_duals
    for (name, sl, r), Z in zip(blocks, rep.psd_duals):
        v[sl] = [Z[i, j] for i, j in _tri(r)]
    v[: lay.size] *= vscale

    dual = lay.unpack(v[: lay.size])
    dual = DualVariables(np.maximum(dual.alphas, 0.0), _psd_part(dual.beta), [_psd_part(F) for F in dual.F])
    vd = lay.pack(dual)

    # final identities use the exactly composed polynomials
    exact = constraint_polynomials(n, k, params, (a1, a2), route="compose")
    grams = []
    drift = 0.0
    for c, cx, parts in zip(cons, exact, gram_meta):
        m = c.degree
        T = _local_transform_matrix(m)
        Q = np.zeros((m + 1, m + 1))
        for idx, sl in parts:
            sub = np.zeros((len(idx), len(idx)))
            for val, (i, j) in zip(v[sl], _tri(len(idx))):
                sub[i, j] = sub[j, i] = val
            sc = np.sqrt([comb(m, a) for a in idx])
            Q[np.ix_(idx, idx)] = sub * np.outer(sc, sc)
        Q += slack * np.diag([float(comb(m, i)) for i in range(m + 1)])
        f_plus = T @ cx.evaluate(vd).coeffs
        drift = max(drift, float(np.abs(f_plus - T @ c.evaluate(vd).coeffs).max()))
        binom_root = np.sqrt([float(comb(m, i)) for i in range(m + 1)])
        grams.append(GramBlock(c.name, m, _match_gram(f_plus, Q, binom_root)))

    value = dual.objective(n, params.p_sdp)
    cert = SosCertificate(n, k, (float(a1), float(a2)), params, dual, grams, value,
                          solver=solver_info(settings), solve_time=time.perf_counter() - t0)
    cert.margins = {
        "solver_gap": rep.gap,
        "solver_objective": rep.dual_objective,
        "route_discrepancy": drift,
        "min_eig_q": min(float(np.linalg.eigvalsh(g.Q)[0]) for g in grams),
    }
    return cert


# -------------------------------------------------------------------- audit


@dataclass
class AuditReport:
    passed: bool
    identity_residual: float
    min_eigenvalues: dict
    objective_recomputed: float
    messages: list[str]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "identity_residual": self.identity_residual,
            "min_eigenvalues": self.min_eigenvalues,
            "objective_recomputed": self.objective_recomputed,
            "messages": self.messages,
        }


def audit_certificate(cert: SosCertificate, eig_floor: float = EIG_FLOOR,
                      identity_tol: float = IDENTITY_TOL) -> AuditReport:
    """Re-derive every polynomial by exact composition and check identities and eigenvalues."""
    msgs: list[str] = []
    p = cert.params
    lay = DualLayout(p.p_lp, p.p_sdp)
    dual = cert.dual
    eigs: dict[str, float] = {}
    try:
        _check_domain(cert.k_triple, *cert.interval)
    except ParameterError as exc:
        return AuditReport(False, math.inf, {}, math.nan, [str(exc)])
    if dual.alphas.shape != (p.p_lp,) or len(dual.F) != p.p_sdp + 1 or len(cert.grams) != 13:
        return AuditReport(False, math.inf, {}, math.nan, ["certificate has wrong shape"])

    eigs["alpha"] = float(dual.alphas.min())
    for name, M in [("beta", dual.beta)] + [(f"F{k}", F) for k, F in enumerate(dual.F)]:
        if not np.array_equal(M, M.T):
            msgs.append(f"{name} is not symmetric")
        eigs[name] = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])

    cons = constraint_polynomials(cert.n, cert.k_triple, p, cert.interval, route="compose")
    v = lay.pack(dual)
    worst = 0.0
    for c, g in zip(cons, cert.grams):
        if g.Q.shape != (c.degree + 1, c.degree + 1):
            msgs.append(f"Gram for {c.name} has order {g.Q.shape[0]}, expected {c.degree + 1}")
            worst = math.inf
            continue
        if not np.array_equal(g.Q, g.Q.T):
            msgs.append(f"Gram for {c.name} is not symmetric")
        f_plus = poly_compose_rational(c.evaluate(v), Polynomial([-1.0, 0.0, 1.0]),
                                       Polynomial([1.0, 0.0, 1.0]), c.degree).coeffs
        worst = max(worst, float(np.abs(gram_residual(f_plus, g.Q)).max()))
        eigs[f"Q:{c.name}"] = float(np.linalg.eigvalsh(0.5 * (g.Q + g.Q.T))[0])

    for name, lam in eigs.items():
        if lam < eig_floor:
            msgs.append(f"{name}: min eigenvalue {lam:.3e} below floor {eig_floor:g}")
    if worst > identity_tol:
        msgs.append(f"Gram identity residual {worst:.3e} exceeds {identity_tol:g}")
    obj = dual.objective(cert.n, p.p_sdp)
    if abs(obj - cert.certified_value) > 1e-9 * max(1.0, abs(obj)):
        msgs.append(f"stated value {cert.certified_value} differs from recomputed {obj}")
    return AuditReport(not msgs, worst, eigs, obj, msgs)


# ------------------------------------------------------- interval coverage


@dataclass
class CoverResult:
    certificates: list[SosCertificate]
    failed: list[tuple[float, float]]

    @property
    def value(self) -> float:
        """Largest certified value over the covered pieces (inf if anything failed)."""
        if self.failed or not self.certificates:
            return math.inf
        return max(c.certified_value for c in self.certificates)


def certify_range(n: int, k: KTriple, a1: float, a2: float, params: SdpParams = SdpParams(),
                  settings: Optional[SolverSettings] = None, width: float = 0.005,
                  min_width: float = MIN_WIDTH, audit: bool = True) -> CoverResult:
    """Tile [a1, a2] with certificates, bisecting pieces that fail down to ``min_width``."""
    pieces = int(math.ceil((a2 - a1) / width - 1e-9))
    edges = np.linspace(a1, a2, max(pieces, 1) + 1)
    todo = list(zip(edges[:-1], edges[1:]))
    certs, failed = [], []
    while todo:
        lo, hi = todo.pop(0)
        try:
            cert = certify_interval(n, k, float(lo), float(hi), params, settings)
            if audit and not audit_certificate(cert).passed:
                raise CertificationFailed("audit failed")
            certs.append(cert)
        except CertificationFailed:
            if hi - lo > 2 * min_width - 1e-12:
                mid = 0.5 * (lo + hi)
                todo[:0] = [(lo, mid), (mid, hi)]
            else:
                failed.append((float(lo), float(hi)))
    return CoverResult(certs, failed)


def stack_blocks(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Block-diagonal assembly of square matrices."""
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size))
    pos = 0
    for m in mats:
        r = m.shape[0]
        out[pos:pos + r, pos:pos + r] = m
        pos += r
    return out
