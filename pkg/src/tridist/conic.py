"""Solver-agnostic conic programs over the nonnegative orthant and PSD cones.

A :class:`ConicProgram` is written in image form: scalar variables ``x``,
linear rows ``A x + b >= 0`` and ``A x + b == 0``, nonnegativity flags, and
affine matrix constraints ``C0 + sum_i x_i C_i`` that must be PSD. Backends
translate this into their native standard form.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from .errors import ParameterError

Status = Literal["optimal", "near-optimal", "infeasible", "unbounded", "failure"]


@dataclass
class PsdConstraint:
    """``constant + sum_i x_i * coeffs[i]`` must be positive semidefinite."""

    constant: np.ndarray
    coeffs: np.ndarray  # shape (nvar, r, r)
    name: str = ""

    @property
    def order(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(x, self.coeffs, axes=(0, 0))


@dataclass
class ConicProgram:
    variables: list[str]
    objective: np.ndarray
    sense: Literal["max", "min"] = "max"
    objective_constant: float = 0.0
    nonneg: Optional[np.ndarray] = None
    ineq_matrix: Optional[np.ndarray] = None
    ineq_offset: Optional[np.ndarray] = None
    eq_matrix: Optional[np.ndarray] = None
    eq_offset: Optional[np.ndarray] = None
    psd: list[PsdConstraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        nv = len(self.variables)
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (nv,):
            raise ParameterError("objective length differs from variable count")
        if self.sense not in ("max", "min"):
            raise ParameterError(f"unknown sense {self.sense!r}")
        self.nonneg = np.zeros(nv, bool) if self.nonneg is None else np.asarray(self.nonneg, bool)
        self.ineq_matrix, self.ineq_offset = self._rows(self.ineq_matrix, self.ineq_offset, nv)
        self.eq_matrix, self.eq_offset = self._rows(self.eq_matrix, self.eq_offset, nv)
        if self.nonneg.shape != (nv,):
            raise ParameterError("nonneg flags differ from variable count")
        for blk in self.psd:
            blk.constant = np.asarray(blk.constant, dtype=float)
            blk.coeffs = np.asarray(blk.coeffs, dtype=float)
            r = blk.constant.shape[0]
            if blk.constant.shape != (r, r) or blk.coeffs.shape != (nv, r, r):
                raise ParameterError(f"PSD block {blk.name!r} has inconsistent shapes")

    @staticmethod
    def _rows(a, b, nv):
        if a is None:
            return np.zeros((0, nv)), np.zeros(0)
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if a.shape[1] != nv or a.shape[0] != b.size:
            raise ParameterError("linear rows reference undeclared variables")
        return a, b

    @property
    def size(self) -> int:
        return len(self.variables)

    def value(self, x: np.ndarray) -> float:
        return float(self.objective @ x + self.objective_constant)

    def violation(self, x: np.ndarray) -> float:
        """Largest absolute violation of any constraint at ``x``."""
        v = [0.0]
        if self.ineq_matrix.size:
            v.append(float(np.max(-(self.ineq_matrix @ x + self.ineq_offset))))
        if self.eq_matrix.size:
            v.append(float(np.max(np.abs(self.eq_matrix @ x + self.eq_offset))))
        if self.nonneg.any():
            v.append(float(np.max(-x[self.nonneg])))
        for blk in self.psd:
            m = blk.evaluate(x)
            v.append(float(-np.linalg.eigvalsh(0.5 * (m + m.T))[0]))
        return max(0.0, max(v))


@dataclass(frozen=True)
class SolverSettings:
    backend: str = "cvxopt"
    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iters: int = 500
    time_limit: Optional[float] = None
    refinement: int = 3

    def info(self) -> str:
        return solver_info(self)


@dataclass(frozen=True)
class SolverReport:
    status: Status
    objective: float  # primal objective in the program's own sense
    dual_objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    solve_time: float
    iterations: int
    x: Optional[np.ndarray] = None
    ineq_duals: Optional[np.ndarray] = None
    nonneg_duals: Optional[np.ndarray] = None
    eq_duals: Optional[np.ndarray] = None
    psd_duals: Optional[list] = None
    solver: str = ""
    message: str = ""


def _version(mod_name: str) -> str:
    try:
        mod = __import__(mod_name)
        return getattr(mod, "__version__", "unknown")
    except ImportError:
        return "missing"


def solver_info(settings: Optional[SolverSettings] = None) -> str:
    s = settings or SolverSettings()
    return (
        f"{s.backend}-{_version(s.backend)} feastol={s.feastol:g} abstol={s.abstol:g} "
        f"reltol={s.reltol:g} max_iters={s.max_iters} refinement={s.refinement}"
        + (" retry=" + ",".join(map(str, _RETRY_REFINEMENTS))
           + " fallback_feastol=" + ",".join(f"{t['feastol']:g}" for t in _FALLBACK_TOLS)
           if s.backend == "cvxopt" else "")
    )


def solve(program: ConicProgram, settings: Optional[SolverSettings] = None) -> SolverReport:
    s = settings or SolverSettings()
    if s.backend == "cvxopt":
        return _solve_cvxopt(program, s)
    if s.backend == "clarabel":
        return _solve_clarabel(program, s)
    raise ParameterError(f"unknown backend {s.backend!r}")


# ------------------------------------------------------------------- cvxopt

# objectives run into the thousands, where an absolute gap of 1e-8 can be out
# of reach; the safety margin grows with the gap, so looser exits stay sound
_FALLBACK_TOLS = (
    dict(feastol=1e-7, abstol=1e-7, reltol=1e-6),
    dict(feastol=1e-6, abstol=1e-6, reltol=1e-5),
)
# cvxopt occasionally breaks down on a singular KKT system (ZeroDivisionError
# or a diverging 'unknown' exit); another refinement count usually gets through
_RETRY_REFINEMENTS = (1, 5, 2)


def _cvxopt_data(p: ConicProgram):
    """min q'x s.t. G x <= h (orthant rows), Gs x <=_psd hs, A x = b."""
    sign = -1.0 if p.sense == "max" else 1.0
    q = sign * p.objective
    nn = np.flatnonzero(p.nonneg)
    g_rows = [-p.ineq_matrix, -np.eye(p.size)[nn]]
    h_rows = [p.ineq_offset, np.zeros(nn.size)]
    G = np.vstack(g_rows)
    h = np.concatenate(h_rows)
    Gs, hs = [], []
    for blk in p.psd:
        r = blk.order
        Gs.append(-blk.coeffs.reshape(p.size, r * r).T.copy())
        hs.append(blk.constant.copy())
    return sign, q, G, h, Gs, hs


def _solve_cvxopt(p: ConicProgram, s: SolverSettings) -> SolverReport:
    from cvxopt import matrix, solvers

    sign, q, G, h, Gs, hs = _cvxopt_data(p)

    def fresh_args() -> dict:
        # cvxopt may scale its inputs in place, so every attempt gets new matrices
        kw = dict(
            c=matrix(q),
            Gl=matrix(G) if G.shape[0] else matrix(np.zeros((1, p.size))),
            hl=matrix(h) if G.shape[0] else matrix(np.ones(1)),  # vacuous 0 <= 1 row if none
            Gs=[matrix(g) for g in Gs] or None,
            hs=[matrix(x) for x in hs] or None,
        )
        if p.eq_matrix.shape[0]:
            kw["A"] = matrix(p.eq_matrix)
            kw["b"] = matrix(-p.eq_offset)
        return kw

    tight = dict(feastol=s.feastol, abstol=s.abstol, reltol=s.reltol)
    ladder = [s.refinement] + [r for r in _RETRY_REFINEMENTS if r != s.refinement]
    attempts = [(tol, r) for tol in (tight, *_FALLBACK_TOLS) for r in ladder]
    best: Optional[SolverReport] = None
    started = time.perf_counter()
    for tol, refinement in attempts:
        opts = dict(show_progress=False, maxiters=s.max_iters, refinement=refinement, **tol)
        t0 = time.perf_counter()
        kwargs = fresh_args()
        try:
            if Gs:
                sol = solvers.sdp(options=opts, **kwargs)
            else:
                sol = solvers.lp(kwargs["c"], kwargs["Gl"], kwargs["hl"], kwargs.get("A"),
                                 kwargs.get("b"), options=opts)
                sol["zs"] = []
        except (ArithmeticError, ValueError) as exc:
            rep = _failure(str(exc), time.perf_counter() - t0, s)
        else:
            rep = _cvxopt_report(p, sol, sign, G.shape[0] > 0, time.perf_counter() - t0, s)
        if best is None or _rank(rep) > _rank(best):
            best = rep
        if best.status == "optimal":
            break
        # cvxopt has no native time limit; at least skip the retry once over budget
        if s.time_limit is not None and time.perf_counter() - started > s.time_limit:
            break
    return replace(best, solve_time=time.perf_counter() - started)


def _rank(r: SolverReport) -> int:
    return {"optimal": 4, "near-optimal": 3, "infeasible": 2, "unbounded": 2, "failure": 0}[r.status]


def _failure(msg: str, elapsed: float, s: SolverSettings) -> SolverReport:
    nan = float("nan")
    return SolverReport("failure", nan, nan, nan, nan, nan, elapsed, 0, solver=solver_info(s), message=msg)


def _cvxopt_report(p: ConicProgram, sol, sign: float, has_rows: bool, elapsed: float, s) -> SolverReport:
    raw = sol["status"]
    c0 = p.objective_constant
    pobj = sol["primal objective"]
    dobj = sol["dual objective"]
    x = None if sol["x"] is None else np.array(sol["x"]).ravel()
    if raw == "primal infeasible":
        return SolverReport("infeasible", math.nan, math.nan, math.nan, math.nan, math.nan, elapsed,
                            sol["iterations"], solver=solver_info(s), message=raw)
    if raw == "dual infeasible":
        return SolverReport("unbounded", math.nan, math.nan, math.nan, math.nan, math.nan, elapsed,
                            sol["iterations"], solver=solver_info(s), message=raw)
    if x is None or pobj is None or dobj is None:
        return _failure(f"cvxopt status {raw}", elapsed, s)
    pinf = sol["primal infeasibility"] or 0.0
    dinf = sol["dual infeasibility"] or 0.0
    gap = abs(pobj - dobj)
    if raw == "optimal":
        status: Status = "optimal"
    else:
        rel = gap / max(1.0, abs(pobj))
        status = "near-optimal" if max(pinf, dinf, rel) <= 1e-5 else "failure"
    m = p.ineq_matrix.shape[0]
    zkey = "zl" if "zl" in sol else "z"
    zl = np.array(sol[zkey]).ravel() if has_rows else np.zeros(0)
    zs = [np.array(z) for z in sol["zs"]] if sol.get("zs") else []
    return SolverReport(
        status=status,
        objective=c0 + sign * pobj,
        dual_objective=c0 + sign * dobj,
        primal_residual=abs(pinf),
        dual_residual=abs(dinf),
        gap=gap,
        solve_time=elapsed,
        iterations=sol["iterations"],
        x=x,
        ineq_duals=zl[:m],
        nonneg_duals=zl[m:],
        eq_duals=np.array(sol["y"]).ravel() if sol.get("y") is not None else np.zeros(0),
        psd_duals=[0.5 * (z + z.T) for z in zs],
        solver=solver_info(s),
        message=raw,
    )


# ----------------------------------------------------------------- clarabel


def _svec_index(r: int):
    """Upper-triangle column-major ordering used by Clarabel's PSD triangle cone."""
    return [(i, j) for j in range(r) for i in range(j + 1)]


def _solve_clarabel(p: ConicProgram, s: SolverSettings) -> SolverReport:
    import clarabel
    import scipy.sparse as sp

    sign = -1.0 if p.sense == "max" else 1.0
    blocks_a, blocks_b, cones = [], [], []
    if p.eq_matrix.shape[0]:
        blocks_a.append(p.eq_matrix)
        blocks_b.append(-p.eq_offset)
        cones.append(clarabel.ZeroConeT(p.eq_matrix.shape[0]))
    nn = np.flatnonzero(p.nonneg)
    lin_a = np.vstack([-p.ineq_matrix, -np.eye(p.size)[nn]])
    if lin_a.shape[0]:
        blocks_a.append(lin_a)
        blocks_b.append(np.concatenate([p.ineq_offset, np.zeros(nn.size)]))
        cones.append(clarabel.NonnegativeConeT(lin_a.shape[0]))
    rt2 = math.sqrt(2.0)
    for blk in p.psd:
        idx = _svec_index(blk.order)
        w = np.array([1.0 if i == j else rt2 for i, j in idx])
        blocks_a.append(-np.array([[blk.coeffs[v, i, j] for v in range(p.size)] for i, j in idx]) * w[:, None])
        blocks_b.append(np.array([blk.constant[i, j] for i, j in idx]) * w)
        cones.append(clarabel.PSDTriangleConeT(blk.order))
    A = sp.csc_matrix(np.vstack(blocks_a))
    b = np.concatenate(blocks_b)
    P = sp.csc_matrix((p.size, p.size))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = s.feastol
    settings.tol_gap_abs = s.abstol
    settings.tol_gap_rel = s.reltol
    settings.max_iter = s.max_iters
    if s.time_limit:
        settings.time_limit = s.time_limit
    t0 = time.perf_counter()
    try:
        res = clarabel.DefaultSolver(P, sign * p.objective, A, b, cones, settings).solve()
    except Exception as exc:  # clarabel raises plain exceptions from Rust
        return _failure(str(exc), time.perf_counter() - t0, s)
    elapsed = time.perf_counter() - t0
    raw = str(res.status)
    x = np.array(res.x)
    z = np.array(res.z)
    if "Infeasible" in raw and "Dual" not in raw:
        return SolverReport("infeasible", math.nan, math.nan, math.nan, math.nan, math.nan, elapsed,
                            res.iterations, solver=solver_info(s), message=raw)
    if "DualInfeasible" in raw:
        return SolverReport("unbounded", math.nan, math.nan, math.nan, math.nan, math.nan, elapsed,
                            res.iterations, solver=solver_info(s), message=raw)
    status: Status = "optimal" if raw == "Solved" else ("near-optimal" if raw == "AlmostSolved" else "failure")
    pos = 0
    eq_d = z[pos:pos + p.eq_matrix.shape[0]]
    pos += eq_d.size
    m = p.ineq_matrix.shape[0]
    lin = z[pos:pos + lin_a.shape[0]]
    pos += lin.size
    psd_d = []
    for blk in p.psd:
        idx = _svec_index(blk.order)
        seg = z[pos:pos + len(idx)]
        pos += len(idx)
        Z = np.zeros((blk.order, blk.order))
        for val, (i, j) in zip(seg, idx):
            Z[i, j] = Z[j, i] = val if i == j else val / rt2
        psd_d.append(Z)
    pobj = p.value(x)
    dobj = p.objective_constant + sign * res.obj_val_dual
    return SolverReport(
        status=status,
        objective=pobj,
        dual_objective=dobj,
        primal_residual=p.violation(x),
        dual_residual=0.0,
        gap=abs(pobj - dobj),
        solve_time=elapsed,
        iterations=res.iterations,
        x=x,
        ineq_duals=lin[:m],
        nonneg_duals=lin[m:],
        eq_duals=eq_d,
        psd_duals=psd_d,
        solver=solver_info(s),
        message=raw,
    )
