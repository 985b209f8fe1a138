"""Delsarte linear program and the primal three-point semidefinite program."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conic import ConicProgram, PsdConstraint, SolverReport, SolverSettings, solve, solver_info
from .harmonic import DistanceTriple
from .poly import gegenbauer_table
from .threepoint import SdpParams, s_matrices

MARGIN_FACTOR = 10.0
SDP_VARIABLES = [f"x{i}" for i in range(1, 14)]


def triple_arguments(d1, d2, d3) -> list[tuple]:
    """Argument triples (u, v, t) attached to x1..x13, in order."""
    return [
        (d1, d1, 1.0), (d2, d2, 1.0), (d3, d3, 1.0),
        (d1, d1, d1), (d2, d2, d2), (d3, d3, d3),
        (d1, d1, d2), (d1, d1, d3), (d2, d2, d1),
        (d2, d2, d3), (d3, d3, d1), (d3, d3, d2),
        (d1, d2, d3),
    ]


def build_delsarte_lp(n: int, d: DistanceTriple, p_lp: int) -> ConicProgram:
    """max 1 + x1 + x2 + x3 s.t. 1 + sum_j x_j G_k(d_j) >= 0 for k = 1..p_lp, x >= 0."""
    g = gegenbauer_table(n, p_lp, np.array(d.as_tuple()))[1:]
    return ConicProgram(
        variables=["x1", "x2", "x3"],
        objective=np.ones(3),
        objective_constant=1.0,
        sense="max",
        nonneg=np.ones(3, bool),
        ineq_matrix=g,
        ineq_offset=np.ones(p_lp),
    )


def build_sdp_primal(n: int, d: DistanceTriple, params: SdpParams = SdpParams()) -> ConicProgram:
    nv = 13
    obj = np.zeros(nv)
    obj[:3] = 1.0 / 3.0
    g = np.zeros((params.p_lp, nv))
    g[:, :3] = gegenbauer_table(n, params.p_lp, np.array(d.as_tuple()))[1:]

    # [[1, s/3], [s/3, s/3 + r]] with s = x1+x2+x3 and r = x4+...+x13
    small = np.zeros((nv, 2, 2))
    small[:3] = [[0.0, 1 / 3], [1 / 3, 1 / 3]]
    small[3:] = [[0.0, 0.0], [0.0, 1.0]]
    blocks = [PsdConstraint(np.array([[1.0, 0.0], [0.0, 0.0]]), small, "moment")]

    per_arg = [s_matrices(n, *a, params.p_sdp) for a in triple_arguments(*d.as_tuple())]
    base = s_matrices(n, 1.0, 1.0, 1.0, params.p_sdp)
    for k in range(params.p_sdp + 1):
        coeffs = np.stack([per_arg[j][k] for j in range(nv)])
        blocks.append(PsdConstraint(base[k], coeffs, f"S{k}"))
    return ConicProgram(
        variables=list(SDP_VARIABLES),
        objective=obj,
        objective_constant=1.0,
        sense="max",
        nonneg=np.ones(nv, bool),
        ineq_matrix=g,
        ineq_offset=np.full(params.p_lp, 3.0),
        psd=blocks,
    )


@dataclass(frozen=True)
class BoundValue:
    """Upper bound extracted from a solve.

    ``value`` is the larger of the primal and dual objectives, and
    ``safety_margin`` is ten times the gap plus the residuals. Integer
    conclusions use ``floor(value + safety_margin)``.
    """

    value: float
    status: str
    safety_margin: float
    solver: str = ""
    solve_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal") and math.isfinite(self.value)

    @property
    def certified(self) -> float:
        return self.value + self.safety_margin if self.ok else math.inf

    @property
    def integer(self) -> float:
        """floor(value + margin), or +inf when there is no usable value."""
        return float(math.floor(self.certified + 1e-12)) if self.ok else math.inf

    def to_dict(self) -> dict:
        return {
            "value": self.value if self.ok else None,
            "status": self.status,
            "margin": self.safety_margin if self.ok else None,
            "solver": self.solver,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundValue":
        val = data["value"]
        return cls(
            value=math.nan if val is None else float(val),
            status=data["status"],
            safety_margin=math.nan if data.get("margin") is None else float(data["margin"]),
            solver=data.get("solver", ""),
        )


def bound_from_report(rep: SolverReport) -> BoundValue:
    if rep.status not in ("optimal", "near-optimal"):
        status = "solver-failure" if rep.status == "failure" else rep.status
        return BoundValue(math.nan, status, math.nan, rep.solver, rep.solve_time)
    value = max(rep.objective, rep.dual_objective)
    margin = MARGIN_FACTOR * (rep.gap + max(rep.primal_residual, rep.dual_residual))
    return BoundValue(value, rep.status, margin, rep.solver, rep.solve_time)


def solve_bound(program: ConicProgram, settings: Optional[SolverSettings] = None) -> BoundValue:
    return bound_from_report(solve(program, settings))


def lp_bound(n: int, d: DistanceTriple, p_lp: int = 18, settings: Optional[SolverSettings] = None) -> BoundValue:
    return solve_bound(build_delsarte_lp(n, d, p_lp), settings)


def sdp_bound(n: int, d: DistanceTriple, params: SdpParams = SdpParams(),
              settings: Optional[SolverSettings] = None) -> BoundValue:
    return solve_bound(build_sdp_primal(n, d, params), settings)


__all__ = [
    "BoundValue", "build_delsarte_lp", "build_sdp_primal", "solve_bound", "lp_bound",
    "sdp_bound", "bound_from_report", "triple_arguments", "solver_info",
]
