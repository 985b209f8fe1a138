import numpy as np
import pytest

from tridist.conic import ConicProgram, PsdConstraint, SolverSettings, solve, solver_info
from tridist.errors import ParameterError


def box_lp(limit=5.0):
    return ConicProgram(["x"], np.array([1.0]), "max", nonneg=np.array([True]),
                        ineq_matrix=np.array([[-1.0]]), ineq_offset=np.array([limit]))


def disc_sdp():
    """max x subject to [[1, x], [x, 1]] PSD; optimum 1."""
    blk = PsdConstraint(np.eye(2), np.array([[[0.0, 1.0], [1.0, 0.0]]]), "disc")
    return ConicProgram(["x"], np.array([1.0]), "max", psd=[blk])


class TestSolve:
    def test_box_lp(self):
        rep = solve(box_lp())
        assert rep.status == "optimal"
        assert rep.objective == pytest.approx(5.0, abs=1e-7)

    def test_constant_psd_block(self):
        blk = PsdConstraint(np.eye(2), np.zeros((1, 2, 2)), "const")
        prog = ConicProgram(["x"], np.array([1.0]), "min", nonneg=np.array([True]), psd=[blk])
        rep = solve(prog)
        assert rep.status == "optimal" and rep.objective == pytest.approx(0.0, abs=1e-7)

    def test_disc_sdp(self):
        rep = solve(disc_sdp())
        assert rep.status == "optimal" and rep.objective == pytest.approx(1.0, abs=1e-6)

    def test_infeasible(self):
        prog = ConicProgram(["x"], np.array([1.0]), "max", nonneg=np.array([True]),
                            ineq_matrix=np.array([[-1.0]]), ineq_offset=np.array([-1.0]))
        assert solve(prog).status == "infeasible"

    def test_unbounded(self):
        prog = ConicProgram(["x"], np.array([1.0]), "max", nonneg=np.array([True]),
                            ineq_matrix=np.array([[1.0]]), ineq_offset=np.array([0.0]))
        assert solve(prog).status == "unbounded"

    def test_equality_rows(self):
        # max x + y s.t. x - y = 1, x <= 3, x, y >= 0
        prog = ConicProgram(["x", "y"], np.array([1.0, 1.0]), "max", nonneg=np.ones(2, bool),
                            ineq_matrix=np.array([[-1.0, 0.0]]), ineq_offset=np.array([3.0]),
                            eq_matrix=np.array([[1.0, -1.0]]), eq_offset=np.array([-1.0]))
        rep = solve(prog)
        assert rep.objective == pytest.approx(5.0, abs=1e-6)
        assert np.allclose(rep.x, [3.0, 2.0], atol=1e-6)

    def test_residuals_nonnegative_and_gap_bounds_error(self):
        for limit in (0.5, 5.0, 123.0):
            rep = solve(box_lp(limit))
            assert min(rep.primal_residual, rep.dual_residual, rep.gap) >= 0
            assert abs(rep.objective - limit) <= rep.gap + 1e-7 * limit

    def test_deterministic(self):
        vals = [solve(disc_sdp()).objective for _ in range(3)]
        assert max(vals) - min(vals) < 1e-9

    def test_violation(self):
        prog = disc_sdp()
        assert prog.violation(np.array([0.5])) == 0.0
        assert prog.violation(np.array([2.0])) == pytest.approx(1.0)

    def test_unknown_backend(self):
        with pytest.raises(ParameterError):
            solve(box_lp(), SolverSettings(backend="nope"))


class TestValidation:
    def test_objective_length(self):
        with pytest.raises(ParameterError):
            ConicProgram(["x", "y"], np.array([1.0]))

    def test_block_shapes(self):
        with pytest.raises(ParameterError):
            ConicProgram(["x"], np.array([1.0]), psd=[PsdConstraint(np.eye(2), np.zeros((1, 3, 3)))])

    def test_undeclared_variable_in_rows(self):
        with pytest.raises(ParameterError):
            ConicProgram(["x"], np.array([1.0]), ineq_matrix=np.ones((1, 2)), ineq_offset=np.ones(1))


class TestSolverInfo:
    def test_distinct(self):
        infos = {solver_info(SolverSettings()), solver_info(SolverSettings(feastol=1e-7)),
                 solver_info(SolverSettings(max_iters=50))}
        assert len(infos) == 3
        assert all("cvxopt" in i for i in infos)


class TestClarabel:
    def test_toy_problems(self):
        pytest.importorskip("clarabel")
        pytest.importorskip("scipy")
        s = SolverSettings(backend="clarabel")
        assert solve(box_lp(), s).objective == pytest.approx(5.0, abs=1e-6)
        assert solve(disc_sdp(), s).objective == pytest.approx(1.0, abs=1e-6)
