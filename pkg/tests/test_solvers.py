import math
import sys

import pytest

from gepkit.model import (
    BINARY,
    EQ,
    GE,
    INTEGER,
    LE,
    LinearExpr,
    ModelInstance,
)
from gepkit.solvers.interface import (
    Solution,
    SolverError,
    SolverRequest,
    available_solvers,
    check_solution,
    fix_variables,
    integral_enough,
    pick_solver,
    relative_gap,
    snap_integers,
    solve,
)


def knapsack() -> ModelInstance:
    """max 5a + 4b + 3c s.t. 2a + 3b + c <= 4, binary; optimum picks a and c."""
    m = ModelInstance(name="knap")
    a = m.add_var("take", ("a",), kind=BINARY)
    b = m.add_var("take", ("b",), kind=BINARY)
    c = m.add_var("take", ("c",), kind=BINARY)
    e = LinearExpr()
    e.add(a, 2.0).add(b, 3.0).add(c, 1.0)
    m.add_row("weight", (), e, LE, 4.0)
    obj = LinearExpr()
    obj.add(a, -5.0).add(b, -4.0).add(c, -3.0)
    m.set_objective(obj)
    return m


def diet_lp() -> ModelInstance:
    """min 2x + 3y s.t. x + y >= 4, x - y <= 2; optimum at (3, 1)."""
    m = ModelInstance(name="diet")
    x = m.add_var("x", ())
    y = m.add_var("y", ())
    e1 = LinearExpr()
    e1.add(x, 1.0).add(y, 1.0)
    m.add_row("need", (), e1, GE, 4.0)
    e2 = LinearExpr()
    e2.add(x, 1.0).add(y, -1.0)
    m.add_row("skew", (), e2, LE, 2.0)
    obj = LinearExpr()
    obj.add(x, 2.0).add(y, 3.0)
    m.set_objective(obj)
    return m


def ball_socp() -> ModelInstance:
    """min -x - y inside x^2 + y^2 <= 2; optimum at (1, 1)."""
    m = ModelInstance(name="disc")
    x = m.add_var("x", (), lower=-math.inf)
    y = m.add_var("y", (), lower=-math.inf)
    m.add_quad_row("disc", (), [(x, x, 1.0), (y, y, 1.0)], LinearExpr(), LE, 2.0)
    obj = LinearExpr()
    obj.add(x, -1.0).add(y, -1.0)
    m.set_objective(obj)
    return m


def test_available_solvers():
    names = available_solvers()
    assert {"highs", "clarabel", "conic_bb", "subprocess"} <= set(names)


def test_pick_solver_dispatch():
    assert pick_solver(diet_lp()) == "highs"
    assert pick_solver(knapsack()) == "highs"
    assert pick_solver(ball_socp()) == "clarabel"
    conic_mip = ball_socp()
    conic_mip.add_var("n", (), kind=INTEGER, upper=3.0)
    assert pick_solver(conic_mip) == "conic_bb"
    # an integer variable pinned by bounds no longer needs a MIP solver
    pinned = conic_mip.with_variable_bounds(
        {conic_mip.var("n").index: (1.0, 1.0)}
    )
    assert pick_solver(pinned) == "clarabel"


def test_unknown_solver_name():
    with pytest.raises(SolverError, match="unknown solver"):
        solve(diet_lp(), solver="simplex3000")


def test_lp_optimum():
    sol = solve(diet_lp())
    assert sol.is_optimal()
    assert sol.objective == pytest.approx(9.0, abs=1e-7)
    assert sol.value("x") == pytest.approx(3.0, abs=1e-7)
    assert sol.value("y") == pytest.approx(1.0, abs=1e-7)
    assert check_solution(diet_lp(), sol) <= 1e-6


def test_milp_optimum():
    sol = solve(knapsack())
    assert sol.is_optimal()
    assert sol.objective == pytest.approx(-8.0, abs=1e-7)
    assert sol.value("take[a]") == pytest.approx(1.0)
    assert sol.value("take[b]") == pytest.approx(0.0)
    assert sol.value("take[c]") == pytest.approx(1.0)


def test_socp_optimum_continuous():
    sol = solve(ball_socp())
    assert sol.is_optimal()
    assert sol.objective == pytest.approx(-2.0, abs=1e-6)
    assert sol.value("x") == pytest.approx(1.0, abs=1e-5)
    assert sol.solver == "clarabel"


def test_socp_optimum_with_integers():
    m = ball_socp()
    n = m.add_var("n", (), kind=INTEGER, upper=3.0)
    x = m.var("x")
    e = LinearExpr()
    e.add(x, 1.0).add(n, -1.0)
    m.add_row("tie", (), e, LE, 0.0)  # x <= n, so n = 1 at the optimum
    obj = m.objective.copy()
    obj.add(n, 0.1)
    m.set_objective(obj)
    sol = solve(m)
    assert sol.is_optimal()
    assert sol.solver == "conic_bb"
    assert sol.value("n") == pytest.approx(1.0, abs=1e-6)
    assert sol.objective == pytest.approx(-1.9, abs=1e-5)


def test_infeasible_status():
    m = diet_lp()
    x = m.var("x")
    e = LinearExpr()
    e.add(x, 1.0)
    m.add_row("contradiction", (), e, GE, 100.0)
    m2 = m.with_variable_bounds({x.index: (0.0, 1.0)})
    sol = solve(m2)
    assert sol.status == "infeasible"
    assert not sol.has_values()


def test_fix_variables_pins_without_mutating():
    m = knapsack()
    pinned = fix_variables(m, {"take[a]": 0.0}, mode="fix")
    assert pinned is not m
    assert m.var("take", "a").upper == 1.0
    assert pinned.var("take", "a").upper == 0.0
    sol = solve(pinned)
    # without item a the best pack is b + c
    assert sol.objective == pytest.approx(-7.0, abs=1e-7)


def test_fix_variables_lower_bound_mode():
    m = knapsack()
    floored = fix_variables(m, {"take[b]": 1.0}, mode="lower_bound")
    assert floored.var("take", "b").lower == 1.0
    assert floored.var("take", "b").upper == 1.0
    sol = solve(floored)
    assert sol.objective == pytest.approx(-7.0, abs=1e-7)


def test_fix_variables_rounds_near_integers():
    m = knapsack()
    pinned = fix_variables(m, {"take[a]": 0.99999999})
    assert pinned.var("take", "a").lower == 1.0
    with pytest.raises(SolverError, match="non-integral"):
        fix_variables(m, {"take[a]": 0.4})
    with pytest.raises(ValueError, match="mode"):
        fix_variables(m, {"take[a]": 1.0}, mode="sideways")


def test_snap_integers():
    m = knapsack()
    x = m.add_var("frac", ())
    vals = {"take[a]": 0.9999999999, "take[b]": 0.5, "frac": 0.9999999999}
    out = snap_integers(m, vals)
    assert out["take[a]"] == 1.0
    assert out["take[b]"] == 0.5  # too far from integral to snap
    assert out["frac"] == 0.9999999999  # continuous, left alone
    assert vals["take[a]"] == 0.9999999999  # input untouched


def test_integral_enough_and_relative_gap():
    assert integral_enough(2.0000000001)
    assert not integral_enough(2.3)
    assert relative_gap(10.0, 10.0) == 0.0
    assert relative_gap(10.0, 9.0) == pytest.approx(0.1)
    assert relative_gap(0.5, 0.4) == pytest.approx(0.1)  # floor at 1.0


def test_check_solution_flags_violations():
    m = diet_lp()
    bogus = Solution(status="optimal", objective=0.0,
                     values={"x": 0.0, "y": 0.0}, solver="fake")
    with pytest.raises(SolverError):
        check_solution(m, bogus)
    empty = Solution(status="infeasible", objective=None, values={}, solver="fake")
    with pytest.raises(SolverError, match="no values"):
        check_solution(m, empty)


def test_time_limit_is_accepted():
    sol = solve(knapsack(), request=SolverRequest(time_limit=30.0, mip_gap=1e-9))
    assert sol.is_optimal()


def test_subprocess_adapter_round_trip(monkeypatch):
    shim = f"{sys.executable} -m gepkit.solvers.subprocess_adapter"
    monkeypatch.setenv("GEPKIT_SOLVER_CMD", shim)
    sol = solve(knapsack(), solver="subprocess")
    assert sol.is_optimal()
    assert sol.objective == pytest.approx(-8.0, abs=1e-7)
    assert sol.value("take[a]") == pytest.approx(1.0)
    assert sol.solver == "subprocess"


def test_subprocess_adapter_requires_command(monkeypatch):
    monkeypatch.delenv("GEPKIT_SOLVER_CMD", raising=False)
    with pytest.raises(SolverError, match="GEPKIT_SOLVER_CMD"):
        solve(diet_lp(), solver="subprocess")


def test_shim_reports_errors_through_file(tmp_path):
    from gepkit.solvers.subprocess_adapter import shim_main

    model = tmp_path / "m.lp"
    model.write_text("not an lp file\n")
    out = tmp_path / "sol.txt"
    code = shim_main([str(model), str(tmp_path / "absent.txt"), str(out)])
    assert code == 1
    assert out.read_text().startswith("status error")


def test_shim_usage_error():
    from gepkit.solvers.subprocess_adapter import shim_main

    assert shim_main(["just-one-arg"]) == 2
