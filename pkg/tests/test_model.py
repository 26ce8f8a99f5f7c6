import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gepkit.model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    INTEGER,
    LE,
    LinearExpr,
    ModelError,
    ModelInstance,
    canonical_name,
    name_sort_key,
)


def test_canonical_name_grammar():
    assert canonical_name("cost", ()) == "cost"
    assert canonical_name("p", ("gas", 1, 2)) == "p[gas,1,2]"


def test_add_var_round_trip():
    m = ModelInstance()
    v = m.add_var("p", ("gas", 1), lower=0.0, upper=2.5)
    assert v.name == "p[gas,1]"
    assert m.var("p", "gas", 1) is v
    assert m.var_by_name("p[gas,1]") is v
    assert m.has_var("p", "gas", 1)
    assert not m.has_var("p", "oil", 1)
    assert not v.is_integral()


def test_binary_bounds_are_clamped():
    m = ModelInstance()
    v = m.add_var("commit", ("gas",), kind=BINARY, lower=-3.0, upper=9.0)
    assert (v.lower, v.upper) == (0.0, 1.0)
    assert v.is_integral()


def test_duplicate_variable_rejected():
    m = ModelInstance()
    m.add_var("x", ("a",))
    with pytest.raises(ModelError, match="duplicate"):
        m.add_var("x", ("a",))


def test_bad_names_rejected():
    m = ModelInstance()
    with pytest.raises(ModelError):
        m.add_var("bad name", ())
    with pytest.raises(ModelError):
        m.add_var("x", ("a,b",))
    with pytest.raises(ModelError):
        m.add_var("x", (1.5,))
    with pytest.raises(ModelError):
        m.add_var("x", (True,))
    with pytest.raises(ModelError):
        m.add_var("y", (), kind="mystery")
    with pytest.raises(ModelError, match="empty bound"):
        m.add_var("z", (), lower=1.0, upper=0.0)


def test_linear_expr_accumulates_and_drops_zero():
    m = ModelInstance()
    a = m.add_var("a", ())
    b = m.add_var("b", ())
    e = LinearExpr(1.0)
    e.add(a, 2.0).add(b, -1.0).add(a, -2.0)
    assert len(e) == 1  # the a-terms cancel away
    e.add_constant(0.5)
    assert e.value([7.0, 3.0]) == pytest.approx(1.5 - 3.0)
    f = e.copy()
    f.add(a, 1.0)
    assert len(e) == 1 and len(f) == 2


def test_add_expr_scales():
    m = ModelInstance()
    a = m.add_var("a", ())
    e = LinearExpr(1.0)
    e.add(a, 2.0)
    g = LinearExpr()
    g.add_expr(e, scale=3.0)
    assert g.constant == pytest.approx(3.0)
    assert g.value([2.0]) == pytest.approx(3.0 + 12.0)


def test_row_constant_folds_into_rhs():
    m = ModelInstance()
    a = m.add_var("a", ())
    e = LinearExpr(2.0)
    e.add(a, 1.0)
    row = m.add_row("cap", ("a",), e, LE, 5.0)
    assert row.rhs == pytest.approx(3.0)
    assert row.activity([1.0]) == pytest.approx(1.0)
    assert row.violation([4.0]) == pytest.approx(1.0)
    assert row.violation([2.0]) == 0.0


def test_row_violation_by_sense():
    m = ModelInstance()
    a = m.add_var("a", ())
    e = LinearExpr()
    e.add(a, 1.0)
    ge = m.add_row("lo", (), e, GE, 2.0)
    eq = m.add_row("pin", (), e, EQ, 2.0)
    assert ge.violation([1.5]) == pytest.approx(0.5)
    assert ge.violation([2.5]) == 0.0
    assert eq.violation([2.5]) == pytest.approx(0.5)
    assert eq.violation([1.5]) == pytest.approx(0.5)


def test_duplicate_row_name_rejected():
    m = ModelInstance()
    a = m.add_var("a", ())
    e = LinearExpr()
    e.add(a, 1.0)
    m.add_row("r", (1,), e, LE, 1.0)
    with pytest.raises(ModelError, match="duplicate"):
        m.add_row("r", (1,), e, GE, 0.0)


def test_quad_row_orders_and_prunes_terms():
    m = ModelInstance()
    a = m.add_var("a", ())
    b = m.add_var("b", ())
    row = m.add_quad_row(
        "cone", (), [(b, a, 1.0), (a, a, 0.0)], LinearExpr(), LE, 4.0
    )
    assert row.quad_terms == ((a.index, b.index, 1.0),)
    assert row.violation([3.0, 2.0]) == pytest.approx(2.0)
    assert row.violation([1.0, 2.0]) == 0.0


def test_max_violation_scans_bounds_and_rows():
    m = ModelInstance()
    a = m.add_var("a", (), upper=1.0)
    e = LinearExpr()
    e.add(a, 1.0)
    m.add_row("limit", (), e, LE, 0.5)
    worst, name = m.max_violation([2.0])
    assert worst == pytest.approx(1.5)
    assert name == "limit"
    worst, name = m.max_violation([0.2])
    assert worst == 0.0 and name == ""


def test_objective_value():
    m = ModelInstance()
    a = m.add_var("a", ())
    obj = LinearExpr(1.0)
    obj.add(a, 3.0)
    m.set_objective(obj)
    assert m.objective_value([2.0]) == pytest.approx(7.0)


def test_with_variable_bounds_returns_new_instance():
    m = ModelInstance()
    a = m.add_var("a", (), kind=INTEGER, lower=0.0, upper=5.0)
    e = LinearExpr()
    e.add(a, 1.0)
    m.add_row("r", (), e, LE, 10.0)
    pinned = m.with_variable_bounds({a.index: (2.0, 2.0)})
    assert pinned is not m
    assert m.variables[a.index].upper == 5.0
    assert pinned.variables[a.index].lower == 2.0
    assert pinned.variables[a.index].upper == 2.0
    assert pinned.variables[a.index].kind == INTEGER
    assert pinned.linear_rows == m.linear_rows
    assert pinned.var("a") is pinned.variables[a.index]
    with pytest.raises(ModelError, match="empty bound"):
        m.with_variable_bounds({a.index: (3.0, 1.0)})


def test_census_counts_by_family():
    m = ModelInstance()
    a = m.add_var("p", ("x",))
    m.add_var("p", ("y",))
    m.add_var("build", ("x",), kind=INTEGER, upper=3)
    e = LinearExpr()
    e.add(a, 1.0)
    m.add_row("cap", ("x",), e, LE, 1.0)
    m.add_row("cap", ("y",), e, LE, 1.0)
    m.add_quad_row("cone", ("x",), [(a, a, 1.0)], LinearExpr(), LE, 1.0)
    assert m.var_census() == {"p": 2, "build": 1}
    assert m.row_census() == {"cap": 2, "cone": 1}


def test_canonical_orderings_are_deterministic():
    m = ModelInstance()
    m.add_var("z", (2,))
    m.add_var("z", (1,))
    m.add_var("a", ("beta",))
    m.add_var("a", ("alpha",))
    names = [v.name for v in m.canonical_variables()]
    assert names == ["a[alpha]", "a[beta]", "z[1]", "z[2]"]
    # numeric components sort numerically, not lexically
    m2 = ModelInstance()
    m2.add_var("x", (10,))
    m2.add_var("x", (2,))
    assert [v.name for v in m2.canonical_variables()] == ["x[2]", "x[10]"]


def test_name_sort_key_mixed_components():
    assert name_sort_key("x", (2,)) < name_sort_key("x", (10,))
    assert name_sort_key("a", ("b",)) < name_sort_key("b", ())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.floats(-5, 5)), max_size=12))
def test_expr_value_matches_manual_dot_product(pairs):
    m = ModelInstance()
    vs = [m.add_var("v", (i,), lower=-10.0) for i in range(5)]
    e = LinearExpr(0.25)
    for idx, coef in pairs:
        e.add(vs[idx], coef)
    point = [0.5, -1.0, 2.0, 0.0, 3.0]
    manual = 0.25 + sum(coef * point[idx] for idx, coef in pairs)
    assert e.value(point) == pytest.approx(manual)
