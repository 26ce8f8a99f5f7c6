"""LP/MPS writers and readers: canonical text, exact fixed points."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gepkit.model import (
    BINARY,
    EQ,
    GE,
    INTEGER,
    LE,
    LinearExpr,
    ModelInstance,
)
from gepkit.solvers.formats import (
    FormatError,
    emit_lp,
    emit_mps,
    lp_safe_name,
    lp_to_model,
    parse_lp,
    parse_mps,
    read_model,
    write_model,
)


def small_milp() -> ModelInstance:
    m = ModelInstance(name="small")
    x = m.add_var("x", (), lower=0.0, upper=4.0)
    y = m.add_var("y", ("a", 1), kind=INTEGER, lower=0.0, upper=3.0)
    z = m.add_var("z", (), kind=BINARY)
    free = m.add_var("w", (), lower=-math.inf, upper=math.inf)
    e = LinearExpr()
    e.add(x, 1.0).add(y, 2.0)
    m.add_row("cap", (), e, LE, 7.5)
    e2 = LinearExpr(0.5)
    e2.add(z, 1.0).add(free, -0.25)
    m.add_row("mix", ("k",), e2, GE, 0.0)
    e3 = LinearExpr()
    e3.add(x, 1.0).add(free, 1.0)
    m.add_row("pin", (), e3, EQ, 1.0)
    obj = LinearExpr(3.0)
    obj.add(x, 1.5).add(y, 1.0).add(z, 10.0)
    m.set_objective(obj)
    return m


def ball_model() -> ModelInstance:
    m = ModelInstance(name="ball")
    x = m.add_var("x", (), lower=-math.inf)
    y = m.add_var("y", (), lower=-math.inf)
    t = m.add_var("t", (), lower=0.0)
    m.add_quad_row("ball", (), [(x, x, 1.0), (y, y, 1.0), (t, t, -1.0)],
                   LinearExpr(), LE, 0.0)
    e = LinearExpr()
    e.add(t, 1.0)
    m.add_row("lid", (), e, LE, 2.0)
    obj = LinearExpr()
    obj.add(x, -1.0).add(y, -1.0)
    m.set_objective(obj)
    return m


def models_equal(a: ModelInstance, b: ModelInstance) -> bool:
    va = [(v.name, v.kind, v.lower, v.upper) for v in a.canonical_variables()]
    vb = [(v.name, v.kind, v.lower, v.upper) for v in b.canonical_variables()]
    if va != vb:
        return False
    pos_a = {v.name: i for i, v in enumerate(a.canonical_variables())}
    pos_b = {v.name: i for i, v in enumerate(b.canonical_variables())}

    def rows(model, pos):
        out = []
        for row in model.canonical_linear_rows():
            terms = tuple(sorted((pos[model.variables[i].name], c)
                                 for i, c in row.terms))
            out.append((row.name, terms, row.sense, row.rhs))
        for row in model.canonical_quad_rows():
            quad = tuple(sorted(
                (pos[model.variables[i].name], pos[model.variables[j].name], c)
                for i, j, c in row.quad_terms))
            terms = tuple(sorted((pos[model.variables[i].name], c)
                                 for i, c in row.terms))
            out.append((row.name, quad, terms, row.sense, row.rhs))
        return out

    if rows(a, pos_a) != rows(b, pos_b):
        return False
    obj_a = tuple(sorted((pos_a[a.variables[i].name], c)
                         for i, c in a.objective.terms.items()))
    obj_b = tuple(sorted((pos_b[b.variables[i].name], c)
                         for i, c in b.objective.terms.items()))
    return obj_a == obj_b and a.objective.constant == b.objective.constant


def test_lp_name_mapping_inverts():
    assert lp_safe_name("p[gas,1]") == "p(gas,1)"
    assert lp_to_model("p(gas,1)") == "p[gas,1]"
    assert lp_to_model("plain") == "plain"


def test_lp_emit_is_deterministic():
    a, b = small_milp(), small_milp()
    assert emit_lp(a) == emit_lp(b)
    assert emit_mps(a) == emit_mps(b)


def test_lp_round_trip_exact():
    m = small_milp()
    back = parse_lp(emit_lp(m))
    assert models_equal(m, back)


def test_lp_emit_parse_emit_fixed_point():
    m = small_milp()
    text = emit_lp(m)
    assert emit_lp(parse_lp(text)) == text


def test_mps_round_trip_exact():
    m = small_milp()
    back = parse_mps(emit_mps(m))
    assert models_equal(m, back)
    text = emit_mps(m)
    assert emit_mps(parse_mps(text)) == text


def test_quad_rows_survive_both_formats():
    m = ball_model()
    for emit, parse in ((emit_lp, parse_lp), (emit_mps, parse_mps)):
        back = parse(emit(m))
        assert models_equal(m, back)
        assert len(back.quad_rows) == 1
        quad = back.quad_rows[0]
        assert quad.sense == LE
        coefs = sorted(c for _, _, c in quad.quad_terms)
        assert coefs == [-1.0, 1.0, 1.0]


def test_single_variable_model():
    m = ModelInstance(name="one")
    x = m.add_var("x", (), lower=1.0, upper=2.0)
    obj = LinearExpr()
    obj.add(x, 1.0)
    m.set_objective(obj)
    for emit, parse in ((emit_lp, parse_lp), (emit_mps, parse_mps)):
        back = parse(emit(m))
        assert models_equal(m, back)
        assert back.linear_rows == []


def test_write_read_model_by_suffix(tmp_path):
    m = small_milp()
    for suffix in (".lp", ".mps"):
        path = write_model(m, tmp_path / f"m{suffix}")
        assert models_equal(m, read_model(path))
    with pytest.raises(FormatError, match="extension"):
        write_model(m, tmp_path / "m.txt")
    with pytest.raises(FormatError, match="extension"):
        read_model(tmp_path / "m.json")


def test_pinned_binary_keeps_its_bounds():
    # a binary fixed by with_variable_bounds must survive the file formats,
    # otherwise solver subprocesses would quietly unpin it
    m = ModelInstance(name="pin")
    z = m.add_var("commit", ("gas",), kind=BINARY)
    obj = LinearExpr()
    obj.add(z, 1.0)
    m.set_objective(obj)
    pinned = m.with_variable_bounds({z.index: (1.0, 1.0)})
    for emit, parse in ((emit_lp, parse_lp), (emit_mps, parse_mps)):
        back = parse(emit(pinned))
        v = back.var("commit", "gas")
        assert v.kind == BINARY
        assert (v.lower, v.upper) == (1.0, 1.0)


def test_parse_rejects_garbage():
    with pytest.raises(FormatError):
        parse_lp("maximize\n obj: x\nend\n")
    with pytest.raises(FormatError):
        parse_mps("NOT A MODEL\n")


name_strategy = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True)


@st.composite
def random_model(draw):
    m = ModelInstance(name="fuzz")
    n = draw(st.integers(min_value=1, max_value=6))
    vs = []
    seen = set()
    for i in range(n):
        fam = draw(name_strategy)
        key = (i,)
        if (fam, key) in seen:
            continue
        seen.add((fam, key))
        kind = draw(st.sampled_from(["continuous", "integer", "binary"]))
        lo = draw(st.sampled_from([0.0, -1.0, -math.inf, 0.5]))
        hi = draw(st.sampled_from([math.inf, 1.0, 4.0, 12.5]))
        if lo > hi:
            lo, hi = hi, lo
        if kind == "integer" and not math.isfinite(hi):
            hi = 6.0
        if kind == "integer" and lo < 0:
            lo = 0.0
        vs.append(m.add_var(fam, key, kind=kind, lower=lo, upper=hi))
    n_rows = draw(st.integers(min_value=0, max_value=5))
    for r in range(n_rows):
        e = LinearExpr(draw(st.sampled_from([0.0, 1.25, -0.5])))
        for v in vs:
            if draw(st.booleans()):
                e.add(v, draw(st.sampled_from([1.0, -2.5, 0.125, 3.0])))
        sense = draw(st.sampled_from(["<=", ">=", "=="]))
        m.add_row("row", (r,), e, sense, draw(st.sampled_from([0.0, 1.0, -7.5])))
    obj = LinearExpr()
    for v in vs:
        obj.add(v, draw(st.sampled_from([0.0, 1.0, -1.5, 2.25])))
    m.set_objective(obj)
    return m


@settings(max_examples=60, deadline=None)
@given(random_model())
def test_fuzzed_models_round_trip_both_formats(m):
    lp_text = emit_lp(m)
    assert emit_lp(parse_lp(lp_text)) == lp_text
    assert models_equal(m, parse_lp(lp_text))
    mps_text = emit_mps(m)
    assert emit_mps(parse_mps(mps_text)) == mps_text
    assert models_equal(m, parse_mps(mps_text))
