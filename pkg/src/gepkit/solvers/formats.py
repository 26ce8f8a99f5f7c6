"""Deterministic LP and MPS model files: emit and parse.

Emission is canonical: variables and rows appear in name-sorted order, floats
are rendered with ``repr`` (shortest round-trip form, ``-0.0`` normalized),
and long expressions wrap at a fixed width. Emitting a model twice yields
byte-identical text, and emit -> parse -> emit is a fixed point.

Structured names ``family[a,b]`` are written as ``family(a,b)`` because
square brackets delimit quadratic expressions in the LP grammar. Components
never contain parentheses, so the mapping inverts exactly.

The parsers cover the dialect this module emits (plus minor whitespace and
keyword-case variation), which is also the input contract of the external
solver shim. Only minimization models are supported.
"""

from __future__ import annotations

from pathlib import Path

from ..model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    INTEGER,
    LE,
    LinearExpr,
    ModelInstance,
    name_sort_key,
)

_INF = float("inf")
_WRAP = 200


class FormatError(ValueError):
    """Raised for unwritable models or unreadable model text."""


# -- names and numbers -------------------------------------------------------


def lp_safe_name(name: str) -> str:
    return name.replace("[", "(").replace("]", ")")


def lp_to_model(name: str) -> str:
    if name.endswith(")") and "(" in name:
        head, _, inner = name.partition("(")
        return head + "[" + inner[:-1] + "]"
    return name


def split_name(name: str) -> tuple[str, tuple]:
    """Family and key components of a model-space name."""
    if "[" not in name:
        return name, ()
    family, _, rest = name.partition("[")
    if not rest.endswith("]"):
        raise FormatError(f"malformed name {name!r}")
    key = []
    for comp in rest[:-1].split(","):
        key.append(int(comp) if _is_int(comp) else comp)
    return family, tuple(key)


def _is_int(token: str) -> bool:
    body = token[1:] if token[:1] == "-" else token
    return body.isdigit()


def _fnum(value: float) -> str:
    value = float(value)
    if value != value or value in (_INF, -_INF):
        raise FormatError(f"non-finite value {value!r} in model body")
    if value == 0.0:
        value = 0.0
    return repr(value)


def _fbound(value: float) -> str:
    if value == _INF:
        return "infinity"
    if value == -_INF:
        return "-infinity"
    return _fnum(value)


def _tofloat(token: str) -> float | None:
    low = token.lower()
    if low in ("infinity", "inf", "+infinity", "+inf"):
        return _INF
    if low in ("-infinity", "-inf"):
        return -_INF
    try:
        return float(token)
    except ValueError:
        return None


# -- emission -----------------------------------------------------------------


def _expr_tokens(pairs: list[tuple[str, float]], constant: float = 0.0) -> list[str]:
    tokens: list[str] = []
    for name, coef in pairs:
        tokens.append("-" if coef < 0 else "+")
        tokens.append(_fnum(abs(coef)))
        tokens.append(name)
    if constant != 0.0:
        tokens.append("-" if constant < 0 else "+")
        tokens.append(_fnum(abs(constant)))
    return tokens


def _quad_tokens(entries: list[tuple[str, str, float]]) -> list[str]:
    tokens: list[str] = ["["]
    for name_a, name_b, coef in entries:
        tokens.append("-" if coef < 0 else "+")
        tokens.append(_fnum(abs(coef)))
        if name_a == name_b:
            tokens.extend([name_a, "^2"])
        else:
            tokens.extend([name_a, "*", name_b])
    tokens.append("]")
    return tokens


def _wrap(prefix: str, tokens: list[str], out: list[str]) -> None:
    line = prefix
    for i, tok in enumerate(tokens):
        if tok in ("+", "-") and i > 0 and len(line) + len(tok) > _WRAP:
            out.append(line)
            line = "   " + tok
        else:
            line += " " + tok
    out.append(line)


def _sorted_pairs(model: ModelInstance, terms) -> list[tuple[str, float]]:
    pairs = [(model.variables[i], c) for i, c in terms]
    pairs.sort(key=lambda vc: name_sort_key(vc[0].family, vc[0].key))
    return [(lp_safe_name(v.name), c) for v, c in pairs]


def emit_lp(model: ModelInstance) -> str:
    if not model.variables:
        raise FormatError("cannot emit a model with no variables")
    variables = model.canonical_variables()
    anchor = lp_safe_name(variables[0].name)
    out = [f"\\ model {model.name}", "Minimize"]

    obj_tokens = _expr_tokens(
        _sorted_pairs(model, model.objective.terms.items()), model.objective.constant
    )
    if not obj_tokens:
        obj_tokens = ["+", "0.0", anchor]
    _wrap(" obj:", obj_tokens, out)

    out.append("Subject To")
    sense_text = {LE: "<=", GE: ">=", EQ: "="}
    for row in model.canonical_linear_rows():
        tokens = _expr_tokens(_sorted_pairs(model, row.terms))
        if not tokens:
            tokens = ["+", "0.0", anchor]
        tokens += [sense_text[row.sense], _fnum(row.rhs)]
        _wrap(f" {lp_safe_name(row.name)}:", tokens, out)
    for row in model.canonical_quad_rows():
        tokens = _expr_tokens(_sorted_pairs(model, row.terms))
        entries = [
            (
                lp_safe_name(model.variables[i].name),
                lp_safe_name(model.variables[j].name),
                c,
            )
            for i, j, c in row.quad_terms
        ]
        entries.sort(key=lambda e: (e[0], e[1]))
        if tokens:
            tokens.append("+")
        tokens += _quad_tokens(entries)
        tokens += [sense_text[row.sense], _fnum(row.rhs)]
        _wrap(f" {lp_safe_name(row.name)}:", tokens, out)

    out.append("Bounds")
    for v in variables:
        name = lp_safe_name(v.name)
        if v.lower == -_INF and v.upper == _INF:
            out.append(f" {name} free")
        elif v.lower == -_INF:
            out.append(f" -infinity <= {name} <= {_fnum(v.upper)}")
        elif v.upper == _INF:
            out.append(f" {name} >= {_fnum(v.lower)}")
        elif v.lower == v.upper:
            out.append(f" {name} = {_fnum(v.lower)}")
        else:
            out.append(f" {_fnum(v.lower)} <= {name} <= {_fnum(v.upper)}")

    binaries = [v for v in variables if v.kind == BINARY]
    integers = [v for v in variables if v.kind == INTEGER]
    if binaries:
        out.append("Binary")
        out.extend(f" {lp_safe_name(v.name)}" for v in binaries)
    if integers:
        out.append("General")
        out.extend(f" {lp_safe_name(v.name)}" for v in integers)
    out.append("End")
    return "\n".join(out) + "\n"


# -- LP parsing ---------------------------------------------------------------

_SECTION_WORDS = {
    "bounds": "bounds",
    "binary": "binary",
    "binaries": "binary",
    "bin": "binary",
    "general": "general",
    "generals": "general",
    "gen": "general",
    "end": "end",
}


def _parse_terms(tokens: list[str], where: str):
    """Expression tokens -> (linear dict, quad list, constant, sense, rhs)."""
    linear: dict[str, float] = {}
    quad: list[tuple[str, str, float]] = []
    constant = 0.0
    sense = None
    rhs = None
    sign = 1.0
    in_quad = False
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in ("<=", "=<", ">=", "=>", "="):
            if in_quad:
                raise FormatError(f"{where}: sense inside quadratic bracket")
            sense = {"<=": LE, "=<": LE, ">=": GE, "=>": GE, "=": EQ}[tok]
            if i + 1 >= len(tokens):
                raise FormatError(f"{where}: missing right-hand side")
            rhs = _tofloat(tokens[i + 1])
            if rhs is None:
                raise FormatError(f"{where}: bad right-hand side {tokens[i + 1]!r}")
            if i + 2 != len(tokens):
                raise FormatError(f"{where}: trailing tokens after right-hand side")
            break
        if tok == "+":
            i += 1
            continue
        if tok == "-":
            sign = -sign
            i += 1
            continue
        if tok == "[":
            in_quad = True
            i += 1
            continue
        if tok == "]":
            in_quad = False
            i += 1
            continue
        value = _tofloat(tok)
        if value is not None:
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is not None and _tofloat(nxt) is None and nxt not in (
                "+", "-", "[", "]", "<=", "=<", ">=", "=>", "=", "*",
            ):
                coef = sign * value
                name = nxt
                i += 2
            else:
                constant += sign * value
                sign = 1.0
                i += 1
                continue
        else:
            coef = sign
            name = tok
            i += 1
        sign = 1.0
        model_name = lp_to_model(name)

        follows = tokens[i] if i < len(tokens) else None
        if follows == "^2" or (follows == "^" and i + 1 < len(tokens) and tokens[i + 1] == "2"):
            i += 1 if follows == "^2" else 2
            if not in_quad:
                raise FormatError(f"{where}: squared term outside brackets")
            quad.append((model_name, model_name, coef))
        elif follows == "*":
            if i + 1 >= len(tokens):
                raise FormatError(f"{where}: dangling product")
            other = lp_to_model(tokens[i + 1])
            i += 2
            if not in_quad:
                raise FormatError(f"{where}: product term outside brackets")
            quad.append((model_name, other, coef))
        else:
            if in_quad:
                raise FormatError(f"{where}: linear term inside brackets")
            linear[model_name] = linear.get(model_name, 0.0) + coef
    if in_quad:
        raise FormatError(f"{where}: unclosed quadratic bracket")
    return linear, quad, constant, sense, rhs


def parse_lp(text: str) -> ModelInstance:
    model_name = "model"
    section = "preamble"
    rows: list[tuple[str, list[str]]] = []  # (row name, expression tokens)
    objective_tokens: list[str] = []
    current: list[str] | None = None
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    integers: set[str] = set()

    for raw in text.splitlines():
        line, _, comment = raw.partition("\\")
        if comment.strip().startswith("model ") and not line.strip():
            model_name = comment.strip()[6:]
        tokens = line.split()
        if not tokens:
            continue
        low = [t.lower() for t in tokens]

        if low[0] in ("minimize", "minimise", "min"):
            section = "objective"
            tokens = tokens[1:]
        elif low[0] in ("maximize", "maximise", "max"):
            raise FormatError("only minimization models are supported")
        elif low[0] == "subject" and len(low) > 1 and low[1] == "to":
            section = "rows"
            current = None
            tokens = tokens[2:]
        elif low[0] in ("st", "s.t.", "such") :
            section = "rows"
            current = None
            tokens = tokens[1:] if low[0] != "such" else tokens[2:]
        elif low[0] in _SECTION_WORDS and len(tokens) == 1:
            section = _SECTION_WORDS[low[0]]
            current = None
            tokens = []
        if not tokens:
            continue

        if section == "objective":
            if tokens[0].endswith(":"):
                tokens = tokens[1:]
            objective_tokens.extend(tokens)
        elif section == "rows":
            if tokens[0].endswith(":"):
                rows.append((lp_to_model(tokens[0][:-1]), []))
                current = rows[-1][1]
                tokens = tokens[1:]
            if current is None:
                raise FormatError(f"constraint tokens before any row label: {tokens}")
            current.extend(tokens)
        elif section == "bounds":
            _parse_bound_line(tokens, bounds)
        elif section == "binary":
            binaries.update(lp_to_model(t) for t in tokens)
        elif section == "general":
            integers.update(lp_to_model(t) for t in tokens)
        elif section == "end":
            break
        elif section == "preamble":
            raise FormatError(f"unexpected tokens before objective: {tokens}")

    obj_linear, obj_quad, obj_const, sense, _ = _parse_terms(objective_tokens, "objective")
    if obj_quad or sense is not None:
        raise FormatError("objective must be linear")

    parsed_rows = []
    names: set[str] = set(bounds) | binaries | integers | set(obj_linear)
    for row_name, tokens in rows:
        linear, quad, constant, sense, rhs = _parse_terms(tokens, row_name)
        if sense is None:
            raise FormatError(f"row {row_name}: missing sense")
        parsed_rows.append((row_name, linear, quad, rhs - constant, sense))
        names.update(linear)
        names.update(n for a, b, _ in quad for n in (a, b))

    return _build_model(
        model_name, names, bounds, binaries, integers, obj_linear, obj_const, parsed_rows
    )


def _parse_bound_line(tokens: list[str], bounds: dict[str, tuple[float, float]]) -> None:
    if len(tokens) == 2 and tokens[1].lower() == "free":
        bounds[lp_to_model(tokens[0])] = (-_INF, _INF)
        return
    if len(tokens) == 3:
        name, op, value = tokens[0], tokens[1], _tofloat(tokens[2])
        if _tofloat(name) is not None:  # "num <= name" form
            value0, op, name2 = _tofloat(tokens[0]), tokens[1], lp_to_model(tokens[2])
            if op in ("<=", "=<"):
                old = bounds.get(name2, (0.0, _INF))
                bounds[name2] = (value0, old[1])
                return
            raise FormatError(f"bad bound line: {tokens}")
        name = lp_to_model(name)
        if value is None:
            raise FormatError(f"bad bound line: {tokens}")
        old = bounds.get(name, (0.0, _INF))
        if op in ("<=", "=<"):
            bounds[name] = (old[0], value)
        elif op in (">=", "=>"):
            bounds[name] = (value, old[1])
        elif op == "=":
            bounds[name] = (value, value)
        else:
            raise FormatError(f"bad bound line: {tokens}")
        return
    if len(tokens) == 5 and tokens[1] in ("<=", "=<") and tokens[3] in ("<=", "=<"):
        lo, hi = _tofloat(tokens[0]), _tofloat(tokens[4])
        if lo is None or hi is None:
            raise FormatError(f"bad bound line: {tokens}")
        bounds[lp_to_model(tokens[2])] = (lo, hi)
        return
    raise FormatError(f"bad bound line: {tokens}")


def _build_model(
    model_name: str,
    names: set[str],
    bounds: dict[str, tuple[float, float]],
    binaries: set[str],
    integers: set[str],
    obj_linear: dict[str, float],
    obj_const: float,
    parsed_rows: list,
) -> ModelInstance:
    model = ModelInstance(name=model_name)
    ordered = sorted(names, key=lambda n: name_sort_key(*split_name(n)))
    for name in ordered:
        family, key = split_name(name)
        if name in binaries:
            kind, default = BINARY, (0.0, 1.0)
        elif name in integers:
            kind, default = INTEGER, (0.0, _INF)
        else:
            kind, default = CONTINUOUS, (0.0, _INF)
        lo, hi = bounds.get(name, default)
        model.add_var(family, key, kind=kind, lower=lo, upper=hi)

    objective = LinearExpr(obj_const)
    for name, coef in obj_linear.items():
        objective.add(model.var_by_name(name), coef)
    model.set_objective(objective)

    for row_name, linear, quad, rhs, sense in parsed_rows:
        family, key = split_name(row_name)
        expr = LinearExpr()
        for name, coef in linear.items():
            expr.add(model.var_by_name(name), coef)
        if quad:
            quad_handles = [
                (model.var_by_name(a), model.var_by_name(b), c) for a, b, c in quad
            ]
            model.add_quad_row(family, key, quad_handles, expr, sense, rhs)
        else:
            model.add_row(family, key, expr, sense, rhs)
    return model


# -- MPS ----------------------------------------------------------------------


def emit_mps(model: ModelInstance) -> str:
    if not model.variables:
        raise FormatError("cannot emit a model with no variables")
    out = [f"NAME {model.name}", "ROWS", " N obj"]
    sense_type = {LE: "L", GE: "G", EQ: "E"}
    lin_rows = model.canonical_linear_rows()
    quad_rows = model.canonical_quad_rows()
    all_rows = lin_rows + quad_rows
    for row in all_rows:
        out.append(f" {sense_type[row.sense]} {lp_safe_name(row.name)}")

    entries: dict[int, list[tuple[str, float]]] = {v.index: [] for v in model.variables}
    for i, coef in model.objective.terms.items():
        if coef != 0.0:
            entries[i].append(("obj", coef))
    for row in all_rows:
        row_name = lp_safe_name(row.name)
        for i, coef in row.terms:
            entries[i].append((row_name, coef))

    out.append("COLUMNS")
    integral = False
    for v in model.canonical_variables():
        want = v.is_integral()
        if want != integral:
            out.append(f" MARKER 'MARKER' '{'INTORG' if want else 'INTEND'}'")
            integral = want
        name = lp_safe_name(v.name)
        cols = entries[v.index]
        if not cols:
            cols = [("obj", 0.0)]
        for row_name, coef in cols:
            out.append(f" {name} {row_name} {_fnum(coef)}")
    if integral:
        out.append(" MARKER 'MARKER' 'INTEND'")

    out.append("RHS")
    if model.objective.constant != 0.0:
        out.append(f" RHS obj {_fnum(-model.objective.constant)}")
    for row in all_rows:
        out.append(f" RHS {lp_safe_name(row.name)} {_fnum(row.rhs)}")

    out.append("BOUNDS")
    for v in model.canonical_variables():
        name = lp_safe_name(v.name)
        if v.kind == BINARY:
            out.append(f" BV BND {name}")
            # pinned binaries carry bounds tighter than [0, 1]
            if v.lower != 0.0:
                out.append(f" LO BND {name} {_fnum(v.lower)}")
            if v.upper != 1.0:
                out.append(f" UP BND {name} {_fnum(v.upper)}")
        elif v.lower == -_INF and v.upper == _INF:
            out.append(f" FR BND {name}")
        elif v.lower == v.upper:
            out.append(f" FX BND {name} {_fnum(v.lower)}")
        else:
            if v.lower == -_INF:
                out.append(f" MI BND {name}")
            else:
                out.append(f" LO BND {name} {_fnum(v.lower)}")
            if v.upper != _INF:
                out.append(f" UP BND {name} {_fnum(v.upper)}")

    for row in quad_rows:
        out.append(f"QCMATRIX {lp_safe_name(row.name)}")
        named = []
        for i, j, coef in row.quad_terms:
            a = lp_safe_name(model.variables[i].name)
            b = lp_safe_name(model.variables[j].name)
            named.append((a, b, coef))
        named.sort(key=lambda e: (e[0], e[1]))
        for a, b, coef in named:
            if a == b:
                out.append(f" {a} {a} {_fnum(coef)}")
            else:
                out.append(f" {a} {b} {_fnum(coef / 2.0)}")
                out.append(f" {b} {a} {_fnum(coef / 2.0)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> ModelInstance:
    model_name = "model"
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_terms: dict[str, dict[str, float]] = {}
    var_kind: dict[str, str] = {}
    rhs: dict[str, float] = {}
    bound_lo: dict[str, float] = {}
    bound_hi: dict[str, float] = {}
    quad: dict[str, dict[tuple[str, str], float]] = {}
    quad_row = None
    obj_const = 0.0
    integral = False
    type_map = {"L": LE, "G": GE, "E": EQ}

    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        starts_flush = not raw[0].isspace()
        tokens = raw.split()
        if starts_flush:
            head = tokens[0].upper()
            if head == "NAME":
                model_name = tokens[1] if len(tokens) > 1 else "model"
                section = "name"
            elif head in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                section = head.lower()
            elif head == "QCMATRIX":
                section = "qcmatrix"
                quad_row = lp_to_model(tokens[1])
                quad.setdefault(quad_row, {})
            elif head == "ENDATA":
                break
            elif head == "RANGES":
                raise FormatError("RANGES sections are not supported")
            else:
                raise FormatError(f"unknown MPS section {tokens[0]!r}")
            continue

        if section == "rows":
            kind, name = tokens[0].upper(), lp_to_model(tokens[1])
            if kind == "N":
                continue  # objective row
            if kind not in type_map:
                raise FormatError(f"unknown row type {tokens[0]!r}")
            row_sense[name] = type_map[kind]
            row_order.append(name)
        elif section == "columns":
            if "'MARKER'" in tokens:
                integral = "'INTORG'" in tokens
                continue
            name = lp_to_model(tokens[0])
            var_kind.setdefault(name, INTEGER if integral else CONTINUOUS)
            pairs = tokens[1:]
            if len(pairs) % 2:
                raise FormatError(f"odd column entry: {tokens}")
            for at in range(0, len(pairs), 2):
                row_name = lp_to_model(pairs[at])
                coef = _tofloat(pairs[at + 1])
                if coef is None:
                    raise FormatError(f"bad coefficient {pairs[at + 1]!r}")
                terms = col_terms.setdefault(row_name, {})
                terms[name] = terms.get(name, 0.0) + coef
        elif section == "rhs":
            for at in range(1, len(tokens), 2):
                row_name = lp_to_model(tokens[at])
                value = _tofloat(tokens[at + 1])
                if value is None:
                    raise FormatError(f"bad rhs {tokens[at + 1]!r}")
                if row_name == "obj":
                    obj_const = -value
                else:
                    rhs[row_name] = value
        elif section == "bounds":
            btype = tokens[0].upper()
            name = lp_to_model(tokens[2])
            value = _tofloat(tokens[3]) if len(tokens) > 3 else None
            if btype == "BV":
                var_kind[name] = BINARY
                bound_lo[name], bound_hi[name] = 0.0, 1.0
            elif btype == "FR":
                bound_lo[name], bound_hi[name] = -_INF, _INF
            elif btype == "MI":
                bound_lo[name] = -_INF
            elif btype == "FX":
                bound_lo[name] = bound_hi[name] = value
            elif btype == "LO":
                bound_lo[name] = value
            elif btype == "UP":
                bound_hi[name] = value
            else:
                raise FormatError(f"unknown bound type {tokens[0]!r}")
        elif section == "qcmatrix":
            a, b = lp_to_model(tokens[0]), lp_to_model(tokens[1])
            value = _tofloat(tokens[2])
            if value is None:
                raise FormatError(f"bad quadratic coefficient {tokens[2]!r}")
            key = (min(a, b), max(a, b))
            store = quad[quad_row]
            store[key] = store.get(key, 0.0) + value
        elif section in (None, "name"):
            raise FormatError(f"data line outside any section: {raw!r}")

    names = set(var_kind)
    obj_linear = col_terms.pop("obj", {})
    names.update(obj_linear)
    for terms in col_terms.values():
        names.update(terms)
    unknown = set(col_terms) - set(row_sense)
    if unknown:
        raise FormatError(f"COLUMNS references undeclared rows {sorted(unknown)}")

    binaries = {n for n, k in var_kind.items() if k == BINARY}
    integers = {n for n, k in var_kind.items() if k == INTEGER}
    bounds = {}
    for name in names:
        default_hi = 1.0 if name in binaries else _INF
        bounds[name] = (bound_lo.get(name, 0.0), bound_hi.get(name, default_hi))

    parsed_rows = []
    for row_name in row_order:
        linear = col_terms.get(row_name, {})
        # symmetric off-diagonal halves were summed on the (min, max) key
        row_quad = [
            (a, b, coef) for (a, b), coef in sorted(quad.get(row_name, {}).items())
        ]
        parsed_rows.append(
            (row_name, linear, row_quad, rhs.get(row_name, 0.0), row_sense[row_name])
        )
        names.update(n for a, b, _ in row_quad for n in (a, b))

    return _build_model(
        model_name, names, bounds, binaries, integers, obj_linear, obj_const, parsed_rows
    )


# -- file dispatch ------------------------------------------------------------


def write_model(model: ModelInstance, path: str | Path) -> Path:
    path = Path(path)
    if path.suffix == ".lp":
        path.write_text(emit_lp(model))
    elif path.suffix == ".mps":
        path.write_text(emit_mps(model))
    else:
        raise FormatError(f"unknown model file extension {path.suffix!r}")
    return path


def read_model(path: str | Path) -> ModelInstance:
    path = Path(path)
    if path.suffix == ".lp":
        return parse_lp(path.read_text())
    if path.suffix == ".mps":
        return parse_mps(path.read_text())
    raise FormatError(f"unknown model file extension {path.suffix!r}")
