from __future__ import annotations

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import read, LISTING1_FILES
from pacvd.frontend import (
    Block, Call, EncodingError, ExprStmt, Ident, If, Literal, ParseError, Return, SourceUnit,
    extract_calls, parse_unit, print_function, print_unit,
)
from progen import GenConfig, random_function


def test_minimal_function():
    unit = parse_unit("t.c", "int f(void) { return 0; }")
    assert [f.name for f in unit.functions] == ["f"]
    assert unit.functions[0].body == Block((Return(Literal("0")),))


def test_listing1_functions(listing1_units):
    sg = listing1_units[0]
    assert [f.name for f in sg.functions] == ["sg_common_write", "sg_finish_rem_req"]
    callees = {c.callee for c in extract_calls(sg.function("sg_common_write"))}
    assert {"blk_end_request_all", "sg_finish_rem_req"} <= callees


def test_unterminated_condition():
    with pytest.raises(ParseError) as info:
        parse_unit("t.c", "int f() { if (x")
    assert info.value.line == 1
    assert "expected" in str(info.value)


def test_invalid_utf8():
    with pytest.raises(EncodingError):
        parse_unit("t.c", b"int f(void) { return 0; } \xff\xfe")


def test_redefinition_rejected():
    with pytest.raises(ParseError):
        parse_unit("t.c", "void f(void) {} void f(void) {}")


def test_spans_within_text(listing1_units):
    for unit in listing1_units:
        last = 0
        for fn in unit.functions:
            start, end = fn.span
            assert last <= start < end <= len(unit.text)
            assert unit.text[start:end].rstrip().endswith("}")
            last = end


def test_single_free_call():
    fn = parse_unit("t.c", "void f(int *p) { free(p); }").functions[0]
    [rec] = extract_calls(fn)
    assert rec.callee == "free"
    assert rec.args == (Ident("p"),)
    assert isinstance(rec.path[-1], ExprStmt)


def test_free_under_if_has_if_in_path(listing1_units):
    fn = listing1_units[0].function("sg_finish_rem_req")
    [rec] = [c for c in extract_calls(fn) if c.callee == "free"]
    assert any(isinstance(node, If) for node in rec.path)


def test_nested_call_order():
    fn = parse_unit("t.c", "void f(void) { g(h(x)); }").functions[0]
    assert [c.callee for c in extract_calls(fn)] == ["h", "g"]


def test_call_free_function():
    fn = parse_unit("t.c", "int f(int a) { return a + 1; }").functions[0]
    assert extract_calls(fn) == []


def test_type_spelling_is_tidy():
    src = "static void f(char buf[16], void (*cb)(int), struct s *p) { char *q = 0; }\n"
    text = print_unit(parse_unit("t.c", src))
    assert "char buf[16]" in text
    assert "struct s *p" in text
    assert "char *q = 0;" in text


def test_listing1_round_trip():
    for path in LISTING1_FILES:
        unit = parse_unit(path, read(path))
        again = parse_unit(path, print_unit(unit))
        assert again.functions == unit.functions


# ------------------------------------------------------------------ properties

_IDENTS = st.sampled_from(["a", "b", "p", "q", "count", "_x1"])
_ATOMS = st.one_of(
    _IDENTS,
    st.integers(0, 999).map(str),
    st.sampled_from(['"s"', "'c'", "0x1f", "NULL"]),
)
_BINOPS = ["+", "-", "*", "/", "%", "<<", ">>", "<", "<=", ">", ">=", "==", "!=", "&", "|", "^", "&&", "||"]


def _expr(children):
    return st.one_of(
        st.tuples(st.sampled_from(["-", "!", "~", "*", "&"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(children, st.sampled_from(_BINOPS), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(children, children, children).map(lambda t: f"({t[0]} ? {t[1]} : {t[2]})"),
        st.tuples(_IDENTS, st.lists(children, max_size=3)).map(lambda t: f"{t[0]}({', '.join(t[1])})"),
        st.tuples(_IDENTS, _IDENTS).map(lambda t: f"{t[0]}->{t[1]}"),
        st.tuples(_IDENTS, children).map(lambda t: f"{t[0]}[{t[1]}]"),
        children.map(lambda c: f"(int)({c})"),
        children.map(lambda c: f"sizeof({c})"),
    )


EXPRS = st.recursive(_ATOMS, _expr, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(EXPRS, _IDENTS)
def test_round_trip_expressions(expr, lhs):
    src = f"int f(int a) {{ {lhs} = {expr}; if ({expr}) return {expr}; return 0; }}"
    first = parse_unit("t.c", src)
    printed = print_unit(first)
    second = parse_unit("t.c", printed)
    assert second.functions == first.functions
    assert print_unit(second) == printed


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_generated_programs(seed):
    src, _ = random_function(seed, GenConfig(callees=("g", "h")))
    unit = parse_unit("t.c", src)
    assert parse_unit("t.c", print_function(unit.functions[0])).functions == unit.functions


_CALL_TOKEN = re.compile(r"\b([A-Za-z_]\w*)\s*\(")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_call_extraction_matches_token_oracle(seed):
    known = {"free", "malloc", "fclose", "log_event", "g", "h"}
    cfg = GenConfig(callees=("g", "h"), extra_apis=(("malloc", "p = malloc(n);"), ("fclose", "fclose(p);")))
    src, _ = random_function(seed, cfg)
    body = src[src.index("{"):]
    expected = sum(1 for m in _CALL_TOKEN.finditer(body) if m.group(1) in known)
    fn = parse_unit("t.c", src).functions[0]
    assert len(extract_calls(fn)) == expected


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_parser_never_panics_on_bytes(data):
    try:
        result = parse_unit("fuzz.c", data)
    except ParseError:
        return
    assert isinstance(result, SourceUnit)


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="intvoid(){};=+*&|!<>-[],.x0123 \n\"'/#", max_size=120))
def test_parser_never_panics_on_c_like_text(text):
    try:
        parse_unit("fuzz.c", text)
    except ParseError:
        pass
