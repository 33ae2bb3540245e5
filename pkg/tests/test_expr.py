import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from akmetric import catalog, generator as gen
from akmetric import expr as E
from akmetric.errors import (DimensionMismatch, ExprSyntaxError, HolomorphyViolation,
                             SchemaError, UnknownIdentifier)
from akmetric.manifest import load_manifest, save_manifest

X = ["x1", "x2"]


def test_parse_precedence():
    e = E.parse("x1^2 + 2*x2", X)
    assert e == E.Add(E.PowInt(E.Var(0), 2), E.Mul(E.Const(2), E.Var(1)))


def test_parse_complex_sphere_component():
    e = E.parse("1 + z1^2/(1 - z1*z1)", ["z1"])
    want = E.Add(E.Const(1), E.Div(E.PowInt(E.Var(0), 2),
                                   E.Sub(E.Const(1), E.Mul(E.Var(0), E.Var(0)))))
    assert e == want


def test_parse_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        E.parse("x1 + * 2", X)
    assert info.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        E.parse("x1 + w", X)


def test_left_associativity_and_unary():
    assert E.parse("x1 - x2 - 1", X) == E.Sub(E.Sub(E.Var(0), E.Var(1)), E.Const(1))
    assert E.parse("x1 / x2 / 2", X) == E.Div(E.Div(E.Var(0), E.Var(1)), E.Const(2))
    # unary minus binds tighter than ^
    assert E.parse("-x1^2", X) == E.PowInt(E.Neg(E.Var(0)), 2)


def test_imaginary_unit_and_functions():
    e = E.parse("re(exp(i*x1)) + im(x2)", X)
    assert abs(E.evaluate(e, [0.5, 2.0]) - complex(__import__("math").cos(0.5))) < 1e-15


def test_format_examples():
    assert E.format_expr(E.Add(E.Var(0), E.Const(1)), X) == "x1 + 1"
    assert E.format_expr(E.parse("(x1+1)*(x1-1)", X), X) == "(x1 + 1)*(x1 - 1)"
    assert E.format_expr(E.Const(2 + 3j), X) == "(2 + 3*i)"


def test_negative_exponent_roundtrip():
    e = E.PowInt(E.Var(0), -2)
    assert E.parse(E.format_expr(e, X), X) == e


# random ASTs for the round-trip property
def _leaf():
    return st.one_of(
        st.builds(E.Var, st.integers(0, 1)),
        st.builds(E.Const, st.integers(-5, 5).map(complex)),
        st.builds(E.Const, st.floats(-1e3, 1e3, allow_nan=False).map(complex)),
        st.builds(lambda a, b: E.Const(complex(a, b)),
                  st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False)),
    )


def _node(children):
    return st.one_of(
        st.builds(E.Neg, children),
        st.builds(E.Add, children, children),
        st.builds(E.Sub, children, children),
        st.builds(E.Mul, children, children),
        st.builds(E.Div, children, children),
        st.builds(E.PowInt, children, st.integers(-4, 6)),
        st.builds(E.Func, st.sampled_from(E.FUNCTIONS), children),
        st.builds(E.Re, children),
        st.builds(E.Im, children),
    )


exprs = st.recursive(_leaf(), _node, max_leaves=30)


@settings(max_examples=400, deadline=None)
@given(exprs)
def test_format_parse_roundtrip(e):
    assert E.parse(E.format_expr(e, X), X) == e


ALPHABET = "x12 +-*/^()i.e0789,resqrtxplogn \t"


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=ALPHABET, max_size=200))
def test_parser_totality_small(text):
    try:
        E.parse(text, X)
    except ExprSyntaxError as exc:
        assert 0 <= exc.offset <= len(text)


def test_parser_totality_long_inputs():
    rng = random.Random(7)
    for size in (1000, 5000, 10_000):
        for _ in range(5):
            text = "".join(rng.choice(ALPHABET) for _ in range(size))
            try:
                E.parse(text, X)
            except ExprSyntaxError as exc:
                assert 0 <= exc.offset <= len(text)
    # deep nesting gives a positioned error, not a recursion crash
    deep = "(" * 10_000 + "x1" + ")" * 10_000
    with pytest.raises(ExprSyntaxError):
        E.parse(deep, X)
    assert E.evaluate(E.parse(" + ".join(["x1"] * 300), X), [1.0, 0.0]) == 300
    with pytest.raises(ExprSyntaxError):
        E.parse(" + ".join(["x1"] * 3000), X)
    with pytest.raises(ExprSyntaxError):
        E.parse("-" * 10_000 + "x1", X)


@pytest.mark.parametrize("cid", catalog.default_ids())
def test_manifest_roundtrip_bytes(cid):
    man = catalog.catalog_get(cid)
    data = save_manifest(man)
    again = load_manifest(data)
    assert again == man
    assert save_manifest(again) == data


def test_generated_manifest_roundtrip():
    for man in [gen.realify(catalog.catalog_get("complex_sphere(2)")),
                gen.tower(catalog.catalog_get("sphere(2)"), 2)[2].manifest]:
        data = save_manifest(man)
        assert save_manifest(load_manifest(data)) == data


def _holo_doc(comp):
    return {"name": "h", "kind": "holomorphic", "dim": 1, "coords": ["z1"],
            "components": [[comp]], "sample_box": [[-1, 1], [-1, 1]]}


def test_holomorphic_rejects_re():
    with pytest.raises(HolomorphyViolation):
        load_manifest(json.dumps(_holo_doc("1 + re(z1)")).encode())


def test_lower_triangle_mirrored():
    doc = {"name": "t", "kind": "real", "dim": 2, "coords": ["x1", "x2"],
           "components": [["1"], ["x1", "2"]], "sample_box": [[0, 1], [0, 1]]}
    man = load_manifest(json.dumps(doc).encode())
    assert man.component(0, 1) == man.component(1, 0) == E.Var(0)


def test_schema_errors():
    doc = {"name": "t", "kind": "real", "dim": 2, "coords": ["x1", "x2"],
           "components": [["1"], ["0"]], "sample_box": [[0, 1], [0, 1]]}
    with pytest.raises((DimensionMismatch, SchemaError)):
        load_manifest(json.dumps(doc).encode())
    doc["components"] = [["1"], ["0", "1"]]
    doc["sample_box"] = [[1, 0], [0, 1]]
    with pytest.raises(SchemaError):
        load_manifest(json.dumps(doc).encode())
    with pytest.raises(SchemaError):
        load_manifest(b"{not json")


def test_eliminate_re_im_agrees_on_real_points():
    rng = random.Random(3)
    e = E.parse("re((x1 + i*x2)^3) - 2*im(exp(i*x1)*x2)", X)
    f = E.eliminate_re_im(e)
    assert not E.has_re_im(f)
    for _ in range(20):
        p = [rng.uniform(-1, 1), rng.uniform(-1, 1)]
        assert abs(E.evaluate(e, p) - E.evaluate(f, p)) < 1e-12
