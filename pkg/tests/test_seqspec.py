import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetcorr.errors import SeqEvalError, SeqSyntaxError
from hetcorr.seqspec import (
    BinOp,
    Const,
    Func,
    Neg,
    Var,
    constant_value,
    eval_seq,
    eval_seq_array,
    eval_seq_prefix,
    is_identity,
    parse_seq,
    to_source,
)


def test_parse_simple_division():
    assert parse_seq("1/i").ast == BinOp("/", Const(1.0), Var())


def test_parse_precedence_forces_shape():
    ast = parse_seq("3/5 - 1/i").ast
    assert ast == BinOp("-", BinOp("/", Const(3.0), Const(5.0)), BinOp("/", Const(1.0), Var()))


def test_parse_nested_unary_calls():
    ast = parse_seq("exp(-abs(sin(i)))").ast
    assert ast == Func("exp", (Neg(Func("abs", (Func("sin", (Var(),)),))),))


def test_unary_minus_binds_tighter_than_mul():
    # (-i) * 3, not -(i * 3); values agree but the shape is fixed
    assert parse_seq("-i*3").ast == BinOp("*", Neg(Var()), Const(3.0))


@pytest.mark.parametrize(
    "source,expected",
    [
        ("2 - 3 - 4", -5.0),
        ("12/3/2", 2.0),
        ("2*i+1", 11.0),
        ("pow(i, 2)", 25.0),
        ("-(i - 8)", 3.0),
    ],
)
def test_eval_arithmetic_at_i5(source, expected):
    assert eval_seq(parse_seq(source), 5) == expected


def test_eval_quarter():
    assert eval_seq(parse_seq("1/i"), 4) == 0.25


def test_eval_transcendentals_match_high_precision_reference():
    import mpmath

    mpmath.mp.dps = 50
    spec_sin = parse_seq("sin(i)")
    spec_exp = parse_seq("exp(-abs(sin(i)))")
    for i in (1, 2, 17, 1000):
        assert eval_seq(spec_sin, i) == pytest.approx(float(mpmath.sin(i)), rel=1e-15)
        assert eval_seq(spec_exp, i) == pytest.approx(
            float(mpmath.exp(-abs(mpmath.sin(i)))), rel=1e-15
        )


def test_eval_sin_1_value():
    assert eval_seq(parse_seq("sin(i)"), 1) == pytest.approx(0.8414709848078965, abs=1e-16)
    assert eval_seq(parse_seq("exp(-abs(sin(i)))"), 1) == pytest.approx(
        math.exp(-abs(math.sin(1.0))), abs=1e-16
    )


@pytest.mark.parametrize(
    "source",
    ["", "   ", "1 +", "(1", "sin()", "sin(i, 2)", "pow(i)", "cos(i)", "x + 1", "1 @ 2", "1 2"],
)
def test_syntax_errors(source):
    with pytest.raises(SeqSyntaxError):
        parse_seq(source)


def test_syntax_error_reports_position():
    with pytest.raises(SeqSyntaxError) as err:
        parse_seq("1 + cos(i)")
    assert err.value.position == 4


def test_division_by_zero_reports_index():
    spec = parse_seq("1/(i - 3)")
    assert eval_seq(spec, 2) == -1.0
    with pytest.raises(SeqEvalError) as err:
        eval_seq(spec, 3)
    assert err.value.index == 3
    with pytest.raises(SeqEvalError):
        eval_seq_prefix(spec, 10)


def test_overflow_is_an_error():
    with pytest.raises(SeqEvalError):
        eval_seq(parse_seq("exp(i*i)"), 100)


def test_nan_from_pow_is_an_error():
    with pytest.raises(SeqEvalError):
        eval_seq(parse_seq("pow(0 - i, 1/2)"), 2)


def test_index_must_be_positive():
    with pytest.raises(SeqEvalError):
        eval_seq(parse_seq("i"), 0)


def test_scalar_equals_vector_path():
    spec = parse_seq("exp(-abs(sin(i))) * (3/5 - 1/i)")
    vec = eval_seq_prefix(spec, 200)
    for i in (1, 7, 200):
        assert eval_seq(spec, i) == vec[i - 1]


def test_helpers():
    assert is_identity(parse_seq("i"))
    assert not is_identity(parse_seq("i + 0"))
    assert constant_value(parse_seq("3/5 - 1/10")) == 0.5
    assert constant_value(parse_seq("3/5 - 1/i")) is None


# --- round-trip property ---------------------------------------------------

_leaf = st.one_of(
    st.just(Var()),
    st.builds(Const, st.floats(min_value=0.0, max_value=9.0, allow_nan=False)),
)


def _node_strategy(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/"), children, children),
        st.builds(lambda a: Func("sin", (a,)), children),
        st.builds(lambda a: Func("abs", (a,)), children),
        st.builds(lambda a, b: Func("pow", (Func("abs", (a,)), b)), children, _leaf),
    )


_ast = st.recursive(_leaf, _node_strategy, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_ast)
def test_print_parse_roundtrip(ast):
    source = to_source(ast)
    reparsed = parse_seq(source)
    assert reparsed.ast == ast
    # identical trees evaluate identically (when they evaluate at all)
    for i in (1, 2, 13):
        try:
            a = eval_seq(reparsed, i)
        except SeqEvalError:
            continue
        b = float(eval_seq_array(parse_seq(source), np.array([i]))[0])
        assert a == b
