import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from formsim.exprlang import (
    ExprEvalError,
    ExprSyntaxError,
    evaluate,
    evaluate_array,
    parse,
    to_source,
    uses_time,
)

# Grammar corpus: (text, should_parse).  Shared with the acceptance suite.
GRAMMAR_CORPUS = [
    ("0", True),
    ("3.5", True),
    (".5", True),
    ("2.", True),
    ("1e3", True),
    ("1.5e-2", True),
    ("t", True),
    ("pi", True),
    ("-t", True),
    ("--t", True),
    ("1+2", True),
    ("1-2-3", True),
    ("2*3/4", True),
    ("1+2*3", True),
    ("(1+2)*3", True),
    ("80*sin(0.2*t)+300", True),
    ("3*pi/2", True),
    ("sin(cos(t))", True),
    ("sqrt(abs(-t))", True),
    ("exp(-t/5)", True),
    ("tan(t)-t", True),
    ("1-2.15*cos(t)*cos(3*t)*sin(t/5)", True),
    ("  1 + 2 ", True),
    ("-(1+t)", True),
    ("2*-3", True),
    ("", False),
    ("sin(", False),
    ("sin()", False),
    ("1+", False),
    ("(1+2", False),
    ("1 2", False),
    ("x", False),
    ("foo(1)", False),
    ("1**2", False),
    ("1..2", False),
    ("sin 3", False),
    ("t t", False),
    (")", False),
    ("1+*2", False),
]


@pytest.mark.parametrize("text,ok", GRAMMAR_CORPUS)
def test_grammar_corpus(text, ok):
    if ok:
        parse(text)
    else:
        with pytest.raises(ExprSyntaxError):
            parse(text)


def test_corpus_is_large_enough():
    assert len(GRAMMAR_CORPUS) >= 30


class TestParse:
    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("sin(")
        assert err.value.offset == 4

    def test_unknown_identifier_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("1+bogus")
        assert err.value.offset == 2

    def test_precedence(self):
        assert evaluate(parse("1+2*3"), 0) == 7.0
        assert evaluate(parse("-2*3"), 0) == -6.0

    def test_left_associativity(self):
        assert evaluate(parse("8-4-2"), 0) == 2.0
        assert evaluate(parse("8/4/2"), 0) == 1.0


class TestEvaluate:
    def test_formation_function_at_zero(self):
        assert evaluate(parse("80*sin(0.2*t)+300"), 0.0) == pytest.approx(300.0)
        assert evaluate(parse("80*sin(0.2*t)+300"), 1.0) == pytest.approx(
            80 * math.sin(0.2) + 300
        )

    def test_pi_constant(self):
        assert evaluate(parse("3*pi/2"), 17.3) == pytest.approx(3 * math.pi / 2)

    def test_division_by_zero_raises(self):
        with pytest.raises(ExprEvalError):
            evaluate(parse("1/(t-1)"), 1.0)

    def test_domain_error_raises(self):
        with pytest.raises(ExprEvalError):
            evaluate(parse("sqrt(t-2)"), 0.0)

    def test_overflow_raises(self):
        with pytest.raises(ExprEvalError):
            evaluate(parse("exp(t)"), 1e6)


class TestEvaluateArray:
    def test_matches_scalar_evaluation(self):
        expr = parse("1-2.15*cos(t)*cos(3*t)*sin(t/5)")
        ts = np.linspace(0.0, 40.0, 257)
        values = evaluate_array(expr, ts)
        for i in (0, 100, 256):
            assert values[i] == pytest.approx(evaluate(expr, ts[i]), rel=1e-14)

    def test_invalid_points_become_non_finite(self):
        values = evaluate_array(parse("1/t"), np.array([0.0, 1.0]))
        assert not np.isfinite(values[0])
        assert values[1] == 1.0


class TestToSource:
    @pytest.mark.parametrize(
        "text", [text for text, ok in GRAMMAR_CORPUS if ok and text.strip()]
    )
    def test_fixed_point(self, text):
        printed = to_source(parse(text))
        assert to_source(parse(printed)) == printed

    @pytest.mark.parametrize("text", ["8-(4-2)", "8/(4/2)", "-(1+t)", "2*(3+t)"])
    def test_preserves_grouping_semantics(self, text):
        expr = parse(text)
        reparsed = parse(to_source(expr))
        for t in (0.0, 0.7, 3.2):
            assert evaluate(reparsed, t) == pytest.approx(evaluate(expr, t), rel=1e-14)


class TestUsesTime:
    def test_constant(self):
        assert not uses_time(parse("3*pi/2"))

    def test_with_time(self):
        assert uses_time(parse("sin(2*t)+1"))


@given(st.floats(min_value=-100, max_value=100, allow_nan=False))
def test_time_variable_is_identity(t):
    assert evaluate(parse("t"), t) == t
