import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvtransfer.expr import (Add, Const, Div, EvalError, Mul, Neg, ParseError, Pow, Sqrt, Sub, Var,
                             compile_expression, eval_expression, parse_expression, power_bases,
                             to_text, variables)

D = 3

leaves = st.one_of(
    st.integers(1, D).map(Var),
    st.sampled_from(["1", "2", "0.5", "3.25", "1e-3", "7"]).map(lambda t: Const(float(t), t)),
)


def _extend(children):
    exps = st.sampled_from([2.0, 3.0, -1.0, 0.5, -0.5, 1.5])
    return st.one_of(
        st.tuples(children, children).map(lambda p: Add(*p)),
        st.tuples(children, children).map(lambda p: Sub(*p)),
        st.tuples(children, children).map(lambda p: Mul(*p)),
        st.tuples(children, children).map(lambda p: Div(*p)),
        children.map(Neg),
        children.map(Sqrt),
        st.tuples(children, exps).map(lambda p: Pow(*p)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_roundtrip(node):
    assert parse_expression(to_text(node), D) == node


class TestParse:
    def test_precedence(self):
        assert parse_expression("u1+u2*u3", 3) == Add(Var(1), Mul(Var(2), Var(3)))
        assert parse_expression("u1-u2-u3", 3) == Sub(Sub(Var(1), Var(2)), Var(3))
        assert parse_expression("u1/u2/u3", 3) == Div(Div(Var(1), Var(2)), Var(3))

    def test_power_binds_tighter_than_negation(self):
        assert parse_expression("-u1^2", 1) == Neg(Pow(Var(1), 2.0))

    def test_signed_exponent(self):
        n = parse_expression("u1^-0.5", 1)
        assert isinstance(n, Pow) and n.exponent == -0.5

    def test_whitespace(self):
        assert parse_expression(" ( sqrt( u1 ) + u2 ) ^ 2 ", 2) == parse_expression("(sqrt(u1)+u2)^2", 2)

    @pytest.mark.parametrize("text,offset", [("u1+", 3), ("u3", 0), ("(u1", 3), ("u1 $ u2", 3), ("u1^", 3)])
    def test_errors_carry_offset(self, text, offset):
        with pytest.raises(ParseError) as ei:
            parse_expression(text, 2)
        assert ei.value.offset == offset

    def test_non_ascii(self):
        with pytest.raises(ParseError):
            parse_expression("u1·u2", 2)

    def test_variables_and_bases(self):
        n = parse_expression("(sqrt(u1)+u2)^3*u3^-0.5", 3)
        assert variables(n) == {1, 2, 3}
        exps = sorted(e for _, e in power_bases(n))
        assert exps == [-0.5, 0.5]


class TestEval:
    def test_principal_branch(self):
        n = parse_expression("u1^0.5", 1)
        z = cmath.rect(2.0, 2.5)
        assert eval_expression(n, [z]) == pytest.approx(cmath.sqrt(z), rel=1e-15)

    def test_branch_cut_rejected(self):
        with pytest.raises(EvalError) as ei:
            eval_expression(parse_expression("sqrt(u1)", 1), [-1.0])
        assert ei.value.kind == "branch-cut"

    def test_integer_power_on_cut_is_fine(self):
        assert eval_expression(parse_expression("u1^3", 1), [-2.0]) == -8

    def test_zero_base_negative_power(self):
        with pytest.raises(EvalError) as ei:
            eval_expression(parse_expression("u1^-1", 1), [0.0])
        assert ei.value.kind == "zero-base"
        with pytest.raises(EvalError):
            eval_expression(parse_expression("1/u1", 1), [0.0])

    def test_compiled_matches_pointwise(self):
        n = parse_expression("(sqrt(u1)+sqrt(u2))^2/(u1+1)", 2)
        f = compile_expression(n)
        rng = np.random.default_rng(1)
        a = rng.uniform(0.1, 3, 20) * np.exp(1j * rng.uniform(-2, 2, 20))
        b = rng.uniform(0.1, 3, 20) * np.exp(1j * rng.uniform(-2, 2, 20))
        vals = f(a, b)
        for i in range(20):
            assert vals[i] == pytest.approx(eval_expression(n, [a[i], b[i]]), rel=1e-14)

    def test_compiled_broadcasts(self):
        f = compile_expression(parse_expression("u1*u2", 2))
        out = f(np.arange(3.0)[:, None], np.arange(4.0)[None, :])
        assert out.shape == (3, 4)
        assert out[2, 3] == 6
