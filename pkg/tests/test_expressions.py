import numpy as np
import pytest

from hyra.errors import ExpressionSyntaxError, NonlinearUnsupported, UnknownIdentifier
from hyra.expressions import (
    Conjunction,
    format_condition,
    format_linear,
    format_number,
    linear_form,
    parse_condition,
    parse_expression,
)
from hyra.ir import VariableTable

TABLE = VariableTable(("x", "v"), ("u",), {"c": 0.75})


def test_guard_conjunction_parses_to_two_constraints():
    cond = parse_condition("x == 0 & v <= 0", TABLE)
    assert len(cond.constraints) == 2
    eq, le = cond.constraints
    assert eq.relation == "==" and np.array_equal(eq.coeffs, [1.0, 0.0]) and eq.bound == 0.0
    assert le.relation == "<=" and np.array_equal(le.coeffs, [0.0, 1.0]) and le.bound == 0.0


def test_empty_text_is_the_true_condition():
    cond = parse_condition("", TABLE)
    assert cond.is_true
    assert parse_expression("   ") == Conjunction(())


def test_variable_product_is_rejected():
    with pytest.raises(NonlinearUnsupported):
        parse_condition("x*v <= 1", TABLE)


def test_syntax_error_carries_position():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_expression("x + ", TABLE)
    assert err.value.position == 4
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_expression("x ? 1", TABLE)
    assert err.value.position == 2


def test_unknown_identifier_is_rejected():
    with pytest.raises(UnknownIdentifier):
        parse_expression("x + zz", TABLE)


def test_single_equals_means_comparison():
    cond = parse_condition("x = 1", TABLE)
    assert cond.constraints[0].relation == "=="


def test_double_ampersand_and_parentheses():
    cond = parse_condition("(x <= 1) && (v >= -2)", TABLE)
    assert len(cond.constraints) == 2
    assert cond.constraints[1].bound == -2.0


def test_precedence_and_division():
    # unary minus binds tighter than *, / folds constants
    ast = parse_expression("-x*2 + 6/3", TABLE)
    form = linear_form(ast, TABLE)
    assert form.coeffs["x"].base == -2.0
    assert form.const.base == 2.0


def test_constants_stay_symbolic_in_coefficients():
    cond = parse_condition("v <= -c*x", TABLE)
    con = cond.constraints[0]
    # moved to the left side: v + c*x <= 0
    assert con.coeffs[1] == 1.0 and con.coeffs[0] == 0.0
    assert np.array_equal(con.coeff_terms["c"], [1.0, 0.0])
    resolved = con.resolve({"c": 0.75})
    assert resolved.coeffs[0] == 0.75


def test_product_of_symbolic_constants_rejected():
    with pytest.raises(NonlinearUnsupported):
        linear_form(parse_expression("c*c*x", TABLE), TABLE)


def test_division_by_variable_rejected():
    with pytest.raises(NonlinearUnsupported):
        linear_form(parse_expression("1/x", TABLE), TABLE)


def test_inputs_allowed_in_flows_only():
    form = linear_form(parse_expression("x + 2*u", TABLE), TABLE, allow_inputs=True)
    assert form.coeffs["u"].base == 2.0
    with pytest.raises(NonlinearUnsupported):
        parse_condition("u <= 1", TABLE)


def test_format_number_shortest_roundtrip():
    assert format_number(0.75) == "0.75"
    assert format_number(12.0) == "12"
    assert format_number(-9.81) == "-9.81"
    assert format_number(-0.0) == "0"
    assert float(format_number(0.1 + 0.2)) == 0.1 + 0.2


def test_format_linear_readable_rows():
    text = format_linear(("x", "v"), [1505.0, -1.0], None, -9.81)
    assert text == "1505*x - v - 9.81"
    assert format_linear(("x",), [0.0]) == "0"


def test_condition_formatting_roundtrips_through_parser():
    cond = parse_condition("2*x - v >= 1.5 & x <= c", TABLE)
    text = format_condition(cond, TABLE.state_vars)
    again = parse_condition(text, TABLE)
    assert again == cond
