"""Expression grammar shared by the model formats.

Recursive-descent parser with the precedence chain unary minus, then * and
/, then + and -, then comparisons, then & / &&. Parsing yields a small AST;
linearization turns arithmetic into an affine form over the declared
variables (coefficients may carry symbolic constant factors) and turns
comparisons into LinearConstraint rows. Parsing either returns an AST or
raises a diagnostic carrying a character position; it never aborts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionSyntaxError, NonlinearUnsupported, UnknownIdentifier
from .ir import Condition, LinearConstraint, VariableTable

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    left: object
    relation: str
    right: object


@dataclass(frozen=True)
class Conjunction:
    parts: tuple


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)"
    r"|(?P<op>&&|==|<=|>=|:=|[=<>+\-*/()&])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExpressionSyntaxError(f"unexpected character {text[at]!r}", at)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, table: VariableTable | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.idx = 0
        self.table = table
        self.known = set(table.all_names()) if table is not None else None

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect_op(self, op: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != op:
            raise ExpressionSyntaxError(f"expected {op!r}", pos)
        return self.advance()

    def parse_conjunction(self):
        parts = [self.parse_comparison()]
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("&", "&&"):
                self.advance()
                parts.append(self.parse_comparison())
            else:
                break
        if len(parts) == 1:
            return parts[0]
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Conjunction) else (p,))
        return Conjunction(tuple(flat))

    def parse_comparison(self):
        left = self.parse_sum()
        kind, value, _ = self.peek()
        if kind == "op" and value in ("==", "=", "<=", ">=", "<", ">"):
            self.advance()
            relation = "==" if value in ("==", "=") else value
            right = self.parse_sum()
            return Compare(left, relation, right)
        return left

    def parse_sum(self):
        node = self.parse_product()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.advance()
                right = self.parse_product()
                node = Add(node, right) if value == "+" else Sub(node, right)
            else:
                break
        return node

    def parse_product(self):
        node = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.advance()
                right = self.parse_unary()
                node = Mul(node, right) if value == "*" else Div(node, right)
            else:
                break
        return node

    def parse_unary(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.parse_unary())
        if kind == "op" and value == "+":
            self.advance()
            return self.parse_unary()
        return self.parse_atom()

    def parse_atom(self):
        kind, value, pos = self.advance()
        if kind == "number":
            return Num(float(value))
        if kind == "ident":
            if self.known is not None:
                base = value.rstrip("'")
                if value not in self.known and base not in self.known:
                    raise UnknownIdentifier(f"unknown identifier {value!r} at position {pos}")
            return Ident(value)
        if kind == "op" and value == "(":
            inner = self.parse_conjunction()
            self.expect_op(")")
            return inner
        raise ExpressionSyntaxError(f"unexpected token {value!r}" if value else "unexpected end of input", pos)


def parse_expression(text: str, table: VariableTable | None = None):
    """Parse expression text into an AST.

    An empty (or whitespace-only) string parses to the trivially true
    condition, represented as an empty Conjunction. Identifiers are checked
    against the table when one is supplied.
    """
    if not text.strip():
        return Conjunction(())
    parser = _Parser(text, table)
    ast = parser.parse_conjunction()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise ExpressionSyntaxError(f"trailing input {value!r}", pos)
    return ast


# ---------------------------------------------------------------------------
# Linearization

class SymScalar:
    """A float plus a linear combination of named constants."""

    __slots__ = ("base", "terms")

    def __init__(self, base: float = 0.0, terms: dict | None = None):
        self.base = float(base)
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0.0}

    @property
    def is_number(self) -> bool:
        return not self.terms

    def __add__(self, other: "SymScalar") -> "SymScalar":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return SymScalar(self.base + other.base, terms)

    def __neg__(self) -> "SymScalar":
        return SymScalar(-self.base, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "SymScalar") -> "SymScalar":
        return self + (-other)

    def mul(self, other: "SymScalar") -> "SymScalar":
        if self.terms and other.terms:
            raise NonlinearUnsupported("product of two symbolic constants is not affine")
        if other.terms:
            self, other = other, self
        scale = other.base
        return SymScalar(self.base * scale, {k: v * scale for k, v in self.terms.items()})


class LinForm:
    """Affine expression: constant part plus per-variable coefficients."""

    __slots__ = ("const", "coeffs")

    def __init__(self, const: SymScalar | None = None, coeffs: dict | None = None):
        self.const = const if const is not None else SymScalar()
        self.coeffs = coeffs or {}

    def __add__(self, other: "LinForm") -> "LinForm":
        coeffs = dict(self.coeffs)
        for k, v in other.coeffs.items():
            coeffs[k] = coeffs[k] + v if k in coeffs else v
        return LinForm(self.const + other.const, coeffs)

    def __neg__(self) -> "LinForm":
        return LinForm(-self.const, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "LinForm") -> "LinForm":
        return self + (-other)

    def scaled(self, scalar: SymScalar) -> "LinForm":
        return LinForm(self.const.mul(scalar), {k: v.mul(scalar) for k, v in self.coeffs.items()})


def linear_form(ast, table: VariableTable, allow_inputs: bool = True) -> LinForm:
    """Reduce an arithmetic AST to an affine form over the declared names.

    Constants become symbolic scalar terms; a product of two variable-bearing
    subexpressions (or division by one) raises NonlinearUnsupported.
    """
    if isinstance(ast, Num):
        return LinForm(SymScalar(ast.value))
    if isinstance(ast, Ident):
        name = ast.name
        if name in table.constants:
            return LinForm(SymScalar(0.0, {name: 1.0}))
        if name in table.state_vars:
            return LinForm(coeffs={name: SymScalar(1.0)})
        if name in table.input_vars:
            if not allow_inputs:
                raise NonlinearUnsupported(f"input {name!r} cannot appear in a constraint")
            return LinForm(coeffs={name: SymScalar(1.0)})
        raise UnknownIdentifier(f"unknown identifier {name!r}")
    if isinstance(ast, Neg):
        return -linear_form(ast.operand, table, allow_inputs)
    if isinstance(ast, Add):
        return linear_form(ast.left, table, allow_inputs) + linear_form(ast.right, table, allow_inputs)
    if isinstance(ast, Sub):
        return linear_form(ast.left, table, allow_inputs) - linear_form(ast.right, table, allow_inputs)
    if isinstance(ast, Mul):
        left = linear_form(ast.left, table, allow_inputs)
        right = linear_form(ast.right, table, allow_inputs)
        if left.coeffs and right.coeffs:
            raise NonlinearUnsupported("product of two variable expressions is not affine")
        if left.coeffs:
            return left.scaled(right.const)
        return right.scaled(left.const)
    if isinstance(ast, Div):
        left = linear_form(ast.left, table, allow_inputs)
        right = linear_form(ast.right, table, allow_inputs)
        if right.coeffs or not right.const.is_number:
            raise NonlinearUnsupported("division is only supported by a numeric literal")
        if right.const.base == 0.0:
            raise NonlinearUnsupported("division by zero")
        return left.scaled(SymScalar(1.0 / right.const.base))
    raise NonlinearUnsupported(f"{type(ast).__name__} is not an arithmetic expression")


def _constraint_from_compare(cmp: Compare, table: VariableTable) -> LinearConstraint:
    form = linear_form(cmp.left, table, allow_inputs=False) - linear_form(cmp.right, table, allow_inputs=False)
    coeffs = np.zeros(table.n)
    coeff_terms: dict = {}
    for name, scalar in form.coeffs.items():
        idx = table.state_index(name)
        coeffs[idx] = scalar.base
        for sym, mult in scalar.terms.items():
            coeff_terms.setdefault(sym, np.zeros(table.n))[idx] = mult
    bound = -form.const
    return LinearConstraint(coeffs, cmp.relation, bound.base, coeff_terms, dict(bound.terms))


def condition_from_ast(ast, table: VariableTable) -> Condition:
    """Interpret a parsed AST as a conjunction of linear constraints."""
    if isinstance(ast, Conjunction):
        return Condition(tuple(_constraint_from_compare(_as_compare(p), table) for p in ast.parts))
    return Condition((_constraint_from_compare(_as_compare(ast), table),))


def _as_compare(node) -> Compare:
    if not isinstance(node, Compare):
        raise NonlinearUnsupported("expected a comparison, found a bare arithmetic expression")
    return node


def parse_condition(text: str, table: VariableTable) -> Condition:
    return condition_from_ast(parse_expression(text, table), table)


# ---------------------------------------------------------------------------
# Deterministic formatting (shortest decimal that round-trips binary64)


def format_number(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    text = repr(x)
    if text.endswith(".0"):
        text = text[:-2]
    return text


def _append_term(parts: list, scalar_text: str, sign: float):
    if not parts:
        parts.append(scalar_text if sign >= 0 else f"-{scalar_text}")
    else:
        parts.append(f"+ {scalar_text}" if sign >= 0 else f"- {scalar_text}")


def format_scalar(base: float, terms: dict | None = None) -> str:
    """Render float + symbolic-constant combination, e.g. ``0.5 + 2*c``."""
    parts: list = []
    if base != 0.0:
        _append_term(parts, format_number(abs(base)), base)
    for name in sorted(terms or {}):
        mult = (terms or {})[name]
        if mult == 0.0:
            continue
        mag = name if abs(mult) == 1.0 else f"{format_number(abs(mult))}*{name}"
        _append_term(parts, mag, mult)
    if not parts:
        return "0"
    return " ".join(parts)


def format_linear(names, coeffs, coeff_terms=None, const: float = 0.0, const_terms=None) -> str:
    """Render an affine row like ``1505*e1 + 4.668*e1dot - 9.81``.

    Term order follows ``names``; symbolic coefficient parts render as
    ``mult*constname*var``. Returns "0" for the all-zero row.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    coeff_terms = coeff_terms or {}
    parts: list = []
    for i, var in enumerate(names):
        if coeffs[i] != 0.0:
            mag = var if abs(coeffs[i]) == 1.0 else f"{format_number(abs(coeffs[i]))}*{var}"
            _append_term(parts, mag, coeffs[i])
        for sym in sorted(coeff_terms):
            mult = float(np.asarray(coeff_terms[sym])[i])
            if mult == 0.0:
                continue
            mag = f"{sym}*{var}" if abs(mult) == 1.0 else f"{format_number(abs(mult))}*{sym}*{var}"
            _append_term(parts, mag, mult)
    if const != 0.0:
        _append_term(parts, format_number(abs(const)), const)
    for sym in sorted(const_terms or {}):
        mult = (const_terms or {})[sym]
        if mult == 0.0:
            continue
        mag = sym if abs(mult) == 1.0 else f"{format_number(abs(mult))}*{sym}"
        _append_term(parts, mag, mult)
    if not parts:
        return "0"
    return " ".join(parts)


def format_constraint(con: LinearConstraint, names) -> str:
    lhs = format_linear(names, con.coeffs, con.coeff_terms)
    rhs = format_scalar(con.bound, con.bound_terms)
    return f"{lhs} {con.relation} {rhs}"


def format_condition(cond: Condition, names, joiner: str = " & ") -> str:
    return joiner.join(format_constraint(c, names) for c in cond.constraints)
