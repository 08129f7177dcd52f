"""SpaceEx-style XML model reading and writing.

Supported subset (documented in docs/formats.md): one flat component whose
params are real scalars (dynamics "any" for variables, "const" for named
constants; ``controlled="false"`` marks an input and may carry ``min``/
``max`` range attributes), locations with invariant and flow text, and
transitions with guard and assignment text. Network bindings and
synchronizing compositions are out of subset and rejected hard.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .errors import UnsupportedFeature, XmlMalformed
from .expressions import (
    Compare,
    Conjunction,
    Ident,
    condition_from_ast,
    format_condition,
    format_linear,
    format_number,
    linear_form,
    parse_expression,
)
from .ir import (
    AffineDynamics,
    Condition,
    HybridAutomaton,
    Location,
    ResetMap,
    Transition,
    VariableTable,
    validate,
)


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem, name):
    return [child for child in elem if _localname(child.tag) == name]


def _text(elem, name) -> str | None:
    nodes = _children(elem, name)
    if not nodes:
        return None
    return nodes[0].text or ""


def parse_spaceex(xml_text: str, validated: bool = True) -> HybridAutomaton:
    """Parse the supported XML subset into a validated automaton.

    With validated=False the structural validation step is skipped so a
    defective model can still be loaded for inspection (the validate
    command relies on this).
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise XmlMalformed(f"not well-formed XML: {exc}") from exc

    if _localname(root.tag) != "sspaceex":
        raise XmlMalformed(f"expected <sspaceex> root, found <{_localname(root.tag)}>")
    components = _children(root, "component")
    if not components:
        raise XmlMalformed("no <component> element")
    if len(components) > 1:
        raise UnsupportedFeature("multiple components (networks) are not supported")
    comp = components[0]
    if _children(comp, "bind"):
        raise UnsupportedFeature("component bindings are not supported")
    name = comp.get("id") or "model"

    state_vars: list = []
    input_vars: list = []
    constants: dict = {}
    input_range: dict = {}
    for param in _children(comp, "param"):
        pname = param.get("name")
        if not pname:
            raise XmlMalformed("param without a name")
        ptype = param.get("type", "real")
        if ptype not in ("real", "label"):
            raise UnsupportedFeature(f"param type {ptype!r} is not supported")
        if ptype == "label":
            continue  # plain transition labels; synchronization is rejected at bind level
        dynamics = param.get("dynamics", "any")
        if dynamics == "const":
            constants[pname] = float(param.get("value", "0"))
        elif dynamics == "any":
            if param.get("controlled", "true") == "false":
                input_vars.append(pname)
                input_range[pname] = (
                    float(param.get("min", "0")),
                    float(param.get("max", "0")),
                )
            else:
                state_vars.append(pname)
        else:
            raise UnsupportedFeature(f"param dynamics {dynamics!r} is not supported")

    table = VariableTable(tuple(state_vars), tuple(input_vars), constants)

    locations: list = []
    id_to_name: dict = {}
    for loc_elem in _children(comp, "location"):
        loc_id = loc_elem.get("id")
        loc_name = loc_elem.get("name") or loc_id
        if loc_id is None and loc_name is None:
            raise XmlMalformed("location without id or name")
        id_to_name[loc_id] = loc_name
        id_to_name[loc_name] = loc_name
        try:
            invariant = _parse_condition_text(_text(loc_elem, "invariant") or "", table)
            dynamics = _parse_flow(_text(loc_elem, "flow") or "", table)
        except XmlMalformed:
            raise
        except Exception as exc:
            raise XmlMalformed(f"location {loc_name!r}: {exc}") from exc
        locations.append(Location(loc_name, invariant, dynamics))

    transitions: list = []
    for tr_elem in _children(comp, "transition"):
        src = tr_elem.get("source")
        dst = tr_elem.get("target")
        if src is None or dst is None:
            raise XmlMalformed("transition missing source or target")
        label = _text(tr_elem, "label")
        label = label.strip() if label else None
        try:
            guard = _parse_condition_text(_text(tr_elem, "guard") or "", table)
            reset = _parse_assignment(_text(tr_elem, "assignment") or "", table)
        except XmlMalformed:
            raise
        except Exception as exc:
            raise XmlMalformed(f"transition {src}->{dst}: {exc}") from exc
        transitions.append(
            Transition(id_to_name.get(src, src), id_to_name.get(dst, dst), guard, reset, label)
        )

    automaton = HybridAutomaton(name, table, tuple(locations), tuple(transitions), input_range)
    if validated:
        report = validate(automaton)
        if not report.ok:
            details = "; ".join(str(d) for d in report)
            raise XmlMalformed(f"model does not validate: {details}")
    return automaton


def _parse_condition_text(text: str, table: VariableTable) -> Condition:
    return condition_from_ast(parse_expression(text, table), table)


def _flow_parts(ast):
    if isinstance(ast, Conjunction):
        return ast.parts
    return (ast,)


def _parse_flow(text: str, table: VariableTable) -> AffineDynamics:
    """Flow text is a conjunction of ``x' == affine-expr`` rows.

    A state variable without a row gets derivative zero.
    """
    n, m = table.n, table.m
    dyn_a = np.zeros((n, n))
    dyn_b = np.zeros((n, m))
    dyn_c = np.zeros(n)
    a_terms: dict = {}
    b_terms: dict = {}
    c_terms: dict = {}
    seen: set = set()
    ast = parse_expression(text, table)
    if text.strip():
        for part in _flow_parts(ast):
            if not isinstance(part, Compare) or part.relation != "==" or not isinstance(part.left, Ident):
                raise XmlMalformed("flow rows must look like \"x' == expr\"")
            lhs = part.left.name
            if not lhs.endswith("'"):
                raise XmlMalformed(f"flow assigns to unprimed {lhs!r}")
            var = lhs.rstrip("'")
            if var not in table.state_vars:
                raise XmlMalformed(f"flow assigns to non-state {var!r}")
            if var in seen:
                raise XmlMalformed(f"duplicate flow row for {var!r}")
            seen.add(var)
            row = table.state_index(var)
            form = linear_form(part.right, table, allow_inputs=True)
            for vname, scalar in form.coeffs.items():
                if vname in table.state_vars:
                    dyn_a[row, table.state_index(vname)] = scalar.base
                    for sym, mult in scalar.terms.items():
                        a_terms.setdefault(sym, np.zeros((n, n)))[row, table.state_index(vname)] = mult
                else:
                    col = table.input_vars.index(vname)
                    dyn_b[row, col] = scalar.base
                    for sym, mult in scalar.terms.items():
                        b_terms.setdefault(sym, np.zeros((n, m)))[row, col] = mult
            dyn_c[row] = form.const.base
            for sym, mult in form.const.terms.items():
                c_terms.setdefault(sym, np.zeros(n))[row] = mult
    return AffineDynamics(dyn_a, dyn_b, dyn_c, a_terms, b_terms, c_terms)


def _split_top_level(text: str) -> list:
    """Split on & / && outside parentheses."""
    parts = []
    depth = 0
    current = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "&" and depth == 0:
            parts.append("".join(current))
            current = []
            if i + 1 < len(text) and text[i + 1] == "&":
                i += 1
        else:
            current.append(ch)
        i += 1
    parts.append("".join(current))
    return [p for p in (part.strip() for part in parts) if p]


def _parse_assignment(text: str, table: VariableTable) -> ResetMap:
    """Assignment text: ``x := expr`` statements joined by &; default identity."""
    n = table.n
    reset_m = np.eye(n)
    reset_r = np.zeros(n)
    m_terms: dict = {}
    r_terms: dict = {}
    for stmt in _split_top_level(text):
        if ":=" not in stmt:
            raise XmlMalformed(f"assignment {stmt!r} is not of the form x := expr")
        lhs_text, rhs_text = stmt.split(":=", 1)
        var = lhs_text.strip().rstrip("'")
        if var not in table.state_vars:
            raise XmlMalformed(f"assignment to non-state {var!r}")
        row = table.state_index(var)
        form = linear_form(parse_expression(rhs_text, table), table, allow_inputs=False)
        reset_m[row, :] = 0.0
        for sym in m_terms:
            m_terms[sym][row, :] = 0.0
        for sym in r_terms:
            r_terms[sym][row] = 0.0
        for vname, scalar in form.coeffs.items():
            col = table.state_index(vname)
            reset_m[row, col] = scalar.base
            for sym, mult in scalar.terms.items():
                m_terms.setdefault(sym, np.zeros((n, n)))[row, col] = mult
        reset_r[row] = form.const.base
        for sym, mult in form.const.terms.items():
            r_terms.setdefault(sym, np.zeros(n))[row] = mult
    return ResetMap(reset_m, reset_r, m_terms, r_terms)


# ---------------------------------------------------------------------------
# Emission


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _flow_text(dyn: AffineDynamics, table: VariableTable) -> str:
    rows = []
    names = list(table.state_vars) + list(table.input_vars)
    for i, var in enumerate(table.state_vars):
        coeffs = np.concatenate([dyn.a[i], dyn.b[i]])
        coeff_terms = {}
        for sym, mat in dyn.a_terms.items():
            merged = np.concatenate([np.asarray(mat)[i], np.zeros(table.m)])
            if merged.any():
                coeff_terms[sym] = merged
        for sym, mat in dyn.b_terms.items():
            merged = coeff_terms.get(sym, np.zeros(table.n + table.m)).copy()
            merged[table.n :] += np.asarray(mat)[i]
            if merged.any():
                coeff_terms[sym] = merged
        const_terms = {sym: float(np.asarray(vec)[i]) for sym, vec in dyn.c_terms.items()}
        rhs = format_linear(names, coeffs, coeff_terms, float(dyn.c[i]), const_terms)
        rows.append(f"{var}' == {rhs}")
    return " & ".join(rows)


def _reset_text(reset: ResetMap, table: VariableTable) -> str:
    if reset.is_identity():
        return ""
    statements = []
    names = table.state_vars
    eye = np.eye(table.n)
    for i, var in enumerate(names):
        row_plain = np.array_equal(reset.r_matrix[i], eye[i]) and reset.r_offset[i] == 0.0
        row_symbolic = any(np.asarray(m)[i].any() for m in reset.matrix_terms.values()) or any(
            float(np.asarray(v)[i]) != 0.0 for v in reset.offset_terms.values()
        )
        if row_plain and not row_symbolic:
            continue
        coeff_terms = {
            sym: np.asarray(mat)[i] for sym, mat in reset.matrix_terms.items() if np.asarray(mat)[i].any()
        }
        const_terms = {sym: float(np.asarray(vec)[i]) for sym, vec in reset.offset_terms.items()}
        rhs = format_linear(names, reset.r_matrix[i], coeff_terms, float(reset.r_offset[i]), const_terms)
        statements.append(f"{var} := {rhs}")
    return " & ".join(statements)


def emit_spaceex(model) -> str:
    """Deterministic XML for the supported subset; same input, same bytes.

    Accepts an automaton or a whole bundle; the XML form carries the
    automaton only (settings and the initial set live in the cfg format).
    """
    automaton = model.automaton if hasattr(model, "automaton") else model
    table = automaton.vars
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<sspaceex version="0.2" math="SpaceEx">',
        f'  <component id="{_escape(automaton.name)}">',
    ]
    for var in table.state_vars:
        lines.append(f'    <param name="{var}" type="real" dynamics="any" />')
    for var in table.input_vars:
        lo, hi = automaton.input_range[var]
        lines.append(
            f'    <param name="{var}" type="real" dynamics="any" controlled="false" '
            f'min="{format_number(lo)}" max="{format_number(hi)}" />'
        )
    for cname in sorted(table.constants):
        lines.append(
            f'    <param name="{cname}" type="real" dynamics="const" '
            f'value="{format_number(table.constants[cname])}" />'
        )
    loc_ids = {loc.name: str(i + 1) for i, loc in enumerate(automaton.locations)}
    for loc in automaton.locations:
        lines.append(f'    <location id="{loc_ids[loc.name]}" name="{_escape(loc.name)}">')
        if not loc.invariant.is_true:
            inv = format_condition(loc.invariant, table.state_vars)
            lines.append(f"      <invariant>{_escape(inv)}</invariant>")
        flow = _flow_text(loc.dynamics, table)
        if flow:
            lines.append(f"      <flow>{_escape(flow)}</flow>")
        lines.append("    </location>")
    for tr in automaton.transitions:
        lines.append(
            f'    <transition source="{loc_ids[tr.source]}" target="{loc_ids[tr.target]}">'
        )
        if tr.label:
            lines.append(f"      <label>{_escape(tr.label)}</label>")
        if not tr.guard.is_true:
            guard = format_condition(tr.guard, table.state_vars)
            lines.append(f"      <guard>{_escape(guard)}</guard>")
        reset = _reset_text(tr.reset, table)
        if reset:
            lines.append(f"      <assignment>{_escape(reset)}</assignment>")
        lines.append("    </transition>")
    lines.append("  </component>")
    lines.append("</sspaceex>")
    return "\n".join(lines) + "\n"
