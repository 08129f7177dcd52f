"""Canonical JSON interchange form for model bundles.

``write_json`` produces a canonical text (fixed key order, shortest
round-trip floats via json); ``read_json`` validates against the shipped
schema (data/bundle.schema.json) before building IR objects, so malformed
documents fail with SchemaViolation instead of deep attribute errors.
write_json(read_json(s)) == s holds for any canonical s.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .errors import SchemaViolation
from .ir import (
    AffineDynamics,
    Condition,
    HybridAutomaton,
    InitialCondition,
    LinearConstraint,
    Location,
    ModelBundle,
    ReachSettings,
    ResetMap,
    Transition,
    VariableTable,
    validate,
)
from .sets import Box

_schema_cache = None


def _schema() -> dict:
    global _schema_cache
    if _schema_cache is None:
        text = resources.files("hyra.data").joinpath("bundle.schema.json").read_text()
        _schema_cache = json.loads(text)
    return _schema_cache


def _terms_out(terms: dict) -> dict:
    return {name: np.asarray(arr).tolist() for name, arr in sorted(terms.items())}


def _condition_out(cond: Condition) -> list:
    out = []
    for con in cond.constraints:
        entry = {
            "coeffs": con.coeffs.tolist(),
            "relation": con.relation,
            "bound": con.bound,
        }
        if con.coeff_terms:
            entry["coeff_terms"] = _terms_out(con.coeff_terms)
        if con.bound_terms:
            entry["bound_terms"] = dict(sorted(con.bound_terms.items()))
        out.append(entry)
    return out


def bundle_to_dict(bundle: ModelBundle) -> dict:
    automaton = bundle.automaton
    table = automaton.vars
    locations = []
    for loc in automaton.locations:
        flow = {
            "a": loc.dynamics.a.tolist(),
            "b": loc.dynamics.b.tolist(),
            "c": loc.dynamics.c.tolist(),
        }
        for key, terms in (
            ("a_terms", loc.dynamics.a_terms),
            ("b_terms", loc.dynamics.b_terms),
            ("c_terms", loc.dynamics.c_terms),
        ):
            if terms:
                flow[key] = _terms_out(terms)
        locations.append({"name": loc.name, "invariant": _condition_out(loc.invariant), "flow": flow})
    transitions = []
    for tr in automaton.transitions:
        reset = {"matrix": tr.reset.r_matrix.tolist(), "offset": tr.reset.r_offset.tolist()}
        if tr.reset.matrix_terms:
            reset["matrix_terms"] = _terms_out(tr.reset.matrix_terms)
        if tr.reset.offset_terms:
            reset["offset_terms"] = _terms_out(tr.reset.offset_terms)
        transitions.append(
            {
                "source": tr.source,
                "target": tr.target,
                "label": tr.label,
                "guard": _condition_out(tr.guard),
                "reset": reset,
            }
        )
    settings = bundle.settings
    return {
        "format": "hyra-bundle",
        "version": 1,
        "name": automaton.name,
        "variables": {
            "state": list(table.state_vars),
            "input": list(table.input_vars),
            "constants": dict(sorted(table.constants.items())),
        },
        "input_range": {
            name: list(automaton.input_range[name]) for name in table.input_vars
        },
        "locations": locations,
        "transitions": transitions,
        "settings": {
            "horizon": settings.horizon,
            "step": settings.step,
            "max_jumps": settings.max_jumps,
            "fixpoint": settings.fixpoint_check,
            "forbidden": None if settings.forbidden is None else _condition_out(settings.forbidden),
            "output_vars": None if settings.output_vars is None else list(settings.output_vars),
        },
        "initial": {
            "location": bundle.initial.location,
            "box": {
                var: [bundle.initial.box.lo[i], bundle.initial.box.hi[i]]
                for i, var in enumerate(table.state_vars)
            },
        },
    }


def write_json(bundle: ModelBundle) -> str:
    return json.dumps(bundle_to_dict(bundle), indent=2) + "\n"


def _terms_in(data: dict | None) -> dict:
    return {name: np.asarray(arr, dtype=float) for name, arr in (data or {}).items()}


def _condition_in(data: list) -> Condition:
    constraints = []
    for entry in data:
        constraints.append(
            LinearConstraint(
                np.asarray(entry["coeffs"], dtype=float),
                entry["relation"],
                entry["bound"],
                _terms_in(entry.get("coeff_terms")),
                dict(entry.get("bound_terms") or {}),
            )
        )
    return Condition(tuple(constraints))


def bundle_from_dict(data: dict) -> ModelBundle:
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"bundle document rejected: {exc.message}") from exc

    variables = data["variables"]
    table = VariableTable(
        tuple(variables["state"]), tuple(variables["input"]), dict(variables["constants"])
    )
    locations = []
    for entry in data["locations"]:
        flow = entry["flow"]
        dynamics = AffineDynamics(
            np.asarray(flow["a"], dtype=float),
            np.asarray(flow["b"], dtype=float),
            np.asarray(flow["c"], dtype=float),
            _terms_in(flow.get("a_terms")),
            _terms_in(flow.get("b_terms")),
            _terms_in(flow.get("c_terms")),
        )
        locations.append(Location(entry["name"], _condition_in(entry["invariant"]), dynamics))
    transitions = []
    for entry in data["transitions"]:
        reset = ResetMap(
            np.asarray(entry["reset"]["matrix"], dtype=float),
            np.asarray(entry["reset"]["offset"], dtype=float),
            _terms_in(entry["reset"].get("matrix_terms")),
            _terms_in(entry["reset"].get("offset_terms")),
        )
        transitions.append(
            Transition(entry["source"], entry["target"], _condition_in(entry["guard"]), reset, entry.get("label"))
        )
    automaton = HybridAutomaton(
        data["name"],
        table,
        tuple(locations),
        tuple(transitions),
        {name: tuple(rng) for name, rng in data.get("input_range", {}).items()},
    )
    report = validate(automaton)
    if not report.ok:
        raise SchemaViolation("bundle does not validate: " + "; ".join(str(d) for d in report))

    s = data["settings"]
    settings = ReachSettings(
        s["horizon"],
        s["step"],
        s["max_jumps"],
        None if s["forbidden"] is None else _condition_in(s["forbidden"]),
        None if s.get("output_vars") is None else tuple(s["output_vars"]),
        s["fixpoint"],
    )
    init = data["initial"]
    missing = [v for v in table.state_vars if v not in init["box"]]
    if missing:
        raise SchemaViolation(f"initial box misses variables: {', '.join(missing)}")
    lo = np.array([init["box"][v][0] for v in table.state_vars], dtype=float)
    hi = np.array([init["box"][v][1] for v in table.state_vars], dtype=float)
    initial = InitialCondition(init["location"], Box(lo, hi))
    return ModelBundle(automaton, settings, initial, source_format="json")


def read_json(text: str) -> ModelBundle:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from exc
    return bundle_from_dict(data)
