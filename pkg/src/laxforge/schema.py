"""JSON Schema (draft 2020-12) of the report emitted by ``--format json``."""

_POLY = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["coeff", "factors"],
        "additionalProperties": False,
        "properties": {
            "coeff": {"type": "string", "pattern": r"^-?\d+/\d+$"},
            "factors": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["gen", "jet", "exp"],
                    "additionalProperties": False,
                    "properties": {
                        "gen": {"type": "string"},
                        "jet": {"type": "integer", "minimum": 0},
                        "exp": {"type": "integer"},
                    },
                },
            },
        },
    },
}

_NAMED_POLY = {
    "type": "object",
    "required": ["field", "poly"],
    "properties": {"field": {"type": "string"}, "poly": {"$ref": "#/$defs/poly"}},
}

_OPERATOR = {
    "type": "object",
    "required": ["floor", "exact", "coeffs"],
    "properties": {
        "symbol": {"enum": ["D", "p"]},
        "floor": {"type": "integer"},
        "exact": {"type": "boolean"},
        "coeffs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["order", "poly"],
                "properties": {"order": {"type": "integer"}, "poly": {"$ref": "#/$defs/poly"}},
            },
        },
    },
}

_FLOW = {
    "type": "object",
    "required": ["q", "time", "rhs", "tail", "diagnostics"],
    "properties": {
        "q": {"type": "integer", "minimum": 0},
        "time": {"enum": ["t", "tau"]},
        "rhs": {"type": "array", "items": {"$ref": "#/$defs/named_poly"}},
        "tail": {"anyOf": [{"type": "null"}, {"$ref": "#/$defs/poly"}]},
        "diagnostics": {
            "type": "object",
            "required": ["top_excess_zero", "tail_depth_checked"],
            "properties": {
                "top_excess_zero": {"type": "boolean"},
                "tail_depth_checked": {"type": "integer", "minimum": 0},
            },
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "laxforge.report/1",
    "type": "object",
    "required": ["schema", "command", "spec", "symbol", "epsilon", "depth", "flows", "transform", "reciprocal_form", "verifications"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": "laxforge.report/1"},
        "command": {"enum": ["derive", "dispersionless-derive", "transform", "verify"]},
        "spec": {"type": "string"},
        "symbol": {"enum": ["D", "p"]},
        "epsilon": {"enum": ["symbolic", "0"]},
        "depth": {"type": "integer", "minimum": 2},
        "flows": {"type": "array", "items": {"$ref": "#/$defs/flow"}},
        "transform": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["mode", "phi", "new_lax", "variable_map", "display_map"],
                    "properties": {
                        "mode": {"enum": ["theorem1", "theorem2", "theorem3", "theorem4"]},
                        "phi": {"$ref": "#/$defs/poly"},
                        "new_lax": {"$ref": "#/$defs/operator"},
                        "variable_map": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["field", "order", "poly"],
                                "properties": {
                                    "field": {"type": "string"},
                                    "order": {"type": "integer"},
                                    "poly": {"$ref": "#/$defs/poly"},
                                },
                            },
                        },
                        "display_map": {"type": "array", "items": {"$ref": "#/$defs/named_poly"}},
                    },
                },
            ]
        },
        "reciprocal_form": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["dx", "dt"],
                    "properties": {
                        "dx": {"$ref": "#/$defs/poly"},
                        "dt": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["q", "poly"],
                                "properties": {"q": {"type": "integer"}, "poly": {"$ref": "#/$defs/poly"}},
                            },
                        },
                    },
                },
            ]
        },
        "verifications": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["pass", "residual", "detail"],
                "additionalProperties": False,
                "properties": {
                    "pass": {"type": "boolean"},
                    "residual": {"anyOf": [{"type": "null"}, {"$ref": "#/$defs/poly"}]},
                    "detail": {"type": ["string", "null"]},
                },
                # a failed check carries a residual or an explanation
                "if": {"properties": {"pass": {"const": False}}},
                "then": {
                    "anyOf": [
                        {"properties": {"residual": {"$ref": "#/$defs/poly"}}},
                        {"properties": {"detail": {"type": "string"}}},
                    ]
                },
            },
        },
    },
    "$defs": {"poly": _POLY, "named_poly": _NAMED_POLY, "operator": _OPERATOR, "flow": _FLOW},
}
