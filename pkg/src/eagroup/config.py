"""Experiment configuration: JSON schema, validation and object builders."""

from __future__ import annotations

import copy

import jsonschema
import numpy as np

from . import flows
from .errors import ValidationError
from .groups import close_group, parse_generator
from .mixing import (
    CrossoverSpec,
    FitnessPipeline,
    MixingHeuristic,
    MutationSpec,
    Scaling,
    as_rng,
    expression_objective,
    onemax,
    table_decoder,
    uniform_population,
    vertex,
)
from .ring import GenomeSpace

KINDS = ("orbits", "schema", "coverage", "mix", "evolve", "sample", "flow", "spectrum", "jsr")
NEEDS_SPACE = ("orbits", "schema", "coverage", "mix", "evolve", "sample", "spectrum")
NEEDS_OPERATORS = ("mix", "evolve", "sample", "spectrum")

_POPULATION = {
    "anyOf": [
        {"type": "string", "pattern": "^(uniform|random|vertex:[0-9]+)$"},
        {"type": "array", "items": {"type": "number", "minimum": 0}},
    ]
}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_TERMS = {
    "type": "array",
    "items": {
        "type": "array", "minItems": 2, "maxItems": 2,
        "prefixItems": [{"type": "number"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}],
    },
}

OPERATORS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "crossover": {
            "type": "object", "additionalProperties": False,
            "properties": {"kind": {"enum": ["uniform", "one_point", "none"]}},
        },
        "mutation": {
            "type": "object", "additionalProperties": False,
            "properties": {"q": {"type": "number", "minimum": 0, "maximum": 1}},
        },
        "scaling": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["identity", "power", "exponential", "linear_offset"]},
                "alpha": {"type": "number"}, "beta": {"type": "number"}, "c": {"type": "number"},
            },
        },
        "fitness": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {
                "kind": {"enum": ["onemax", "table", "expr", "constant"]},
                "offset": {"type": "number"},
                "values": {"type": "array", "items": {"type": "number"}},
                "expr": {"type": "string"},
                "value": {"type": "number", "exclusiveMinimum": 0},
                "decoder": {"anyOf": [{"enum": ["digits", "integer"]}, _MATRIX]},
            },
        },
        "order": {"enum": ["crossover_first", "mutation_first"]},
    },
}

_INTEGRATOR = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "method": {"enum": list(flows.METHODS)},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "max_step": {"type": "number", "exclusiveMinimum": 0},
        "atol": {"type": "number", "exclusiveMinimum": 0},
        "rtol": {"type": "number", "exclusiveMinimum": 0},
        "max_time": {"type": "number", "exclusiveMinimum": 0},
        "stop_tol": {"type": "number", "exclusiveMinimum": 0},
    },
}

EXPERIMENT_SCHEMAS = {
    "orbits": {"properties": {}},
    "schema": {"properties": {"mask": {"type": "integer", "minimum": 0}}, "required": ["mask"]},
    "coverage": {"properties": {
        "relations": {"anyOf": [{"const": "digits"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
        "drop": {"type": "integer", "minimum": 0},
    }},
    "mix": {"properties": {"p": _POPULATION, "samples": {"type": "integer", "minimum": 1}}},
    "evolve": {"properties": {
        "p0": _POPULATION, "steps": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "minimum": 0}, "fixed_point": {"type": "boolean"},
    }},
    "sample": {"properties": {
        "p0": _POPULATION, "mu": {"type": "integer", "minimum": 1},
        "steps": {"type": "integer", "minimum": 1}, "seeds": {"type": "integer", "minimum": 1},
    }},
    "flow": {"required": ["problem", "flow"], "properties": {
        "flow": {"enum": ["gradient", "quotient", "projected", "exit", "double_bracket"]},
        "problem": {
            "type": "object", "additionalProperties": False, "required": ["preset"],
            "properties": {
                "preset": {"enum": ["double_well", "sphere_quadratic", "circle", "affine", "polynomial", "matrix"]},
                "dim": {"type": "integer", "minimum": 1},
                "diag": {"type": "array", "items": {"type": "number"}},
                "A": _MATRIX, "b": {"type": "array", "items": {"type": "number"}},
                "N": {"type": "array", "items": {"type": "number"}},
                "objective": _TERMS,
                "constraints": {"type": "array", "items": _TERMS},
            },
        },
        "x0": {"type": "array", "items": {"type": "number"}},
        "direction": {"type": "array", "items": {"type": "number"}},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "integrator": _INTEGRATOR,
    }},
    "spectrum": {"properties": {"p0": _POPULATION, "matrix": _MATRIX}},
    "jsr": {"required": ["matrices", "depth"], "properties": {
        "matrices": {"type": "array", "minItems": 1, "items": _MATRIX},
        "depth": {"type": "integer", "minimum": 1, "maximum": 12},
    }},
}

BASE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "space": {
            "type": "object", "additionalProperties": False, "required": ["d", "l"],
            "properties": {"d": {"type": "integer", "minimum": 2}, "l": {"type": "integer", "minimum": 1}},
        },
        "group": {
            "type": "object", "additionalProperties": False,
            "properties": {"generators": {"type": "array", "items": {
                "anyOf": [{"type": "string"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]}}},
        },
        "operators": OPERATORS_SCHEMA,
        "experiment": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output": {"type": "string"},
    },
}


def schema_for(kind: str) -> dict:
    """Full schema with the experiment block specialised to ``kind``."""
    schema = copy.deepcopy(BASE_SCHEMA)
    exp = {"type": "object", "additionalProperties": False, **copy.deepcopy(EXPERIMENT_SCHEMAS[kind])}
    schema["properties"]["experiment"] = exp
    schema["properties"]["kind"] = {"const": kind}
    required = ["kind"]
    if kind in NEEDS_SPACE:
        required.append("space")
    if kind in NEEDS_OPERATORS:
        required.append("operators")
    if "required" in exp:
        required.append("experiment")
    schema["required"] = required
    return schema


EXAMPLES = {
    "orbits": {"kind": "orbits", "space": {"d": 2, "l": 3}, "group": {"generators": ["rotation"]}},
    "schema": {"kind": "schema", "space": {"d": 2, "l": 3}, "experiment": {"mask": 4}},
    "coverage": {"kind": "coverage", "space": {"d": 3, "l": 2}, "experiment": {"relations": "digits"}},
    "mix": {"kind": "mix", "space": {"d": 2, "l": 3}, "seed": 7,
            "operators": {"crossover": {"kind": "uniform"}, "mutation": {"q": 0.01},
                          "fitness": {"kind": "onemax"}},
            "experiment": {"p": "random", "samples": 5}},
    "evolve": {"kind": "evolve", "space": {"d": 2, "l": 3},
               "operators": {"crossover": {"kind": "none"}, "mutation": {"q": 0.05},
                             "fitness": {"kind": "constant", "value": 1.0}},
               "experiment": {"p0": "vertex:3", "steps": 500, "fixed_point": True}},
    "sample": {"kind": "sample", "space": {"d": 2, "l": 3}, "seed": 1,
               "operators": {"crossover": {"kind": "uniform"}, "mutation": {"q": 0.01},
                             "fitness": {"kind": "onemax"}},
               "experiment": {"p0": "uniform", "mu": 10000, "steps": 5, "seeds": 4}},
    "flow": {"kind": "flow", "experiment": {"flow": "gradient", "problem": {"preset": "double_well"},
                                            "x0": [0.3]}},
    "spectrum": {"kind": "spectrum", "space": {"d": 2, "l": 1},
                 "operators": {"crossover": {"kind": "none"}, "mutation": {"q": 0.1},
                               "fitness": {"kind": "constant", "value": 1.0}},
                 "experiment": {"p0": "uniform"}},
    "jsr": {"kind": "jsr", "experiment": {"matrices": [[[1, 1], [0, 1]], [[1, 0], [1, 1]]], "depth": 8}},
}


def _path(error) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "(root)"


def validate(config) -> dict:
    """Validate a parsed config; raises :class:`ValidationError` naming the field."""
    if not isinstance(config, dict):
        raise ValidationError("config must be a JSON object", field="(root)")
    kind = config.get("kind")
    schema = schema_for(kind) if kind in KINDS else BASE_SCHEMA
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: (len(list(e.absolute_path)), _path(e)))
    if errors:
        # the deepest error names the most specific field
        err = max(errors, key=lambda e: len(list(e.absolute_path)))
        field = _path(err)
        if err.validator == "additionalProperties":
            field = field if field != "(root)" else "(root)"
        raise ValidationError(f"{field}: {err.message}", field=field)
    return config


# -- builders -------------------------------------------------------------------

def build_space(config) -> GenomeSpace:
    s = config["space"]
    return GenomeSpace(s["d"], s["l"])


def build_group(config, space):
    gens = [parse_generator(space, g) for g in config.get("group", {}).get("generators", [])]
    return close_group(gens, n=space.n)


def build_fitness(config, space) -> FitnessPipeline:
    ops = config.get("operators", {})
    spec = ops.get("fitness", {"kind": "onemax"})
    kind = spec["kind"]
    if kind == "onemax":
        objective = onemax(spec.get("offset", 1.0))
    elif kind == "constant":
        value = spec.get("value", 1.0)
        objective = lambda x: value
    elif kind == "table":
        values = spec.get("values")
        if values is None or len(values) != space.n:
            raise ValidationError(f"fitness table must have {space.n} values", field="operators.fitness.values")
        table = list(values)
        decoder = table_decoder(np.arange(space.n))
        return FitnessPipeline(lambda x: table[int(x[0])], decoder, _scaling(ops))
    elif kind == "expr":
        if "expr" not in spec:
            raise ValidationError("expr fitness needs an 'expr' string", field="operators.fitness.expr")
        objective = expression_objective(spec["expr"])
    decoder = spec.get("decoder", "digits")
    if decoder == "digits":
        dec = None
    elif decoder == "integer":
        dec = table_decoder(np.arange(space.n))
    else:
        if len(decoder) != space.n:
            raise ValidationError(f"decoder table must have {space.n} rows", field="operators.fitness.decoder")
        dec = table_decoder(decoder)
    return FitnessPipeline(objective, dec, _scaling(ops))


def _scaling(ops) -> Scaling:
    spec = ops.get("scaling", {"kind": "identity"})
    kind = spec.get("kind", "identity")
    param = {"power": "alpha", "exponential": "beta", "linear_offset": "c"}.get(kind)
    if param and param not in spec:
        raise ValidationError(f"{kind} scaling needs '{param}'", field=f"operators.scaling.{param}")
    return Scaling(kind, spec.get(param) if param else None)


def build_heuristic(config, space=None) -> MixingHeuristic:
    space = space or build_space(config)
    ops = config.get("operators", {})
    cx = CrossoverSpec.from_kind(space, ops.get("crossover", {}).get("kind", "none"))
    mu = MutationSpec(ops.get("mutation", {}).get("q", 0.0))
    return MixingHeuristic(space, build_fitness(config, space), cx, mu, ops.get("order", "crossover_first"))


def build_population(spec, n: int, rng=None, field="experiment.p0") -> np.ndarray:
    if spec is None or spec == "uniform":
        return uniform_population(n)
    if spec == "random":
        return as_rng(rng).dirichlet(np.ones(n))
    if isinstance(spec, str) and spec.startswith("vertex:"):
        i = int(spec.split(":", 1)[1])
        if i >= n:
            raise ValidationError(f"vertex {i} outside [0, {n})", field=field)
        return vertex(n, i)
    p = np.asarray(spec, dtype=float)
    if p.shape != (n,) or abs(p.sum() - 1) > 1e-9:
        raise ValidationError(f"population must be {n} nonnegative numbers summing to 1", field=field)
    return p


def build_integrator(exp) -> flows.IntegratorConfig:
    return flows.IntegratorConfig(**exp.get("integrator", {}))


# -- flow problems --------------------------------------------------------------

def _poly(terms):
    coefs = np.array([float(c) for c, _ in terms])
    exps = np.array([list(e) for _, e in terms], dtype=float)

    def value(x):
        return float(coefs @ np.prod(np.power(x, exps), axis=1)) if len(coefs) else 0.0

    def grad(x):
        g = np.zeros_like(x)
        for i in range(x.size):
            lowered = exps.copy()
            lowered[:, i] = np.maximum(lowered[:, i] - 1, 0)
            g[i] = coefs @ (exps[:, i] * np.prod(np.power(x, lowered), axis=1))
        return g

    return value, grad


def build_flow_problem(problem) -> tuple:
    """Returns ``(objective or None, constraint or None, default x0)``."""
    preset = problem["preset"]
    if preset == "double_well":
        dim = problem.get("dim", 1)
        obj = flows.SmoothObjective(
            lambda x: float((x[0] ** 2 - 1) ** 2 + np.sum(x[1:] ** 2)),
            lambda x: np.concatenate([[4 * x[0] * (x[0] ** 2 - 1)], 2 * x[1:]]), dim)
        return obj, None, np.full(dim, 0.3)
    if preset in ("sphere_quadratic", "circle"):
        sphere = flows.ConstraintMap(lambda x: np.array([x @ x - 1.0]), lambda x: 2.0 * x[None, :])
        if preset == "circle":
            obj = flows.SmoothObjective(lambda x: float(x[1]), lambda x: np.array([0.0, 1.0]), 2)
            return obj, sphere, np.array([1.0, 0.0])
        D = np.asarray(problem.get("diag", [1.0, 2.0, 3.0]), dtype=float)
        obj = flows.SmoothObjective(lambda x: 0.5 * float(x @ (D * x)), lambda x: D * x, D.size)
        x0 = np.ones(D.size) / np.sqrt(D.size)
        return obj, sphere, x0
    if preset == "affine":
        if "A" not in problem or "b" not in problem:
            raise ValidationError("affine preset needs A and b", field="experiment.problem.A")
        A = np.asarray(problem["A"], dtype=float)
        b = np.asarray(problem["b"], dtype=float)
        con = flows.ConstraintMap(lambda x: A @ x - b, lambda x: A)
        obj = flows.SmoothObjective(lambda x: 0.5 * float(x @ x), lambda x: x, A.shape[1])
        return obj, con, np.zeros(A.shape[1])
    if preset == "polynomial":
        dim = problem.get("dim")
        if dim is None:
            raise ValidationError("polynomial preset needs dim", field="experiment.problem.dim")
        for terms in [problem.get("objective", [])] + problem.get("constraints", []):
            for _, e in terms:
                if len(e) != dim:
                    raise ValidationError(f"monomial exponent list must have {dim} entries",
                                          field="experiment.problem")
        f, g = _poly(problem.get("objective", []))
        obj = flows.SmoothObjective(f, g, dim)
        comps = [_poly(t) for t in problem.get("constraints", [])]
        con = None
        if comps:
            con = flows.ConstraintMap(lambda x: np.array([c[0](x) for c in comps]),
                                      lambda x: np.array([c[1](x) for c in comps]))
        return obj, con, np.zeros(dim)
    if preset == "matrix":
        raise ValidationError("the matrix preset is only valid with the double_bracket flow",
                              field="experiment.problem.preset")
    raise ValidationError(f"unknown preset {preset!r}", field="experiment.problem.preset")
