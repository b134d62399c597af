"""Scenario files and the built-in presets A-D."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InvalidSpan, ScenarioSyntaxError, SchemaError
from .integrator import METHODS, SolverConfig
from .model import PARAM_NAMES, ModelParams, State, validate_params

SOLVER_KEYS = {
    "method": "method",
    "step": "step",
    "rel_tol": "rel_tol",
    "max_steps": "max_step_count",
    "blowup_threshold": "blowup_threshold",
}
REQUIRED_KEYS = (*PARAM_NAMES, "s0", "i0", "t0", "t1")
OPTIONAL_KEYS = ("solver", "label", "assumed")


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    x0: State
    t0: float = 0.0
    t1: float = 10.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    label: str = ""
    # Set when a value was filled in because the source gave none.
    assumed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x0", State(float(self.x0[0]), float(self.x0[1])))
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise InvalidSpan(f"need t1 > t0, got t0={self.t0!r}, t1={self.t1!r}")

    def with_params(self, **changes):
        return Scenario(self.params.replace(**changes), self.x0, self.t0, self.t1, self.solver,
                        self.label, self.assumed)


def _preset(label, alpha, sigma, beta1, beta2, mu1, mu2, x0, assumed=False):
    return Scenario(validate_params(alpha, sigma, beta1, beta2, mu1, mu2), State(*x0), 0.0, 10.0,
                    SolverConfig(), label, assumed)


PRESETS = {
    "A": _preset("A", 0.1, 0.5, 0.1, 0.4, 0.0, 0.0, (10000, 2000)),
    # no initial state is given for B; (10000, 2000) is filled in
    "B": _preset("B", 0.34, 0.6, 0.7, 0.2, 0.1, 0.9, (10000, 2000), assumed=True),
    "C": _preset("C", 0.2, 0.29, 0.67, 0.56, 0.8, 0.41, (10000, 1865)),
    # beta1, beta2 are swept over [0, 1]^2; the base midpoint is a placeholder
    "D": _preset("D", 0.73, 0.21, 0.5, 0.5, 0.4, 0.9, (10000, 20000), assumed=True),
}
PRESET_D_AXES = (("beta1", 0.0, 1.0, 11), ("beta2", 0.0, 1.0, 11))


def scenario_to_dict(sc: Scenario) -> dict:
    out = sc.params.as_dict()
    out.update(s0=sc.x0.s, i0=sc.x0.i, t0=sc.t0, t1=sc.t1)
    out["solver"] = {key: getattr(sc.solver, attr) for key, attr in SOLVER_KEYS.items()}
    out["label"] = sc.label
    if sc.assumed:
        out["assumed"] = True
    return out


def serialize_scenario(sc: Scenario) -> bytes:
    return (json.dumps(scenario_to_dict(sc), indent=2) + "\n").encode("utf-8")


def _number(obj, key, path):
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}.{key}", "expected a number")
    return float(value)


def parse_scenario(data, *, unchecked_rates=False) -> Scenario:
    """Parse scenario JSON (bytes or str).

    Unknown keys are rejected so that a misspelt parameter name cannot silently
    fall back to a default. A missing ``solver`` block, or missing keys inside
    it, take the :class:`SolverConfig` defaults.

    Raises
    ------
    ScenarioSyntaxError
        Malformed JSON; ``err.offset`` is the byte offset of the problem.
    SchemaError
        Wrong shape; ``err.path`` is a JSONPath such as ``$.gamma``.
    ValidationError
        Parameter bounds, from :func:`sidyn.model.validate_params`.
    """
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError("invalid UTF-8", exc.start) from None
    else:
        text = data

    def reject_constant(name):
        pos = text.find(name)
        raise ScenarioSyntaxError(f"{name} is not valid JSON", len(text[:pos].encode("utf-8")))

    try:
        obj = json.loads(text, parse_constant=reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, len(text[:exc.pos].encode("utf-8"))) from None

    if not isinstance(obj, dict):
        raise SchemaError("$", "expected an object")
    for key in obj:
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise SchemaError(f"$.{key}", "unknown key")
    for key in REQUIRED_KEYS:
        if key not in obj:
            raise SchemaError(f"$.{key}", "required key missing")
    values = {key: _number(obj, key, "$") for key in REQUIRED_KEYS}

    solver_kw = {}
    if "solver" in obj:
        block = obj["solver"]
        if not isinstance(block, dict):
            raise SchemaError("$.solver", "expected an object")
        for key, value in block.items():
            if key not in SOLVER_KEYS:
                raise SchemaError(f"$.solver.{key}", "unknown key")
            if key == "method":
                if value not in METHODS:
                    raise SchemaError("$.solver.method", f"one of {list(METHODS)}")
                solver_kw["method"] = value
            elif key == "max_steps":
                if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                    raise SchemaError("$.solver.max_steps", "expected a positive integer")
                solver_kw["max_step_count"] = value
            else:
                number = _number(block, key, "$.solver")
                if not (math.isfinite(number) and number > 0):
                    raise SchemaError(f"$.solver.{key}", "expected a positive number")
                solver_kw[SOLVER_KEYS[key]] = number

    label = obj.get("label", "")
    if not isinstance(label, str):
        raise SchemaError("$.label", "expected a string")
    assumed = obj.get("assumed", False)
    if not isinstance(assumed, bool):
        raise SchemaError("$.assumed", "expected a boolean")

    params = validate_params(*(values[name] for name in PARAM_NAMES), unchecked_rates=unchecked_rates)
    x0 = State(values["s0"], values["i0"])
    if not (math.isfinite(x0.s) and math.isfinite(x0.i)):
        raise SchemaError("$.s0", "expected finite initial counts")
    if values["t1"] <= values["t0"]:
        raise SchemaError("$.t1", "expected t1 > t0")
    return Scenario(params, x0, values["t0"], values["t1"], SolverConfig(**solver_kw), label, assumed)
