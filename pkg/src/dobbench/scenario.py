"""JSON scenario files: schema, validation and construction of the models."""
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .dob import QFilterConfig
from .errors import ConfigError
from .model import NominalModel, OuterController, PlantModel, Scenario, Signal, StateFunction

_num = {"type": "number"}
_vec = {"type": "array", "items": _num}
_mat = {"type": "array", "items": _vec}

_signal_term = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "sin", "cos", "polynomial"]},
        "value": _num, "amp": _num, "freq": _num, "phase": _num, "coeffs": _vec,
    },
    "additionalProperties": False,
}

_fd_term = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["sin", "cos", "tanh", "power"]},
        "source": {"type": "string", "pattern": "^(x[0-9]+|z[0-9]+|t)$"},
        "coef": _num, "freq": _num, "phase": _num, "power": _num,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["plant", "nominal", "controller", "qfilter", "signals"],
    "properties": {
        "plant": {
            "type": "object",
            "required": ["nu", "phi", "psi", "S", "G", "g", "g_lo", "g_hi"],
            "properties": {
                "nu": {"type": "integer", "minimum": 1},
                "phi": _vec, "psi": _vec, "S": _mat, "G": _vec,
                "g": _num, "g_lo": _num, "g_hi": _num,
                "f_d": {"type": "array", "items": _fd_term},
            },
            "additionalProperties": False,
        },
        "nominal": {
            "type": "object",
            "required": ["phi_bar", "psi_bar", "g_bar", "S_bar", "G_bar"],
            "properties": {"phi_bar": _vec, "psi_bar": _vec, "g_bar": _num, "S_bar": _mat, "G_bar": _vec},
            "additionalProperties": False,
        },
        "controller": {
            "type": "object",
            "required": ["K", "L", "D"],
            "properties": {"J": _mat, "K": _vec, "L": _vec, "D": _num},
            "additionalProperties": False,
        },
        "qfilter": {
            "type": "object",
            "required": ["l", "m", "a", "tau"],
            "properties": {
                "l": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "a": _vec, "c": _vec,
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "s_bar": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "signals": {
            "type": "object",
            "properties": {
                "r": {"type": "array", "items": _signal_term},
                "d": {"type": "array", "items": _signal_term},
            },
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {"x": _vec, "z": _vec, "theta": _vec},
            "additionalProperties": False,
        },
        "sim": {
            "type": "object",
            "properties": {
                "step": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer"},
                "record_every": {"type": "integer", "minimum": 1},
                "noise": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["none", "uniform", "sinusoid", "square"]},
                        "mu": {"type": "number", "minimum": 0},
                        "freq": {"type": "number", "exclusiveMinimum": 0},
                        "period": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "design": {
            "type": "object",
            "required": ["eps_U", "eps_T", "mu"],
            "properties": {
                "eps_U": {"type": "number", "exclusiveMinimum": 0},
                "eps_T": {"type": "number", "exclusiveMinimum": 0},
                "mu": {"type": "number", "minimum": 0},
                "cU": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "cT": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "budget": {"type": "integer", "minimum": 100},
                "settle_eig": {"enum": ["s", "f"]},
                "g_points": {"type": "integer", "minimum": 1},
                "kappa_scale": {
                    "type": "object",
                    "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


@dataclass
class ScenarioFile:
    scenario: Scenario
    qfilter: QFilterConfig
    sim: "object"
    design: "object"
    raw: dict


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def validate(doc):
    """Schema check; the first error is reported with its JSON pointer."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = _pointer(err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            where = where.rstrip("/") + "/" + missing
        raise ConfigError(f"{where}: {err.message}")


def _at(section, fn):
    try:
        return fn()
    except ConfigError as exc:
        raise ConfigError(f"/{section}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"/{section}: {exc}") from exc


def build(doc):
    from .bounds import DesignSpec
    from .sim import SimConfig

    validate(doc)
    p = doc["plant"]
    nu = p["nu"]
    nz = len(p["psi"])
    plant = _at("plant", lambda: PlantModel(
        nu=nu, phi=p["phi"], psi=p["psi"], S=p["S"], G=p["G"], g=p["g"],
        g_lo=p["g_lo"], g_hi=p["g_hi"], f_d=StateFunction(p.get("f_d", []), nu, nz)))
    n = doc["nominal"]
    nom = _at("nominal", lambda: NominalModel(n["phi_bar"], n["psi_bar"], n["g_bar"], n["S_bar"], n["G_bar"]))
    c = doc["controller"]
    ctrl = _at("controller", lambda: OuterController(c.get("J", []), c["K"], c["L"], c["D"]))
    sig = doc["signals"]
    init = doc.get("initial", {})
    scen = _at("plant", lambda: Scenario(
        plant, nom, ctrl,
        r=_at("signals/r", lambda: Signal(sig.get("r", [{"kind": "constant", "value": 0.0}]))),
        d=_at("signals/d", lambda: Signal(sig.get("d", []))),
        x0=init.get("x"), z0=init.get("z"), theta0=init.get("theta")))
    q = doc["qfilter"]
    qcfg = _at("qfilter", lambda: QFilterConfig(q["l"], q["m"], tuple(q["a"]), tuple(q.get("c", [])),
                                                q["tau"], q.get("s_bar")))
    _at("qfilter", lambda: qcfg.check_degree(nu))
    sim = _at("sim", lambda: SimConfig.from_dict(doc.get("sim", {})))
    design = _at("design", lambda: DesignSpec.from_dict(doc["design"])) if "design" in doc else None
    return ScenarioFile(scen, qcfg, sim, design, doc)


def load(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return build(doc)


def benchmark_document():
    text = resources.files("dobbench").joinpath("data/benchmark.json").read_text()
    return json.loads(text)


def benchmark():
    """The packaged benchmark scenario."""
    return build(benchmark_document())
