"""Human-editable model files.

A model file is a YAML document with two required top-level keys and one
optional one::

    nodes:                         # list, one entry per node
      - arrival_rate: 0.2333       # external Poisson rate (>= 0)
        servers: 3                 # positive integer
        service:                   # exactly one of the three families
          type: exponential
          mean: 1.0
      - arrival_rate: 0.0
        servers: 7
        service:
          type: hyperexp2          # either (mean, scv), fitted with
          mean: 2.0                # balanced phase means, or explicit
          scv: 4.0                 # (p1, rate1, p2, rate2)
    routing:                       # J rows of J probabilities; row i is the
      - [0.0, 1.0]                 # distribution over next nodes after a
      - [0.0, 0.0]                 # completion at node i (shortfall = leave)
    scenarios:                     # optional named what-if blocks
      heavy:
        load: 0.95                 # rescale all arrival rates to this
                                   # total utilization

Unknown keys are rejected everywhere.  Syntax errors carry the line/column
reported by the YAML parser; semantic errors carry the offending key path.
"""

from __future__ import annotations

import math
from typing import Optional

import yaml

from .distributions import (Deterministic, DistributionError, Exponential,
                            HyperExponential2, ServiceDistribution, fit_two_moments)
from .errors import ModelError
from .model import NetworkModel, Node, utilization


class ModelFileError(ModelError):
    """A model file could not be parsed or does not follow the format."""


def _fail(path: str, message: str):
    raise ModelFileError(f"{path}: {message}")


def _expect_map(value, path: str, allowed: set[str], required: set[str]) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected a mapping, got {type(value).__name__}")
    for key in value:
        if key not in allowed:
            _fail(path, f"unknown key {key!r} (allowed: {', '.join(sorted(allowed))})")
    for key in required:
        if key not in value:
            _fail(path, f"missing required key {key!r}")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        _fail(path, f"expected a finite number, got {value!r}")
    return v


def _expect_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _parse_service(spec, path: str) -> ServiceDistribution:
    if not isinstance(spec, dict) or "type" not in spec:
        _fail(path, "service must be a mapping with a 'type' key")
    kind = spec["type"]
    try:
        if kind == "exponential":
            _expect_map(spec, path, {"type", "mean"}, {"mean"})
            return Exponential(_expect_number(spec["mean"], f"{path}.mean"))
        if kind == "deterministic":
            _expect_map(spec, path, {"type", "value"}, {"value"})
            return Deterministic(_expect_number(spec["value"], f"{path}.value"))
        if kind == "hyperexp2":
            if "scv" in spec or "mean" in spec:
                _expect_map(spec, path, {"type", "mean", "scv"}, {"mean", "scv"})
                return fit_two_moments(_expect_number(spec["mean"], f"{path}.mean"),
                                       _expect_number(spec["scv"], f"{path}.scv"))
            _expect_map(spec, path, {"type", "p1", "rate1", "p2", "rate2"},
                        {"p1", "rate1", "p2", "rate2"})
            return HyperExponential2(
                p1=_expect_number(spec["p1"], f"{path}.p1"),
                rate1=_expect_number(spec["rate1"], f"{path}.rate1"),
                p2=_expect_number(spec["p2"], f"{path}.p2"),
                rate2=_expect_number(spec["rate2"], f"{path}.rate2"),
            )
    except DistributionError as exc:
        _fail(path, str(exc))
    _fail(f"{path}.type",
          f"unknown service type {kind!r} (expected exponential, hyperexp2, or deterministic)")


def parse_model(text: str, source: str = "<string>") -> tuple[NetworkModel, dict]:
    """Parse model-file text; returns the model and its scenario table."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ModelFileError(f"{where}: {exc.problem or 'invalid YAML'}") from exc
    except yaml.YAMLError as exc:
        raise ModelFileError(f"{source}: invalid YAML: {exc}") from exc
    if doc is None:
        raise ModelFileError(f"{source}: empty document")
    _expect_map(doc, "top level", {"nodes", "routing", "scenarios"}, {"nodes", "routing"})

    nodes_spec = doc["nodes"]
    if not isinstance(nodes_spec, list) or not nodes_spec:
        _fail("nodes", "expected a non-empty list")
    nodes = []
    for i, spec in enumerate(nodes_spec):
        path = f"nodes[{i}]"
        _expect_map(spec, path, {"arrival_rate", "servers", "service"},
                    {"arrival_rate", "servers", "service"})
        rate = _expect_number(spec["arrival_rate"], f"{path}.arrival_rate")
        if rate < 0:
            _fail(f"{path}.arrival_rate", "must be >= 0")
        servers = _expect_int(spec["servers"], f"{path}.servers")
        if servers < 1:
            _fail(f"{path}.servers", "must be a positive integer")
        service = _parse_service(spec["service"], f"{path}.service")
        nodes.append(Node(arrival_rate=rate, service=service, servers=servers))

    routing_spec = doc["routing"]
    J = len(nodes)
    if not isinstance(routing_spec, list) or len(routing_spec) != J:
        _fail("routing", f"expected {J} rows (one per node)")
    for i, row in enumerate(routing_spec):
        if not isinstance(row, list) or len(row) != J:
            _fail(f"routing[{i}]", f"expected a list of {J} probabilities")
        for j, v in enumerate(row):
            p = _expect_number(v, f"routing[{i}][{j}]")
            if not 0.0 <= p <= 1.0:
                _fail(f"routing[{i}][{j}]", f"probability {p!r} outside [0, 1]")

    scenarios: dict[str, dict] = {}
    if "scenarios" in doc and doc["scenarios"] is not None:
        table = doc["scenarios"]
        if not isinstance(table, dict):
            _fail("scenarios", "expected a mapping of scenario names")
        for name, block in table.items():
            _expect_map(block, f"scenarios.{name}", {"load"}, {"load"})
            load = _expect_number(block["load"], f"scenarios.{name}.load")
            if load <= 0:
                _fail(f"scenarios.{name}.load", "must be positive")
            scenarios[str(name)] = {"load": load}

    return NetworkModel(nodes, routing_spec), scenarios


def load_model(path: str) -> tuple[NetworkModel, dict]:
    """Read and parse a model file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc.strerror or exc}") from exc
    return parse_model(text, source=path)


def apply_scenario(model: NetworkModel, scenarios: dict, name: Optional[str]) -> NetworkModel:
    """Apply a named scenario: rescale arrival rates to the requested load."""
    if name is None:
        return model
    if name not in scenarios:
        known = ", ".join(sorted(scenarios)) or "none defined"
        raise ModelFileError(f"unknown scenario {name!r} (known: {known})")
    target = scenarios[name]["load"]
    _, rho = utilization(model)
    if rho <= 0:
        raise ModelFileError(f"scenario {name!r}: cannot rescale a model with no traffic")
    factor = target / rho
    nodes = [
        Node(arrival_rate=n.arrival_rate * factor, service=n.service, servers=n.servers)
        for n in model.nodes
    ]
    return NetworkModel(nodes, model.routing)


def _service_to_spec(s: ServiceDistribution) -> dict:
    if isinstance(s, Exponential):
        return {"type": "exponential", "mean": s.mean_value}
    if isinstance(s, HyperExponential2):
        return {"type": "hyperexp2", "p1": s.p1, "rate1": s.rate1,
                "p2": s.p2, "rate2": s.rate2}
    if isinstance(s, Deterministic):
        return {"type": "deterministic", "value": s.value}
    raise ModelError(f"cannot serialize service distribution {type(s).__name__}")


def dump_model(model: NetworkModel, scenarios: Optional[dict] = None) -> str:
    """Serialize a model (and optional scenarios) back to model-file text.

    ``parse_model(dump_model(m))`` reproduces the model exactly: floats are
    emitted with full round-trip precision.
    """
    doc = {
        "nodes": [
            {
                "arrival_rate": n.arrival_rate,
                "servers": int(n.servers),
                "service": _service_to_spec(n.service),
            }
            for n in model.nodes
        ],
        "routing": [[float(v) for v in row] for row in model.routing],
    }
    if scenarios:
        doc["scenarios"] = {name: dict(block) for name, block in scenarios.items()}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
