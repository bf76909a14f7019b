"""Scenario files: one TOML document with network, probe, task and output tables.

Example::

    mu = 1

    [network]
    sensor = "qubits"      # "qubits" or "mode"
    count = 2
    n_max = 1
    fixed = false          # qubits only: exactly n_max atoms per sensor
    references = 0         # extra generator-free sensors appended at the end

    [probe]
    family = "GHZ"
    n = 1

    [task]
    kind = "SingleFunction"
    v = [0.7071067811865476, 0.7071067811865476]

    [output]
    stem = "report"

Parsing then emitting is a fixed point: ``emit(parse(emit(s))) == emit(s)``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FAMILIES = {
    "GHZ": ("n",),
    "WeightedGHZ": ("w",),
    "ProportionalGHZ": ("v", "N"),
    "LocalNO": ("w",),
    "UNS": ("N",),
    "NOON": ("N",),
    "GNS": ("N", "gamma"),
    "BalancedGNS": ("N",),
    "Product": ("amplitudes",),
    "Custom": ("amplitudes",),
}
TASKS = {"EstimatePhi": ("W",), "LinearFunctions": ("M", "W"), "SingleFunction": ("v",)}
SENSORS = ("qubits", "mode")


class SchemaError(ValueError):
    pass


@dataclass
class NetworkSpec:
    sensor: str
    count: int
    n_max: int
    fixed: bool = False
    references: int = 0


@dataclass
class ProbeSpec:
    family: str
    params: dict = field(default_factory=dict)


@dataclass
class TaskSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    network: NetworkSpec
    probe: ProbeSpec
    task: TaskSpec
    mu: int = 1
    stem: str = "report"


def _require(table: dict, key: str, kind, where: str):
    if key not in table:
        raise SchemaError(f"missing key {where}.{key}")
    value = table[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"{where}.{key} has the wrong type")
    return value


def _check_unknown(table: dict, allowed, where: str):
    extra = set(table) - set(allowed)
    if extra:
        raise SchemaError(f"unknown keys in {where}: {sorted(extra)}")


def _numbers(value, where: str, depth: int = 1):
    if depth == 0:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{where} must hold numbers")
        return value
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{where} must be a non-empty list")
    return [_numbers(x, where, depth - 1) for x in value]


def from_dict(doc: dict) -> Scenario:
    _check_unknown(doc, ("mu", "network", "probe", "task", "output"), "scenario")
    mu = doc.get("mu", 1)
    if isinstance(mu, bool) or not isinstance(mu, int) or mu < 1:
        raise SchemaError("mu must be a positive integer")
    net = _require(doc, "network", dict, "scenario")
    _check_unknown(net, ("sensor", "count", "n_max", "fixed", "references"), "network")
    sensor = _require(net, "sensor", str, "network")
    if sensor not in SENSORS:
        raise SchemaError(f"network.sensor must be one of {SENSORS}")
    network = NetworkSpec(sensor, _require(net, "count", int, "network"), _require(net, "n_max", int, "network"),
                          bool(net.get("fixed", False)), int(net.get("references", 0)))
    if network.count < 1 or network.n_max < 0 or network.references < 0:
        raise SchemaError("network counts must be positive")

    pr = _require(doc, "probe", dict, "scenario")
    family = _require(pr, "family", str, "probe")
    if family not in FAMILIES:
        raise SchemaError(f"unknown probe family {family!r}")
    _check_unknown(pr, ("family",) + FAMILIES[family], "probe")
    params = {k: pr[k] for k in FAMILIES[family] if k in pr}
    for k in ("n", "N"):
        if k in params and (isinstance(params[k], bool) or not isinstance(params[k], int)):
            raise SchemaError(f"probe.{k} must be an integer")
    for k in ("w", "v"):
        if k in params:
            _numbers(params[k], f"probe.{k}")
    if family in ("Product", "Custom"):
        params["amplitudes"] = _numbers(_require(pr, "amplitudes", list, "probe"), "probe.amplitudes", 2)
    for k in FAMILIES[family]:
        if k not in params and k != "gamma":
            raise SchemaError(f"missing key probe.{k}")

    tk = _require(doc, "task", dict, "scenario")
    kind = _require(tk, "kind", str, "task")
    if kind not in TASKS:
        raise SchemaError(f"unknown task kind {kind!r}")
    _check_unknown(tk, ("kind",) + TASKS[kind], "task")
    tparams = {}
    if "W" in tk:
        tparams["W"] = _numbers(tk["W"], "task.W")
    if kind == "LinearFunctions":
        tparams["M"] = _numbers(_require(tk, "M", list, "task"), "task.M", 2)
    if kind == "SingleFunction":
        tparams["v"] = _numbers(_require(tk, "v", list, "task"), "task.v")

    out = doc.get("output", {})
    if not isinstance(out, dict):
        raise SchemaError("output must be a table")
    _check_unknown(out, ("stem",), "output")
    stem = out.get("stem", "report")
    if not isinstance(stem, str) or not stem or "/" in stem:
        raise SchemaError("output.stem must be a plain file stem")
    return Scenario(network, ProbeSpec(family, params), TaskSpec(kind, tparams), mu, stem)


def to_dict(s: Scenario) -> dict:
    net = {"sensor": s.network.sensor, "count": s.network.count, "n_max": s.network.n_max,
           "fixed": s.network.fixed, "references": s.network.references}
    probe = {"family": s.probe.family}
    probe.update({k: s.probe.params[k] for k in FAMILIES[s.probe.family] if k in s.probe.params})
    task = {"kind": s.task.kind}
    task.update({k: s.task.params[k] for k in TASKS[s.task.kind] if k in s.task.params})
    return {"mu": s.mu, "network": net, "probe": probe, "task": task, "output": {"stem": s.stem}}


def parse(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"not valid TOML: {exc}") from None
    return from_dict(doc)


def emit(s: Scenario) -> str:
    return tomli_w.dumps(to_dict(s))


def load(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    return parse(text)
