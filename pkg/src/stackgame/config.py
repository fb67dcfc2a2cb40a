"""Line-oriented scenario files.

Format::

    # global settings
    p = 1
    beta = 0.75
    objective = revdecoup        # or demresp:<yref>

    [device]
    sat = log:10                 # or poly:a0,a1,...
    gamma0 = (10, -1)
    gamma1 = (15, -1)

Global keys: p, ybar, vbar, beta, objective, max_iters, epsilon, seed,
fit_tol, tol, max_order. ``beta`` and at least one ``[device]`` block are
required; each block needs ``sat``, ``gamma0`` and ``gamma1``.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path
from typing import Dict, List, Tuple

from .engine import Device, Scenario
from .estimator import DEFAULT_FIT_TOL
from .follower import DEFAULT_TOL
from .model import (
    ConfigurationError,
    DemandResponse,
    GameParams,
    LogSatisfaction,
    QuadraticIncentive,
    RevenueDecoupling,
    SatisfactionPoly,
)

GLOBAL_KEYS = ("p", "ybar", "vbar", "beta", "objective", "max_iters", "epsilon",
               "seed", "fit_tol", "tol", "max_order")
DEVICE_KEYS = ("sat", "gamma0", "gamma1")


class ConfigError(ConfigurationError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _float(text: str, line: int, key: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(line, f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(line, f"{key}: value must be finite, got {text!r}")
    return value


def _int(text: str, line: int, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(line, f"{key}: expected an integer, got {text!r}") from None


def _floats(text: str, line: int, key: str) -> List[float]:
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [t.strip() for t in body.split(",")]
    if not parts or any(not t for t in parts):
        raise ConfigError(line, f"{key}: expected comma-separated numbers, got {text!r}")
    return [_float(t, line, key) for t in parts]


def _incentive(text: str, line: int, key: str) -> QuadraticIncentive:
    values = _floats(text, line, key)
    if len(values) != 2:
        raise ConfigError(line, f"{key}: expected (xi1, xi2), got {text!r}")
    return QuadraticIncentive(*values)


def _satisfaction(text: str, line: int):
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "log":
            return LogSatisfaction(_float(arg.strip(), line, "sat"))
        if kind == "poly":
            return SatisfactionPoly(tuple(_floats(arg, line, "sat")))
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError(line, str(exc)) from None
    raise ConfigError(line, f"sat: expected log:<a> or poly:<a0,a1,...>, got {text!r}")


def _objective(text: str, line: int):
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "revdecoup" and not arg:
        return RevenueDecoupling()
    if kind == "demresp":
        return DemandResponse(_float(arg.strip(), line, "objective"))
    raise ConfigError(line, f"objective: expected revdecoup or demresp:<yref>, got {text!r}")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; errors carry the offending line."""
    globals_: Dict[str, Tuple[str, int]] = {}
    blocks: List[Tuple[int, Dict[str, Tuple[str, int]]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line.lower() != "[device]":
                raise ConfigError(lineno, f"unknown section {line!r}")
            blocks.append((lineno, {}))
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        if not value:
            raise ConfigError(lineno, f"{key}: missing value")
        if blocks:
            allowed, target = DEVICE_KEYS, blocks[-1][1]
        else:
            allowed, target = GLOBAL_KEYS, globals_
        if key not in allowed:
            where = "[device] block" if blocks else "global section"
            raise ConfigError(lineno, f"unknown key {key!r} in {where}")
        if key in target:
            raise ConfigError(lineno, f"duplicate key {key!r}")
        target[key] = (value, lineno)

    last_line = max(len(text.splitlines()), 1)
    if "beta" not in globals_:
        raise ConfigError(last_line, "missing required key 'beta'")
    if not blocks:
        raise ConfigError(last_line, "no [device] blocks (at least one device is required)")

    def num(key, default):
        if key not in globals_:
            return default
        value, lineno = globals_[key]
        return _float(value, lineno, key)

    def whole(key, default):
        if key not in globals_:
            return default
        value, lineno = globals_[key]
        return _int(value, lineno, key)

    def line_of(key):
        return globals_.get(key, (None, last_line))[1]

    values = {k: num(k, d) for k, d in (("p", 1.0), ("ybar", 100.0), ("vbar", 100.0),
                                         ("beta", 0.0))}
    for key in ("p", "ybar", "vbar"):
        if values[key] <= 0:
            raise ConfigError(line_of(key), f"{key} must be > 0, got {values[key]}")
    if values["beta"] < 0:
        raise ConfigError(line_of("beta"), f"beta must be >= 0, got {values['beta']}")
    params = GameParams(**values)

    objective = RevenueDecoupling()
    if "objective" in globals_:
        objective = _objective(*globals_["objective"])

    devices = []
    for header_line, block in blocks:
        for key in DEVICE_KEYS:
            if key not in block:
                raise ConfigError(header_line, f"[device] block missing {key!r}")
        devices.append(Device(_satisfaction(*block["sat"]),
                              _incentive(block["gamma0"][0], block["gamma0"][1], "gamma0"),
                              _incentive(block["gamma1"][0], block["gamma1"][1], "gamma1")))

    checks = (
        ("max_iters", whole("max_iters", 20), lambda v: v >= 2, "must be >= 2"),
        ("epsilon", num("epsilon", 0.0), lambda v: v >= 0, "must be >= 0"),
        ("seed", whole("seed", 0), lambda v: True, ""),
        ("fit_tol", num("fit_tol", DEFAULT_FIT_TOL), lambda v: v > 0, "must be > 0"),
        ("tol", num("tol", DEFAULT_TOL), lambda v: v > 0, "must be > 0"),
        ("max_order", whole("max_order", None), lambda v: v is None or v >= 1, "must be >= 1"),
    )
    fields = {}
    for key, value, ok, why in checks:
        if not ok(value):
            raise ConfigError(line_of(key), f"{key} {why}, got {value}")
        fields[key] = value
    if isinstance(objective, DemandResponse) and not 0 <= objective.yref <= params.ybar:
        raise ConfigError(line_of("objective"),
                          f"demand-response reference {objective.yref} outside [0, {params.ybar}]")
    return Scenario(params, tuple(devices), objective, **fields)


def _fmt(x: float) -> str:
    return repr(float(x))


def render_scenario(scenario: Scenario) -> str:
    """Inverse of :func:`parse_scenario`."""
    prm = scenario.params
    obj = scenario.objective
    lines = [
        f"p = {_fmt(prm.p)}",
        f"ybar = {_fmt(prm.ybar)}",
        f"vbar = {_fmt(prm.vbar)}",
        f"beta = {_fmt(prm.beta)}",
        "objective = " + ("revdecoup" if isinstance(obj, RevenueDecoupling)
                          else f"demresp:{_fmt(obj.yref)}"),
        f"max_iters = {scenario.max_iters}",
        f"epsilon = {_fmt(scenario.epsilon)}",
        f"seed = {scenario.seed}",
        f"fit_tol = {_fmt(scenario.fit_tol)}",
        f"tol = {_fmt(scenario.tol)}",
    ]
    if scenario.max_order is not None:
        lines.append(f"max_order = {scenario.max_order}")
    for dev in scenario.devices:
        sat = dev.satisfaction
        if isinstance(sat, LogSatisfaction):
            sat_text = f"log:{_fmt(sat.scale)}"
        else:
            sat_text = "poly:" + ",".join(_fmt(a) for a in sat.alpha)
        lines += [
            "",
            "[device]",
            f"sat = {sat_text}",
            f"gamma0 = ({_fmt(dev.gamma0.xi1)}, {_fmt(dev.gamma0.xi2)})",
            f"gamma1 = ({_fmt(dev.gamma1.xi1)}, {_fmt(dev.gamma1.xi2)})",
        ]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``log_aggregate``)."""
    ref = resources.files("stackgame") / "scenarios" / f"{name}.cfg"
    return Path(str(ref))


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
