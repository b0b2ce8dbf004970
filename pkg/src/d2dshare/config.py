"""Run configuration files (YAML) and command-line overrides.

Schema (version 1)::

    schema_version: 1
    experiment:
      name: sweep-links        # trial | sweep-links | sweep-utilization | sweep-range
      trials: 200
      values: [10, 16, 20, 30, 40]   # optional, sweep axis values
      drop_links: true                # optional, relax infeasible trials
      workers: 1                      # optional, parallel trial processes
    scenario:
      <every ScenarioConfig field except initiator_tenants, which is optional>

Unknown keys are rejected, and every error message carries the line number
of the offending key (or of its enclosing section when the key is missing).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .experiment import links_config, utilization_config, range_config
from .model import InvalidConfigError, ScenarioConfig

SCHEMA_VERSION = 1

EXPERIMENTS = {
    "trial": ("trial", None, links_config),
    "sweep-links": ("num_links", (10, 16, 20, 30, 40), links_config),
    "sweep-utilization": ("utilization_B", (0.2, 0.4, 0.6, 0.8, 1.0), utilization_config),
    "sweep-range": ("max_range_m", (25, 50, 75, 100, 125, 150), range_config),
}

SCENARIO_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
OPTIONAL_SCENARIO = {"initiator_tenants"}
EXPERIMENT_KEYS = {"name", "trials", "values", "drop_links", "workers"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class RunSpec:
    experiment: str
    scenario: ScenarioConfig
    trials: int = 1000
    values: Optional[tuple] = None
    drop_links: bool = True
    workers: int = 1

    @property
    def axis(self) -> str:
        return EXPERIMENTS[self.experiment][0]

    @property
    def sweep_values(self) -> tuple:
        if self.values is not None:
            return tuple(self.values)
        default = EXPERIMENTS[self.experiment][1]
        return default if default is not None else (0,)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": {"name": self.experiment, "trials": self.trials,
                           "values": None if self.values is None else list(self.values),
                           "drop_links": self.drop_links, "workers": self.workers},
            "scenario": self.scenario.to_dict(),
        }


def preset(experiment: str) -> RunSpec:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    return RunSpec(experiment=experiment, scenario=EXPERIMENTS[experiment][2]())


def template(experiment: str) -> str:
    """A complete config file for ``experiment`` with the preset values."""
    spec = preset(experiment)
    data = spec.to_dict()
    data["experiment"]["values"] = list(spec.sweep_values) if spec.axis != "trial" else None
    data["scenario"].pop("initiator_tenants")
    if data["experiment"]["values"] is None:
        del data["experiment"]["values"]
    return yaml.safe_dump(data, sort_keys=False)


def _mapping_lines(node) -> dict[str, tuple[int, Any]]:
    """Key -> (1-based line, value node) for a YAML mapping node."""
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: (k.start_mark.line + 1, v) for k, v in node.value}


def _coerce(name: str, value, line: Optional[int]):
    f = SCENARIO_FIELDS[name]
    kind = f.type if isinstance(f.type, str) else str(f.type)
    try:
        if name == "initiator_tenants":
            return None if value is None else tuple(int(v) for v in value)
        if kind.startswith("tuple[int"):
            return tuple(int(v) for v in value)
        if kind.startswith("tuple"):
            return tuple(float(v) for v in value)
        if kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise ValueError
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"scenario.{name}: cannot interpret {value!r} as {kind}", line) from None
    return value


def parse_config(text: str) -> RunSpec:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping", 1)

    top = _mapping_lines(root)
    for key in data:
        if key not in ("schema_version", "experiment", "scenario"):
            raise ConfigError(f"unknown key {key!r}", top[key][0])
    for key in ("schema_version", "experiment", "scenario"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}", 1)
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data['schema_version']!r}", top["schema_version"][0])

    exp, exp_line = data["experiment"], top["experiment"][0]
    if not isinstance(exp, dict):
        raise ConfigError("experiment must be a mapping", exp_line)
    exp_lines = _mapping_lines(top["experiment"][1])
    for key in exp:
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key 'experiment.{key}'", exp_lines[key][0])
    if "name" not in exp:
        raise ConfigError("missing required key 'experiment.name'", exp_line)
    if exp["name"] not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp['name']!r}", exp_lines["name"][0])

    scen, scen_line = data["scenario"], top["scenario"][0]
    if not isinstance(scen, dict):
        raise ConfigError("scenario must be a mapping", scen_line)
    scen_lines = _mapping_lines(top["scenario"][1])
    for key in scen:
        if key not in SCENARIO_FIELDS:
            raise ConfigError(f"unknown key 'scenario.{key}'", scen_lines[key][0])
    for key in SCENARIO_FIELDS:
        if key not in scen and key not in OPTIONAL_SCENARIO:
            raise ConfigError(f"missing required key 'scenario.{key}'", scen_line)
    values = {k: _coerce(k, v, scen_lines[k][0]) for k, v in scen.items()}
    try:
        scenario = ScenarioConfig(**values).validate()
    except InvalidConfigError as exc:
        raise ConfigError(f"invalid scenario: {exc}", scen_line) from None

    try:
        return RunSpec(
            experiment=exp["name"],
            scenario=scenario,
            trials=int(exp.get("trials", 1000)),
            values=None if exp.get("values") is None else tuple(exp["values"]),
            drop_links=bool(exp.get("drop_links", True)),
            workers=int(exp.get("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid experiment section: {exc}", exp_line) from None


def load_config(path) -> RunSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def apply_override(spec: RunSpec, assignment: str) -> RunSpec:
    """Apply one ``key=value`` override; keys may be bare scenario or
    experiment field names or dotted ``scenario.x`` / ``experiment.x``."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"override {key}: cannot parse value {raw!r}") from None
    section, _, name = key.rpartition(".")
    if not section:
        section = "scenario" if name in SCENARIO_FIELDS else "experiment" if name in EXPERIMENT_KEYS else ""
    if section == "scenario" and name in SCENARIO_FIELDS:
        scenario = spec.scenario.replace(**{name: _coerce(name, value, None)})
        try:
            scenario.validate()
        except InvalidConfigError as exc:
            raise ConfigError(f"override {key}: {exc}") from None
        return dataclasses.replace(spec, scenario=scenario)
    if section == "experiment" and name in EXPERIMENT_KEYS:
        if name == "name":
            if value not in EXPERIMENTS:
                raise ConfigError(f"unknown experiment {value!r}")
            return dataclasses.replace(spec, experiment=value)
        if name == "values":
            value = None if value is None else tuple(value if isinstance(value, list) else [value])
        return dataclasses.replace(spec, **{name: value})
    raise ConfigError(f"unknown override key {key!r}")
