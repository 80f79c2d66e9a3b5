"""Strict JSON scenario documents <-> ScenarioConfig."""

from __future__ import annotations

import dataclasses
import json

from .adapt import ConstraintSet, DesignSetting, SearchGrid
from .channel import ChannelModel
from .engine import AdaptationConfig, ScenarioConfig
from .geometry import LinkSpec, MobilityModel, Point
from .mac import MacPolicy
from .traffic import ArrivalProcess, RetxPolicy


class ConfigError(ValueError):
    """Invalid scenario document; the message starts with the offending key path."""


_NESTED = {
    ScenarioConfig: {"mobility": MobilityModel, "channel": ChannelModel, "setting": DesignSetting,
                     "arrivals": ArrivalProcess, "constraints": ConstraintSet,
                     "adaptation": AdaptationConfig},
    DesignSetting: {"mac": MacPolicy, "retx": RetxPolicy},
    AdaptationConfig: {"grid": SearchGrid},
}

_REQUIRED = {ScenarioConfig: ("seed", "total_slots")}


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _check_scalar(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
    return value


def _default_of(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def _point(value, path):
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{path}: expected [x, y]")
    try:
        return Point(float(value[0]), float(value[1]))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _links(value, path):
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list of links")
    seen, out = set(), []
    for i, item in enumerate(value):
        p = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{p}: expected an object")
        unknown = set(item) - {"id", "tx", "rx"}
        if unknown:
            raise ConfigError(f"{p}.{sorted(unknown)[0]}: unknown key")
        if "id" not in item or isinstance(item["id"], bool) or not isinstance(item["id"], int):
            raise ConfigError(f"{p}.id: expected an integer")
        if item["id"] in seen:
            raise ConfigError(f"{p}.id: duplicate node id {item['id']}")
        seen.add(item["id"])
        try:
            out.append(LinkSpec(item["id"], _point(item.get("tx"), f"{p}.tx"), _point(item.get("rx"), f"{p}.rx")))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{p}: {exc}") from None
    return tuple(out)


def _build(cls, data, path, base=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            raise ConfigError(f"{_join(path, key)}: unknown key")
    for key in _REQUIRED.get(cls, ()):
        if key not in data:
            raise ConfigError(f"{_join(path, key)}: required key missing")
    nested = _NESTED.get(cls, {})
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            continue
        value, p = data[name], _join(path, name)
        default = getattr(base, name) if base is not None else _default_of(f)
        if name in nested:
            value = _build(nested[name], value, p, base=getattr(base, name, None) if base is not None else None)
        elif cls is ScenarioConfig:
            value = _scenario_field(name, value, p, data)
        elif cls is MacPolicy and name == "tdma_assignment":
            if value is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"{p}: expected an object")
                try:
                    value = {int(k): v for k, v in value.items()}
                except ValueError:
                    raise ConfigError(f"{p}: keys must be node ids") from None
                for k, v in value.items():
                    _check_scalar(v, 0, f"{p}.{k}")
        elif isinstance(default, tuple):
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{p}: expected a nonempty list")
            value = tuple(value)
        elif default is not None:
            value = _check_scalar(value, default, p)
        kwargs[name] = value
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def _scenario_field(name, value, path, data):
    if name in ("seed", "total_slots", "window", "search_limit", "initial_backlog"):
        return _check_scalar(value, 0, path)
    if name == "area":
        if not (isinstance(value, list) and len(value) == 2):
            raise ConfigError(f"{path}: expected [width, height]")
        return tuple(_check_scalar(v, 0.0, f"{path}[{i}]") for i, v in enumerate(value))
    if name == "links":
        return None if value is None else _links(value, path)
    if name == "node_settings":
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object keyed by node id")
        shared = _build(DesignSetting, data.get("setting", {}), "setting")
        out = {}
        for key, partial in value.items():
            try:
                node = int(key)
            except ValueError:
                raise ConfigError(f"{path}.{key}: keys must be node ids") from None
            out[node] = _build(DesignSetting, partial, f"{path}.{key}", base=shared)
        return out
    if name == "arrival_sequences":
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object keyed by node id")
        out = {}
        for key, seq in value.items():
            try:
                node = int(key)
            except ValueError:
                raise ConfigError(f"{path}.{key}: keys must be node ids") from None
            if not isinstance(seq, list):
                raise ConfigError(f"{path}.{key}: expected a list of counts")
            out[node] = tuple(_check_scalar(x, 0, f"{path}.{key}[{i}]") for i, x in enumerate(seq))
        return out
    raise ConfigError(f"{path}: unknown key")


def parse_config(doc: dict) -> ScenarioConfig:
    return _build(ScenarioConfig, doc, "")


def parse_and_validate(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(doc)


def _plain(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully resolved document; parsing it back yields an equal config."""
    doc = _plain(cfg)
    if cfg.links is not None:
        doc["links"] = [{"id": l.id, "tx": [l.tx.x, l.tx.y], "rx": [l.rx.x, l.rx.y]} for l in cfg.links]
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=1)
