from __future__ import annotations

"""Experiment files: TOML with [protocol], [network] and optional [sweep] / [validate].

Unknown sections and keys are rejected outright: a typo in a sweep script
must fail loudly instead of silently running the default configuration.
"""

import dataclasses
import logging
import sys
from typing import Any, Iterable

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - same API, backported as tomli
    import tomli as tomllib

from abft.domain.params import (
    ConfigError,
    Experiment,
    NetworkConfig,
    ProtocolParams,
    SweepAxes,
    ValidateSettings,
    Violation,
    network_violations,
    protocol_violations,
)

logger = logging.getLogger("abft.domain")

_SECTIONS: dict[str, type] = {
    "protocol": ProtocolParams,
    "network": NetworkConfig,
    "sweep": SweepAxes,
    "validate": ValidateSettings,
}

PRESETS: dict[str, dict[str, int]] = {
    "paper": {"bi_count": 10_000, "run_count": 1000, "warmup_bi": 500},
    "desk": {"bi_count": 2_000, "run_count": 100, "warmup_bi": 500},
}


def _field_types(cls: type) -> dict[str, str]:
    return {f.name: str(f.type) for f in dataclasses.fields(cls)}


def _coerce(section: str, key: str, kind: str, value: Any) -> Any:
    # TOML gives us ints for "8" and floats for "0.1"; accept ints where floats are expected.
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{section}.{key} must be an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{section}.{key} must be a number")
        return float(value)
    if kind.startswith("tuple"):
        if isinstance(value, int) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise TypeError(f"{section}.{key} must be a list of integers")
        return tuple(value)
    raise TypeError(f"{section}.{key} has unsupported type {kind}")


def experiment_from_dict(data: dict[str, Any]) -> Experiment:
    violations: list[Violation] = []
    built: dict[str, Any] = {}
    for section, payload in data.items():
        if section not in _SECTIONS:
            violations.append(
                Violation("UNKNOWN_SECTION", section, f"unknown section [{section}]")
            )
            continue
        if not isinstance(payload, dict):
            violations.append(Violation("BAD_VALUE", section, f"[{section}] must be a table"))
            continue
        cls = _SECTIONS[section]
        types = _field_types(cls)
        kwargs: dict[str, Any] = {}
        for key, value in payload.items():
            if key not in types:
                violations.append(
                    Violation("UNKNOWN_KEY", f"{section}.{key}", f"unknown key {section}.{key}")
                )
                continue
            try:
                kwargs[key] = _coerce(section, key, types[key], value)
            except TypeError as exc:
                violations.append(Violation("BAD_VALUE", f"{section}.{key}", str(exc)))
        if not any(v.field.startswith(section) for v in violations):
            built[section] = cls(**kwargs)
    if violations:
        raise ConfigError(violations)
    return Experiment(**built)


def check_experiment(exp: Experiment) -> Experiment:
    violations = protocol_violations(exp.protocol) + network_violations(exp.network)
    for axis in ("N", "M", "R", "W"):
        values = getattr(exp.sweep, axis)
        if any(v < 1 for v in values):
            violations.append(
                Violation("BAD_VALUE", f"sweep.{axis}", f"sweep.{axis} values must be ≥ 1")
            )
    for axis, bound in (("R", exp.protocol.R_max), ("W", exp.protocol.W_max)):
        if any(v > bound for v in getattr(exp.sweep, axis)):
            violations.append(
                Violation(
                    f"{axis}_EXCEEDS_{axis}_MAX",
                    f"sweep.{axis}",
                    f"sweep.{axis} exceeds {axis}_max",
                )
            )
    v = exp.validate
    if not 0 < v.confidence < 1:
        violations.append(
            Violation("BAD_VALUE", "validate.confidence", "confidence must be in (0, 1)")
        )
    if v.balance_tol <= 0 or v.latency_rel_tol <= 0:
        violations.append(Violation("BAD_VALUE", "validate", "tolerances must be > 0"))
    if v.oracle_runs < 2 or v.oracle_warmup_bi < 0 or v.oracle_bis <= v.oracle_warmup_bi:
        violations.append(
            Violation(
                "BAD_VALUE",
                "validate",
                "oracle_runs must be ≥ 2 and 0 ≤ oracle_warmup_bi < oracle_bis",
            )
        )
    if violations:
        raise ConfigError(violations)
    return exp


def loads_experiment(text: str) -> Experiment:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([Violation("BAD_VALUE", "file", f"invalid TOML: {exc}")]) from exc
    return check_experiment(experiment_from_dict(data))


def load_experiment(path: str) -> Experiment:
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(
                [Violation("BAD_VALUE", "file", f"invalid TOML in {path}: {exc}")]
            ) from exc
    logger.info("Loaded experiment config %s", path)
    return check_experiment(experiment_from_dict(data))


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    # repr() of a Python float is the shortest round-tripping form and valid TOML.
    return repr(value)


def dumps_experiment(exp: Experiment) -> str:
    lines: list[str] = []
    for section in _SECTIONS:
        obj = getattr(exp, section)
        lines.append(f"[{section}]")
        for f in dataclasses.fields(obj):
            lines.append(f"{f.name} = {_toml_value(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)


def experiment_as_dict(exp: Experiment) -> dict[str, Any]:
    out = dataclasses.asdict(exp)
    for axis, values in out["sweep"].items():
        out["sweep"][axis] = list(values)
    return out


def _resolve_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in _SECTIONS or name not in _field_types(_SECTIONS[section]):
            raise ConfigError([Violation("UNKNOWN_KEY", key, f"unknown key {key}")])
        return section, name
    owners = [s for s, cls in _SECTIONS.items() if key in _field_types(cls)]
    if not owners:
        raise ConfigError([Violation("UNKNOWN_KEY", key, f"unknown key {key}")])
    if len(owners) > 1:
        # N, M, R and W exist both as scalars and as sweep axes.
        owners = [o for o in owners if o != "sweep"]
    return owners[0], key


def parse_override(item: str) -> tuple[str, str, Any]:
    if "=" not in item:
        raise ConfigError(
            [Violation("BAD_VALUE", item, f"override must look like key=value, got {item!r}")]
        )
    key, raw = item.split("=", 1)
    section, name = _resolve_key(key.strip())
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return section, name, value


def apply_overrides(exp: Experiment, overrides: Iterable[str]) -> Experiment:
    data = experiment_as_dict(exp)
    for item in overrides:
        section, name, value = parse_override(item)
        data[section][name] = value
    return check_experiment(experiment_from_dict(data))


def apply_preset(exp: Experiment, preset: str | None) -> Experiment:
    if not preset:
        return exp
    if preset not in PRESETS:
        raise ConfigError(
            [Violation("BAD_VALUE", "preset", f"unknown preset {preset!r}")]
        )
    network = dataclasses.replace(exp.network, **PRESETS[preset])
    return check_experiment(dataclasses.replace(exp, network=network))


GRID_AXES = ("N", "M", "R", "W")


def grid_points(axes: SweepAxes) -> list[dict[str, int]]:
    """Cartesian product of the non-empty axes, N outermost and W innermost."""
    active = [(name, getattr(axes, name)) for name in GRID_AXES if getattr(axes, name)]
    points: list[dict[str, int]] = [{}]
    for name, values in active:
        points = [{**point, name: v} for point in points for v in values]
    return points


def apply_point(
    params: ProtocolParams, net: NetworkConfig, point: dict[str, int]
) -> tuple[ProtocolParams, NetworkConfig]:
    protocol_keys = {k: v for k, v in point.items() if k in ("M", "R", "W")}
    if protocol_keys:
        params = dataclasses.replace(params, **protocol_keys)
    if "N" in point:
        net = dataclasses.replace(net, N=point["N"])
    return params, net
