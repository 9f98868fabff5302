"""Sweep configuration files.

YAML with three optional sections; every key is optional and an empty (or
absent) file reproduces the default experiment grid.  Unknown keys are
rejected rather than ignored.  The full schema, with defaults:

.. code-block:: yaml

    system:
      expected_node_count: 30      # mean number of nodes in the cell
      departure_rate: 1.0          # per-node departure rate (arrival rate matches)
      request_rate_per_node: 0.02
      t_ref: 1.0                   # whole-file BS delay; t_bs = t_ref / k
    sweep:
      codes: [[1, 1], [2, 1], [4, 2], [8, 4]]
      ratios: [10, 100, 1000]      # t_bs / t_d per figure
      delta_grid:                  # either log grid ...
        kind: log
        start: 0.01
        stop: 100.0
        count: 25
      # delta_grid: {kind: explicit, values: [0.1, 1.0]}   # ... or explicit
      engine: analytic             # analytic | simulate | both
    simulation:
      num_requests: 100000
      warmup_requests: null        # null -> 10% of num_requests, at least 1000
      mode: faithful               # faithful | physical
      request_model: null          # aggregate-poisson | per-node | null (per mode)
      seed: 20250101
"""

from __future__ import annotations

import copy
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .simulate import RequestModel, SimMode
from .sweep import DEFAULT_CODES, DEFAULT_RATIOS, SweepSpec, default_delta_grid

_SECTIONS = {
    "system": ("expected_node_count", "departure_rate", "request_rate_per_node", "t_ref"),
    "sweep": ("codes", "ratios", "delta_grid", "engine"),
    "simulation": ("num_requests", "warmup_requests", "mode", "request_model", "seed"),
}
_GRID_KEYS = {"log": ("kind", "start", "stop", "count"), "explicit": ("kind", "values")}


def load_raw(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(data).__name__}")
    return data


def merge_overrides(raw: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict:
    """Overlay nested override values (flags beat file values beat defaults)."""
    merged = copy.deepcopy(dict(raw))
    for section, values in overrides.items():
        target = merged.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigError(f"section '{section}' must be a mapping")
        target.update(values)
    return merged


def _check_keys(mapping: Mapping[str, Any], allowed: tuple[str, ...], where: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where} (allowed: {', '.join(allowed)})")


def _number(section: Mapping[str, Any], key: str, default: float, where: str) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _integer(section: Mapping[str, Any], key: str, default: int, where: str) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return value


def _deltas_from_grid(grid: Any) -> tuple[float, ...]:
    if grid is None:
        return default_delta_grid()
    if not isinstance(grid, Mapping):
        raise ConfigError("sweep.delta_grid must be a mapping")
    kind = grid.get("kind", "log")
    if kind not in _GRID_KEYS:
        raise ConfigError(f"sweep.delta_grid.kind must be 'log' or 'explicit', got {kind!r}")
    _check_keys(grid, _GRID_KEYS[kind], "sweep.delta_grid")
    if kind == "explicit":
        values = grid.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.delta_grid.values must be a nonempty list")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError(f"sweep.delta_grid.values entries must be > 0, got {v!r}")
        return tuple(float(v) for v in values)
    return default_delta_grid(
        count=_integer(grid, "count", 25, "sweep.delta_grid"),
        start=_number(grid, "start", 1e-2, "sweep.delta_grid"),
        stop=_number(grid, "stop", 1e2, "sweep.delta_grid"),
    )


def _codes(section: Mapping[str, Any]) -> tuple[tuple[int, int], ...]:
    raw = section.get("codes")
    if raw is None:
        return DEFAULT_CODES
    if not isinstance(raw, list) or not raw:
        raise ConfigError("sweep.codes must be a nonempty list of [n, k] pairs")
    codes = []
    for entry in raw:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in entry)
        ):
            raise ConfigError(f"sweep.codes entry {entry!r} must be an [n, k] integer pair")
        n, k = entry
        if not 1 <= k <= n:
            raise ConfigError(f"sweep.codes entry [{n}, {k}] violates 1 <= k <= n")
        codes.append((n, k))
    return tuple(codes)


def _enum(section: Mapping[str, Any], key: str, enum_cls, default, where: str):
    value = section.get(key)
    if value is None:
        return default
    try:
        return enum_cls(value)
    except ValueError:
        options = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{where}.{key} must be one of: {options}; got {value!r}") from None


def build_spec(raw: Mapping[str, Any]) -> SweepSpec:
    """Validate a raw config mapping and produce the sweep specification."""
    _check_keys(raw, tuple(_SECTIONS), "top level")
    system = raw.get("system") or {}
    sweep = raw.get("sweep") or {}
    simulation = raw.get("simulation") or {}
    for name, section in (("system", system), ("sweep", sweep), ("simulation", simulation)):
        if not isinstance(section, Mapping):
            raise ConfigError(f"section '{name}' must be a mapping")
        _check_keys(section, _SECTIONS[name], f"section '{name}'")

    ratios_raw = sweep.get("ratios")
    if ratios_raw is None:
        ratios: tuple[float, ...] = DEFAULT_RATIOS
    else:
        if not isinstance(ratios_raw, list) or not ratios_raw:
            raise ConfigError("sweep.ratios must be a nonempty list of numbers")
        for v in ratios_raw:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError(f"sweep.ratios entries must be > 0, got {v!r}")
        ratios = tuple(float(v) for v in ratios_raw)

    engine = sweep.get("engine", "analytic")
    if not isinstance(engine, str):
        raise ConfigError(f"sweep.engine must be a string, got {engine!r}")

    warmup = simulation.get("warmup_requests")
    if warmup is not None:
        warmup = _integer(simulation, "warmup_requests", 0, "simulation")

    return SweepSpec(
        m=_number(system, "expected_node_count", 30.0, "system"),
        mu=_number(system, "departure_rate", 1.0, "system"),
        omega=_number(system, "request_rate_per_node", 0.02, "system"),
        t_ref=_number(system, "t_ref", 1.0, "system"),
        codes=_codes(sweep),
        deltas=_deltas_from_grid(sweep.get("delta_grid")),
        ratios=ratios,
        engine=engine,
        mode=_enum(simulation, "mode", SimMode, SimMode.FAITHFUL, "simulation"),
        request_model=_enum(simulation, "request_model", RequestModel, None, "simulation"),
        num_requests=_integer(simulation, "num_requests", 100_000, "simulation"),
        warmup_requests=warmup,
        seed=_integer(simulation, "seed", 20250101, "simulation"),
    )


def parse_config(path: str) -> SweepSpec:
    """Load, strictly validate, and default-fill a sweep configuration file."""
    return build_spec(load_raw(path))
