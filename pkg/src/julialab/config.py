"""Experiment configuration: one JSON file per experiment, strictly validated.

Unknown keys are rejected with the offending path, numeric fields are
range-checked, and CLI flags may override seed/workers/output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .rational_map import RationalMap


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _get(obj: dict, key: str, path: str, kind, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}: required field missing")
        return default
    val = obj[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _require_range(value, lo, hi, path):
    if not (lo <= value <= hi):
        raise ConfigError(f"{path}: value {value} outside [{lo}, {hi}]")
    return value


@dataclass(frozen=True)
class SamplerConfig:
    count: int = 100_000
    burn_in: int = 60
    seed: int = 0
    start: complex | None = None


@dataclass(frozen=True)
class ScheduleConfig:
    r0: float = 0.5
    k_max: int = 14


@dataclass(frozen=True)
class RecurrenceConfig:
    n_max: int = 10_000_000
    probes: int = 20
    tol: float = 0.15
    statistic: str = "mean-return"
    periodic_probes: tuple = ()
    pass_fraction_min: float = 0.9


@dataclass(frozen=True)
class ThermoConfig:
    period_n: int = 10
    s_bracket: tuple[float, float] = (0.0, 2.0)
    tol: float = 1e-4
    local_dimension_probes: int = 20
    consistency_tol: float = 0.05


@dataclass(frozen=True)
class CovarianceConfig:
    observable: str = "sawtooth"
    n_range: tuple[int, int] = (1, 12)
    length: int = 4_000_000
    expected_class: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    map: RationalMap
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    recurrence: RecurrenceConfig = field(default_factory=RecurrenceConfig)
    thermo: ThermoConfig = field(default_factory=ThermoConfig)
    covariance: CovarianceConfig = field(default_factory=CovarianceConfig)
    output: str | None = None


_TOP_KEYS = {"map", "sampler", "schedule", "recurrence", "thermo", "covariance", "output"}


def _parse_point(val, path) -> complex:
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)):
        raise ConfigError(f"{path}: expected [re, im]")
    return complex(val[0], val[1])


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    _check_keys(data, _TOP_KEYS, "top level")
    if "map" not in data:
        raise ConfigError("top level: required section 'map' missing")
    map_obj = data["map"]
    if not isinstance(map_obj, dict):
        raise ConfigError("map: expected an object")
    _check_keys(map_obj, {"numerator", "denominator"}, "map")
    try:
        rmap = RationalMap.from_json_dict(map_obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"map: {exc}") from exc

    s = data.get("sampler", {})
    _check_keys(s, {"count", "burn_in", "seed", "start"}, "sampler")
    sampler = SamplerConfig(
        count=_require_range(_get(s, "count", "sampler", int, 100_000), 1, 10 ** 8, "sampler.count"),
        burn_in=_require_range(_get(s, "burn_in", "sampler", int, 60), 1, 10 ** 4, "sampler.burn_in"),
        seed=_require_range(_get(s, "seed", "sampler", int, 0), 0, 2 ** 63 - 1, "sampler.seed"),
        start=_parse_point(s["start"], "sampler.start") if "start" in s else None,
    )

    sc = data.get("schedule", {})
    _check_keys(sc, {"r0", "k_max"}, "schedule")
    schedule = ScheduleConfig(
        r0=_require_range(_get(sc, "r0", "schedule", float, 0.5), 1e-9, 1e3, "schedule.r0"),
        k_max=_require_range(_get(sc, "k_max", "schedule", int, 14), 1, 40, "schedule.k_max"),
    )

    rc = data.get("recurrence", {})
    _check_keys(
        rc,
        {"n_max", "probes", "tol", "statistic", "periodic_probes", "pass_fraction_min"},
        "recurrence",
    )
    statistic = _get(rc, "statistic", "recurrence", str, "mean-return")
    if statistic not in ("mean-return", "first-return"):
        raise ConfigError(f"recurrence.statistic: unknown statistic {statistic!r}")
    periodic_probes = tuple(
        _parse_point(p, f"recurrence.periodic_probes[{i}]")
        for i, p in enumerate(rc.get("periodic_probes", []))
    )
    recurrence = RecurrenceConfig(
        n_max=_require_range(_get(rc, "n_max", "recurrence", int, 10_000_000), 1, 10 ** 9, "recurrence.n_max"),
        probes=_require_range(_get(rc, "probes", "recurrence", int, 20), 1, 10 ** 4, "recurrence.probes"),
        tol=_require_range(_get(rc, "tol", "recurrence", float, 0.15), 0.0, 10.0, "recurrence.tol"),
        statistic=statistic,
        periodic_probes=periodic_probes,
        pass_fraction_min=_require_range(
            _get(rc, "pass_fraction_min", "recurrence", float, 0.9), 0.0, 1.0, "recurrence.pass_fraction_min"
        ),
    )

    tc = data.get("thermo", {})
    _check_keys(
        tc, {"period_n", "s_bracket", "tol", "local_dimension_probes", "consistency_tol"}, "thermo"
    )
    bracket = tc.get("s_bracket", [0.0, 2.0])
    if not (isinstance(bracket, list) and len(bracket) == 2):
        raise ConfigError("thermo.s_bracket: expected [lo, hi]")
    thermo = ThermoConfig(
        period_n=_require_range(_get(tc, "period_n", "thermo", int, 10), 1, 20, "thermo.period_n"),
        s_bracket=(float(bracket[0]), float(bracket[1])),
        tol=_require_range(_get(tc, "tol", "thermo", float, 1e-4), 1e-12, 1.0, "thermo.tol"),
        local_dimension_probes=_require_range(
            _get(tc, "local_dimension_probes", "thermo", int, 20), 1, 10 ** 4, "thermo.local_dimension_probes"
        ),
        consistency_tol=_require_range(
            _get(tc, "consistency_tol", "thermo", float, 0.05), 0.0, 1.0, "thermo.consistency_tol"
        ),
    )

    cc = data.get("covariance", {})
    _check_keys(cc, {"observable", "n_range", "length", "expected_class"}, "covariance")
    n_range = cc.get("n_range", [1, 12])
    if not (isinstance(n_range, list) and len(n_range) == 2 and all(isinstance(x, int) for x in n_range)):
        raise ConfigError("covariance.n_range: expected [lo, hi] integers")
    expected = cc.get("expected_class")
    if expected is not None and expected not in ("polynomial", "super-polynomial", "inconclusive"):
        raise ConfigError(f"covariance.expected_class: unknown class {expected!r}")
    covariance = CovarianceConfig(
        observable=_get(cc, "observable", "covariance", str, "sawtooth"),
        n_range=(n_range[0], n_range[1]),
        length=_require_range(_get(cc, "length", "covariance", int, 4_000_000), 10 ** 4, 10 ** 9, "covariance.length"),
        expected_class=expected,
    )

    output = _get(data, "output", "top level", str, None)
    return ExperimentConfig(
        map=rmap,
        sampler=sampler,
        schedule=schedule,
        recurrence=recurrence,
        thermo=thermo,
        covariance=covariance,
        output=output,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return parse_config(data)
