"""Configuration: defaults, INI file, environment and flag overrides.

Resolution order (later wins): built-in defaults, config file sections,
environment variables prefixed ``DCFLEX_<SECTION>_<KEY>``, command-line
flags. The fully resolved configuration is echoed into every output
artifact for reproducibility.
"""

from __future__ import annotations

import configparser
import copy
import os

from .model import (
    DEVICE_PREEMPT_OVERHEAD_MIN,
    DataCenterSpec,
    EconParams,
    TimeGrid,
)
from .problem import DqParams
from .solve import SolverBackend

ENV_PREFIX = "DCFLEX"

DEFAULTS = {
    "grid": {
        "step_minutes": 15.0,
        "horizon_steps": 960,
        "origin": 0.0,
    },
    "datacenter": {
        "total_resources": 100.0,
        "unit_power_kw": 1.0,       # nominal G
        "fixed_power_kw": 0.0,      # nominal G0
        "device_class": "gpu_ai",
        "preempt_overhead_min": -1.0,  # <0: per-device-class default
        "preempt_budget_frac": 0.01,
        "max_delay_frac": 0.2,
    },
    "econ": {
        "price_reduction_coeff": 0.5,
        "hourly_unit_price": 1.0,
        "energy_price": 0.05,
    },
    "nominal": {
        "price_reduction_coeff": 0.5,
        "hourly_unit_price": 1.0,
        "energy_price": 0.05,
        "unit_power_kw": 1.0,
        "fixed_power_kw": 0.0,
    },
    "campaign": {
        "durations_hours": "0.25,0.5,1,2,4",
        "frequencies": "365,730,1460,2920",
        "delays": "0.1,0.2,0.5",
        "fractions": "0.25,0.5,0.75,1.0",
        "clusters_per_day": 100,
        "aggregate": True,
        "master_seed": 0,
        "workers": 0,  # 0: one worker per available core
    },
    "dq": {
        "enabled": False,
        "speedup": 0.5,
    },
    "solver": {
        "mip_rel_gap": 1e-4,
        "time_limit_s": 600.0,
    },
    "ingest": {
        "currency_rate": 1.0,
        "currency": "USD",
        "trim_frac": 0.5,
        "allowed_days": "40,60,80",
    },
}


def _coerce(default, text: str):
    if isinstance(default, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def load_config(path=None, overrides=None, env=None) -> dict:
    """Resolve the configuration dictionary.

    overrides maps ("section", "key") to already-typed values; env defaults
    to os.environ.
    """
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(str(path))
        if not read:
            raise FileNotFoundError(f"config file {path} not found")
        for section in parser.sections():
            if section not in config:
                raise ValueError(f"unknown config section [{section}]")
            for key, text in parser.items(section):
                if key not in config[section]:
                    raise ValueError(f"unknown config key {key!r} in [{section}]")
                config[section][key] = _coerce(config[section][key], text)
    env = os.environ if env is None else env
    for section, keys in config.items():
        for key in keys:
            env_name = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if env_name in env:
                config[section][key] = _coerce(config[section][key], env[env_name])
    for (section, key), value in (overrides or {}).items():
        if value is None:
            continue
        config[section][key] = value
    return config


def parse_float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(part) for part in str(text).split(",") if part.strip()]


def grid_from_config(config: dict) -> TimeGrid:
    g = config["grid"]
    return TimeGrid(step_minutes=g["step_minutes"], steps=int(g["horizon_steps"]),
                    origin=g["origin"])


def spec_from_config(config: dict) -> DataCenterSpec:
    d = config["datacenter"]
    overhead = d["preempt_overhead_min"]
    if overhead < 0:
        overhead = DEVICE_PREEMPT_OVERHEAD_MIN[d["device_class"]]
    return DataCenterSpec(
        total_resources=d["total_resources"],
        unit_power_kw=d["unit_power_kw"],
        fixed_power_kw=d["fixed_power_kw"],
        preempt_overhead_min=overhead,
        preempt_budget_frac=d["preempt_budget_frac"],
        max_delay_frac=d["max_delay_frac"],
        device_class=d["device_class"],
    )


def econ_from_config(config: dict, section: str = "econ") -> EconParams:
    e = config[section]
    return EconParams(
        price_reduction_coeff=e["price_reduction_coeff"],
        hourly_unit_price=e["hourly_unit_price"],
        energy_price=e["energy_price"],
    )


def dq_from_config(config: dict) -> DqParams:
    d = config["dq"]
    return DqParams(enabled=bool(d["enabled"]), speedup=d["speedup"])


def backend_from_config(config: dict) -> SolverBackend:
    s = config["solver"]
    return SolverBackend(mip_rel_gap=s["mip_rel_gap"], time_limit_s=s["time_limit_s"])


def resolve_workers(value) -> int:
    value = int(value or 0)
    if value > 0:
        return value
    return os.cpu_count() or 1
