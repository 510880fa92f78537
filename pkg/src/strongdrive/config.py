"""Experiment configuration: flat INI sections with a strict key schema.

Every key has a typed default; unknown sections or keys are rejected with
the offending name in the message.  User-facing units are GHz (plain
frequency) and ns; the commands convert to angular units internally.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> tuple[float, ...]:
    items = [x.strip() for x in s.split(",") if x.strip()]
    return tuple(float(x) for x in items)


def _parse_pair_list(s: str) -> tuple[tuple[float, float], ...]:
    """'4:0, 0:4' -> ((4.0, 0.0), (0.0, 4.0))."""
    out = []
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "device": {
        "delta_ghz": (float, 2.288),
        "persistent_current_na": (float, 690.0),
        "t1_ns": (float, 1800.0),
        "t_ramsey_ns": (float, 300.0),
    },
    "solver": {
        "truncation_n": (int, 50),
        "monodromy_steps_per_period": (int, 2000),
        "propagator_step_ns": (float, 0.0),  # 0 -> per-pulse default
        "refine": (_parse_bool, False),
    },
    "quasienergies": {
        "omega_factors": (_parse_float_list, (1.0, 0.6, 1.4)),
        "amp_min_ghz": (float, 0.0),
        "amp_max_ghz": (float, 4.8048),
        "amp_points": (int, 100),
    },
    "rabi": {
        "omega_ghz": (float, 2.288),
        "amp_min_ghz": (float, 0.20),
        "amp_max_ghz": (float, 4.78),
        "amp_points": (int, 12),
        "duration_ns": (float, 50.0),
        "sample_dt_ns": (float, 0.005),
        "window": (str, "hann"),
        "zero_pad_factor": (int, 4),
        "min_prominence": (float, 0.05),
        "n_max": (int, 10),
        "max_freq_ghz": (float, 16.0),
    },
    "tomotrace": {
        "amplitudes_ghz": (_parse_float_list, (0.10, 0.46)),
        "omega_ghz": (float, 2.288),
        "duration_ns": (float, 20.0),
        "sample_dt_ns": (float, 0.005),
    },
    "edges": {
        "amplitude_ghz": (float, 1.33),
        "omega_ghz": (float, 2.288),
        "edge_times_ns": (_parse_float_list, (0.0, 0.5, 1.0, 2.0, 4.0)),
        "asymmetric_pairs_ns": (_parse_pair_list, ((4.0, 0.0), (0.0, 4.0))),
        "duration_ns": (float, 25.0),
        "sample_dt_ns": (float, 0.01),
    },
    "stateprep": {
        "amplitude_ghz": (float, 0.46),
        "min_edge_ns": (float, 0.02),
        "shots": (int, 16384),
        "bootstrap_b": (int, 200),
    },
    "run": {
        "seed": (int, 12345),
        "threads": (int, 1),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration: every schema key bound to a value."""

    values: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    def as_flat_dict(self) -> dict[str, Any]:
        out = {}
        for sec in sorted(self.values):
            for key in sorted(self.values[sec]):
                v = self.values[sec][key]
                if isinstance(v, tuple):
                    v = list(v) if not (v and isinstance(v[0], tuple)) else [list(p) for p in v]
                out[f"{sec}.{key}"] = v
        return out


def default_config() -> ExperimentConfig:
    return ExperimentConfig(
        {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    )


def load_config(path: str | None) -> ExperimentConfig:
    """Defaults overlaid with the INI file at ``path`` (if given)."""
    values = {sec: dict(keys) for sec, keys in default_config().values.items()}
    if path is None:
        return ExperimentConfig(values)
    cp = configparser.ConfigParser(interpolation=None)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(
                f"unknown config section [{sec}] (known: {sorted(SCHEMA)})"
            )
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(
                    f"unknown key '{key}' in section [{sec}] "
                    f"(known: {sorted(SCHEMA[sec])})"
                )
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {sec}.{key}: {raw!r} ({exc})"
                ) from exc
    return ExperimentConfig(values)
