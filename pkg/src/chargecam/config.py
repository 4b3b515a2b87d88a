"""Run configuration: defaults, config-file parsing, and provenance hashing.

The config file format is deliberately flat: one `section.key = value` pair
per line, '#' comments, no nesting.  Precedence is CLI flag over config
file over built-in default.  Every output artifact records a short hash of
the effective configuration so reports can be traced back to their inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .array_model import ArrayConfig, NoiseModel
from .genome import ErrorProfile
from .strategies import HdacParams, TasrParams


class ConfigError(ValueError):
    """Raised for unknown keys or unparseable values."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    """Every tunable in one place, defaulting to the reference design point."""

    # array geometry and supply
    array_rows: int = 256
    array_cells: int = 256
    array_vdd: float = 1.2
    array_count: int = 512
    # matchline noise
    noise_mode: str = "gaussian_formula"
    noise_mu_c: float = 2e-15
    noise_sigma_over_mu: float = 0.014
    noise_resample: str = "per_array_instance"
    # error profile: a named condition, individually overridable
    run_condition: str = "A"
    errors_e_s: float | None = None
    errors_e_i: float | None = None
    errors_e_d: float | None = None
    # correction strategies
    hdac_alpha: float = 200.0
    hdac_beta: float = 0.5
    hdac_disable_threshold: float = 0.01
    hdac_enabled: bool = True
    tasr_n_rotations: int = 2
    tasr_gamma: float = 2e-4
    tasr_direction: str = "both"
    # dataset shape
    dataset_segments: int = 2048
    dataset_reads: int = 1024
    dataset_read_length: int = 256
    dataset_aligned: bool = True
    # reproducibility
    run_seed: int = 0

    def array_config(self) -> ArrayConfig:
        return ArrayConfig(
            rows=self.array_rows,
            cells=self.array_cells,
            vdd=self.array_vdd,
            array_count=self.array_count,
        )

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            mu_c=self.noise_mu_c,
            sigma_over_mu=self.noise_sigma_over_mu,
            mode=self.noise_mode,
            resample=self.noise_resample,
        )

    def error_profile(self) -> ErrorProfile:
        base = ErrorProfile.for_condition(self.run_condition)
        return ErrorProfile(
            e_s=self.errors_e_s if self.errors_e_s is not None else base.e_s,
            e_i=self.errors_e_i if self.errors_e_i is not None else base.e_i,
            e_d=self.errors_e_d if self.errors_e_d is not None else base.e_d,
        )

    def hdac_params(self) -> HdacParams:
        return HdacParams(
            alpha=self.hdac_alpha,
            beta=self.hdac_beta,
            disable_threshold=self.hdac_disable_threshold,
            enabled=self.hdac_enabled,
        )

    def tasr_params(self) -> TasrParams:
        return TasrParams(
            n_rotations=self.tasr_n_rotations,
            gamma=self.tasr_gamma,
            direction=self.tasr_direction,
        )

    def canonical_text(self) -> str:
        """Stable `key = value` rendering of the effective configuration."""
        lines = []
        for key in sorted(KEY_TO_FIELD):
            attr, _ = KEY_TO_FIELD[key]
            value = getattr(self, attr)
            if value is None:
                continue
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def _field_types() -> dict[str, type]:
    types = {}
    for f in fields(RunConfig):
        t = f.type
        if t in ("int", int):
            types[f.name] = int
        elif t in ("float", float, "float | None"):
            types[f.name] = float
        elif t in ("bool", bool):
            types[f.name] = bool
        else:
            types[f.name] = str
    return types


_TYPES = _field_types()

# Config-file key -> (RunConfig attribute, parser).
KEY_TO_FIELD: dict[str, tuple[str, object]] = {}
for _f in fields(RunConfig):
    _section, _, _rest = _f.name.partition("_")
    _key = f"{_section}.{_rest}"
    _parser = _parse_bool if _TYPES[_f.name] is bool else _TYPES[_f.name]
    KEY_TO_FIELD[_key] = (_f.name, _parser)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw key/value pairs from config text; values stay unparsed strings."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key = key.strip()
        if key not in KEY_TO_FIELD:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def load_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    return parse_config_text(path.read_text(), source=str(path))


def apply_values(config: RunConfig, values: dict[str, str], source: str = "<config>") -> RunConfig:
    """Coerce and set raw string values onto a RunConfig in place."""
    for key, raw in values.items():
        if key not in KEY_TO_FIELD:
            raise ConfigError(f"{source}: unknown config key {key!r}")
        attr, parser = KEY_TO_FIELD[key]
        try:
            setattr(config, attr, parser(raw))
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key}: {exc}") from None
    return config


def build_config(
    file_path: str | Path | None = None,
    overrides: dict[str, str] | None = None,
) -> RunConfig:
    """Defaults, then config file, then explicit overrides (CLI flags)."""
    config = RunConfig()
    if file_path is not None:
        apply_values(config, load_config_file(file_path), source=str(file_path))
    if overrides:
        apply_values(config, overrides, source="<cli>")
    return config
