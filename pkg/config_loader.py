#!/usr/bin/env python3
"""
Config Loader
Lab-wide settings (config.json) and per-run configurations

- config.json values of the form "ENV:NAME" are read from the environment
  (a .env file is loaded first)
- run configs name a system, a command and its parameters; every missing
  parameter is filled with its default so the resolved config fully
  determines the run
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

import psutil
from dotenv import load_dotenv

from digit_thinning import parse_target
from lab_errors import ConfigError
from logger_config import get_lab_logger
from moran_system import MoranSystem, SequenceSpec, system_from_dict

logger = get_lab_logger()

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "config.json"


# ==================== LAB SETTINGS ====================

@dataclass
class LabSettings:
    """Limits, tolerances and estimator settings shared by every run"""
    max_level: int = 12
    max_index: int = 100_000
    max_matrix_dim: int = 1024
    validation_depth: int = 64
    thin_depth: int = 200
    converged_tolerance: float = 1e-9
    unitarity_tolerance: float = 1e-9
    headline_fraction: float = 0.25
    entropy_margin: int = 16
    fourier_truncation: int = 40
    output_dir: str = "results"
    threads: int = 1

    def updated(self, overrides: Dict[str, Any], field_path: str = "limits") -> "LabSettings":
        """Copy with overrides applied (type-checked against the defaults)"""
        data = asdict(self)
        for key, value in overrides.items():
            if key not in data:
                raise ConfigError("unknown setting", f"{field_path}.{key}")
            data[key] = _coerce(value, type(data[key]), f"{field_path}.{key}")
        return LabSettings(**data)


def default_threads() -> int:
    """Physical core count, or 1 when psutil cannot tell"""
    return psutil.cpu_count(logical=False) or 1


def resolve_env(value: Any, field_path: str) -> Optional[str]:
    """Resolve an "ENV:NAME" reference; other values pass through"""
    if isinstance(value, str) and value.startswith("ENV:"):
        env_var = value.replace("ENV:", "")
        resolved = os.getenv(env_var)
        if resolved is None:
            logger.debug(f"{env_var} not set for {field_path}")
        return resolved
    return value


def _coerce(value: Any, kind: type, field_path: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"expected an integer, got {value!r}", field_path)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", field_path)
    return value


def load_settings(config_path: Optional[Path] = None) -> LabSettings:
    """
    Load lab settings from config.json

    Args:
        config_path: Settings file (defaults to the config.json next to this module)

    Returns:
        LabSettings; missing keys keep their defaults
    """
    load_dotenv()
    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if not path.exists():
        logger.warning(f"Settings file {path} not found, using defaults")
        return LabSettings(threads=default_threads())

    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}")

    flat: Dict[str, Any] = {}
    for section in ("limits", "tolerances", "estimators", "output"):
        values = raw.get(section, {})
        if not isinstance(values, dict):
            raise ConfigError("expected an object", section)
        for key, value in values.items():
            flat[key] = (section, value)
    if "threads" in raw:
        flat["threads"] = ("threads", raw["threads"])

    data: Dict[str, Any] = {}
    defaults = LabSettings()
    known = {f.name for f in fields(LabSettings)}
    for key, (section, value) in flat.items():
        field_path = key if section == key else f"{section}.{key}"
        if key not in known:
            raise ConfigError("unknown setting", field_path)
        value = resolve_env(value, field_path)
        if value is None:
            continue
        data[key] = _coerce(value, type(getattr(defaults, key)), field_path)

    if "threads" not in data:
        data["threads"] = default_threads()
    if data["threads"] < 1:
        raise ConfigError("must be >= 1", "threads")

    settings = LabSettings(**data)
    logger.debug(f"Loaded settings from {path}: {settings}")
    return settings


# ==================== RUN CONFIGS ====================

COMMANDS = (
    "dims", "spectrum-gen", "spectrum-verify", "dim-beurling",
    "dim-entropy", "fourier-probe", "ims",
)

SPECTRUM_KINDS = ("canonical", "lacunary", "intermediate", "signword", "continuum", "dimension")
VERIFY_CHECKS = ("orthogonality", "unitarity", "completeness", "separation", "tree-mapping", "all")

# Shared spectrum selection; None means "not set"
_SPECTRUM_PARAMS: Dict[str, Any] = {
    "kind": "canonical",
    "t": None,
    "signs": [1],
    "bits": "",
    "seed": None,
    "level": None,
    "max_index": None,
}

_PARAMETERS: Dict[str, Dict[str, Any]] = {
    "dims": {"depth": None},
    "spectrum-gen": dict(_SPECTRUM_PARAMS),
    "spectrum-verify": dict(_SPECTRUM_PARAMS, check="orthogonality", xi=[0.0, 0.37],
                            K=None, tree_depth=6),
    "dim-beurling": dict(_SPECTRUM_PARAMS, scales="natural", max_scales=48),
    "dim-entropy": {"level": 12, "dyadic_levels": [4, 8, 12, 16]},
    "fourier-probe": {"kmax": 20, "K_extra": 30},
    "ims": {"n": None, "m": None, "t": None, "depth": 8},
}


@dataclass
class RunConfig:
    """Fully resolved run: system, command, parameters and limits"""
    command: str
    system_data: Optional[Dict[str, Any]]
    parameters: Dict[str, Any]
    limits: LabSettings
    system: Optional[MoranSystem] = field(default=None, repr=False, compare=False)

    def resolved(self) -> Dict[str, Any]:
        """Echo of the resolved config; also the input of the run hash"""
        limits = asdict(self.limits)
        # Thread count and output location never change results
        limits.pop("threads")
        limits.pop("output_dir")
        return {
            "command": self.command,
            "system": self.system_data,
            "parameters": self.parameters,
            "limits": limits,
        }


def _check_spectrum_params(params: Dict[str, Any], settings: LabSettings):
    kind = params["kind"]
    if kind not in SPECTRUM_KINDS:
        raise ConfigError(f"expected one of {', '.join(SPECTRUM_KINDS)}", "parameters.kind")
    if kind in ("intermediate", "continuum", "dimension"):
        if params["t"] is None:
            raise ConfigError(f"kind {kind} needs a target dimension", "parameters.t")
        if not (kind == "dimension" and str(params["t"]).strip().lower() == "ue"):
            params["t"] = str(parse_target(params["t"]))
    if kind == "signword":
        signs = params["signs"]
        if not isinstance(signs, list) or not signs or any(s not in (1, -1) for s in signs):
            raise ConfigError("expected a nonempty list of +1/-1", "parameters.signs")
    if kind == "continuum":
        if not isinstance(params["bits"], str) or any(ch not in "01" for ch in params["bits"]):
            raise ConfigError("expected a string of 0 and 1", "parameters.bits")
    if params["seed"] is not None and not isinstance(params["seed"], int):
        raise ConfigError("expected an integer", "parameters.seed")

    level, max_index = params["level"], params["max_index"]
    if level is not None and not 1 <= level <= settings.max_level:
        raise ConfigError(f"must be in 1..{settings.max_level}", "parameters.level")
    if max_index is not None and not 1 <= max_index <= settings.max_index:
        raise ConfigError(f"must be in 1..{settings.max_index}", "parameters.max_index")
    if level is None and max_index is None:
        if kind in ("canonical", "signword"):
            params["level"] = 8
        else:
            params["max_index"] = 2000


def _check_parameters(command: str, params: Dict[str, Any], settings: LabSettings):
    if command in ("spectrum-gen", "spectrum-verify", "dim-beurling"):
        _check_spectrum_params(params, settings)
    if command == "dims" and params["depth"] is None:
        params["depth"] = settings.validation_depth
    if command == "spectrum-verify":
        if params["check"] not in VERIFY_CHECKS:
            raise ConfigError(f"expected one of {', '.join(VERIFY_CHECKS)}", "parameters.check")
        if params["K"] is None:
            params["K"] = settings.fourier_truncation
        if not all(isinstance(x, (int, float)) and 0 <= x < 1 for x in params["xi"]):
            raise ConfigError("xi samples must lie in [0, 1)", "parameters.xi")
    if command == "dim-beurling":
        scales = params["scales"]
        if not (scales in ("natural", "dyadic") or
                (isinstance(scales, list) and all(isinstance(h, int) for h in scales))):
            raise ConfigError("expected natural, dyadic or a list of integers", "parameters.scales")
    if command == "dim-entropy":
        if not 1 <= params["level"] <= settings.max_level:
            raise ConfigError(f"must be in 1..{settings.max_level}", "parameters.level")
    if command == "fourier-probe" and params["kmax"] < 1:
        raise ConfigError("must be >= 1", "parameters.kmax")
    if command == "ims":
        for key in ("n", "m", "t"):
            if params[key] is None:
                raise ConfigError("missing required field", f"parameters.{key}")
            # Validate now; the resolved form is the normalized dict
            params[key] = SequenceSpec.from_dict(params[key], f"parameters.{key}").to_dict()


def build_run_config(data: Dict[str, Any], settings: Optional[LabSettings] = None) -> RunConfig:
    """
    Validate a run config object and fill in every default

    Args:
        data: {system?, command, parameters?, limits?}
        settings: Lab settings (loaded from config.json when omitted)

    Returns:
        RunConfig with the system built and validated

    Raises:
        ConfigError: schema problems, with the field path
        ValidationError: the system itself is invalid
    """
    if not isinstance(data, dict):
        raise ConfigError("run config must be a JSON object")
    settings = settings or load_settings()

    unknown = set(data) - {"system", "command", "parameters", "limits"}
    if unknown:
        raise ConfigError("unknown field", sorted(unknown)[0])

    command = data.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"expected one of {', '.join(COMMANDS)}, got {command!r}", "command")

    limits = data.get("limits", {})
    if not isinstance(limits, dict):
        raise ConfigError("expected an object", "limits")
    settings = settings.updated(limits)

    raw_params = data.get("parameters", {})
    if not isinstance(raw_params, dict):
        raise ConfigError("expected an object", "parameters")
    defaults = _PARAMETERS[command]
    for key in raw_params:
        if key not in defaults:
            raise ConfigError(f"not a parameter of {command}", f"parameters.{key}")
    params = {key: raw_params.get(key, default) for key, default in defaults.items()}
    _check_parameters(command, params, settings)

    system = None
    system_data = data.get("system")
    if command != "ims":
        if system_data is None:
            raise ConfigError("missing required field", "system")
        system = system_from_dict(system_data, depth=settings.validation_depth)
        system_data = system.to_dict() if "preset" not in system_data else dict(system_data)

    return RunConfig(command, system_data, params, settings, system)


def parse_config(path: str, settings: Optional[LabSettings] = None) -> RunConfig:
    """
    Read and validate a run config file

    Args:
        path: JSON run config
        settings: Lab settings (loaded from config.json when omitted)

    Returns:
        RunConfig
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found at {config_path}")
    try:
        with open(config_path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {config_path}: {e}")

    config = build_run_config(data, settings)
    logger.info(f"Parsed {config_path}: command {config.command}")
    return config
