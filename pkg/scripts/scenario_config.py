"""Plain-text scenario files: parsing, validation and canonical serialisation.

A scenario file has ``[section]`` headers, ``key = value`` lines, ``#`` comments and
comma-separated lists:

    [scenario]
    kind = monte-carlo
    seed = 42
    n_trials = 100000

    [biphoton]
    sigma_coh = 10
    sigma_cor = 0.1

Only keys listed in SCHEMA are accepted. Values are validated against the owning
module's parameter checks at parse time.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from scripts.biphoton import BiphotonParams, InvalidParams
from scripts.channel import (
    BASELINE_POLICIES,
    ChannelParams,
    InvalidTruth,
    TargetTruth,
    check_eta,
    truth_to_channel,
)
from scripts.config import GLM_MAX_PHOTONS
from scripts.glm import InvalidGlmParams
from scripts.gaussian_state import Rep
from scripts.utils import check_seed

logger = logging.getLogger(__name__)

KINDS = (
    "crlb",
    "single-shot",
    "monte-carlo",
    "lossy",
    "baseline",
    "hl-scan",
    "glm-direct",
    "sdc-demo",
    "budget",
)


class ConfigError(ValueError):
    pass


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError, TypeError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class MissingRequired(ConfigError):
    pass


# =============================================================================
#  Value types
# =============================================================================


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _parse_int(text: str) -> int:
    return int(text)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered not in ("true", "false"):
        raise ValueError(f"expected true or false, got {text!r}")
    return lowered == "true"


def _list_of(parse: Callable) -> Callable:
    def parse_list(text: str) -> tuple:
        items = [item.strip() for item in text.split(",") if item.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(parse(item) for item in items)

    return parse_list


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


# =============================================================================
#  Per-key checks
# =============================================================================


def _positive(value):
    if not value > 0:
        raise ValueError(f"must be positive, got {value}")


def _positive_items(values):
    for value in values:
        _positive(value)


def _one_of(options):
    def check(value):
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {value!r}")

    return check


def _glm_photons(values):
    for M in values:
        if not 1 <= M <= GLM_MAX_PHOTONS:
            raise InvalidGlmParams(f"M must lie in [1, {GLM_MAX_PHOTONS}], got {M}")


@dataclass(frozen=True)
class Key:
    parse: Callable
    check: Callable | None = None


SCHEMA: dict[str, dict[str, Key]] = {
    "scenario": {
        "kind": Key(str, _one_of(KINDS)),
        "seed": Key(_parse_int, check_seed),
        "n_trials": Key(_parse_int, _positive),
        "n_episodes": Key(_parse_int, _positive),
        "threads": Key(_parse_int, _positive),
    },
    "biphoton": {
        "sigma_coh": Key(_parse_float, _positive),
        "sigma_cor": Key(_parse_float, _positive),
        "delta_omega": Key(_parse_float),
        "omega_p": Key(_parse_float),
    },
    "channel": {
        "delta_t_s": Key(_parse_float),
        "delta_omega_s": Key(_parse_float),
        "delta_t_i": Key(_parse_float),
        "eta": Key(_parse_float, check_eta),
    },
    "target": {
        "range": Key(_parse_float),
        "radial_velocity": Key(_parse_float),
        "carrier": Key(_parse_float),
        "c": Key(_parse_float, _positive),
    },
    "glm": {
        "M_values": Key(_list_of(_parse_int), _glm_photons),
        "epsilon_fractions": Key(_list_of(_parse_float), _positive_items),
        "T": Key(_parse_float, _positive),
        "W": Key(_parse_float, _positive),
        "width": Key(_parse_float, _positive),
        "delta_t": Key(_parse_float),
        "delta_omega": Key(_parse_float),
        "rep": Key(str, _one_of(tuple(r.value for r in Rep))),
    },
    "baseline": {
        "t0": Key(_parse_float, _positive),
        "policy": Key(str, _one_of(BASELINE_POLICIES)),
    },
    "checks": {
        "enabled": Key(_parse_bool),
        "rms_tolerance": Key(_parse_float, _positive),
        "slope_tolerance": Key(_parse_float, _positive),
        "constant_tolerance": Key(_parse_float, _positive),
    },
}

REQUIRED: dict[str, tuple[tuple[str, str], ...]] = {
    "crlb": (("biphoton", "sigma_coh"), ("biphoton", "sigma_cor")),
    "single-shot": (("biphoton", "sigma_coh"), ("biphoton", "sigma_cor")),
    "monte-carlo": (
        ("biphoton", "sigma_coh"),
        ("biphoton", "sigma_cor"),
        ("scenario", "n_trials"),
    ),
    "lossy": (
        ("biphoton", "sigma_coh"),
        ("biphoton", "sigma_cor"),
        ("channel", "eta"),
        ("scenario", "n_episodes"),
    ),
    "baseline": (("channel", "eta"), ("baseline", "t0"), ("scenario", "n_episodes")),
    "hl-scan": (
        ("glm", "M_values"),
        ("glm", "epsilon_fractions"),
        ("glm", "T"),
        ("glm", "W"),
        ("scenario", "n_trials"),
    ),
    "glm-direct": (
        ("glm", "M_values"),
        ("glm", "epsilon_fractions"),
        ("glm", "width"),
        ("scenario", "n_trials"),
    ),
    "sdc-demo": (),
    "budget": (
        ("biphoton", "sigma_coh"),
        ("biphoton", "sigma_cor"),
        ("channel", "eta"),
        ("scenario", "n_episodes"),
    ),
}


# =============================================================================
#  Config object
# =============================================================================


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``values`` holds only the keys that were written."""

    kind: str
    seed: int
    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def with_overrides(self, **scenario_values) -> "ScenarioConfig":
        """copy with [scenario] keys replaced, e.g. seed or n_trials from flags"""
        values = {section: dict(keys) for section, keys in self.values.items()}
        for key, value in scenario_values.items():
            if value is None:
                continue
            SCHEMA["scenario"][key].check(value)
            values.setdefault("scenario", {})[key] = value
        return ScenarioConfig(values["scenario"]["kind"], values["scenario"]["seed"], values)

    @property
    def n_trials(self) -> int | None:
        return self.get("scenario", "n_trials")

    @property
    def n_episodes(self) -> int | None:
        return self.get("scenario", "n_episodes")

    @property
    def threads(self) -> int:
        return self.get("scenario", "threads", 1)

    def biphoton(self) -> BiphotonParams:
        return BiphotonParams(
            sigma_coh=self.get("biphoton", "sigma_coh"),
            sigma_cor=self.get("biphoton", "sigma_cor"),
            delta_omega=self.get("biphoton", "delta_omega", 0.0),
            omega_p=self.get("biphoton", "omega_p", 0.0),
        )

    def target(self) -> TargetTruth | None:
        if "target" not in self.values:
            return None
        return TargetTruth(
            range_=self.get("target", "range", 0.0),
            radial_velocity=self.get("target", "radial_velocity", 0.0),
            carrier=self.get("target", "carrier", 0.0),
            c=self.get("target", "c", 1.0),
        )

    def channel(self) -> ChannelParams:
        """channel parameters, from [target] when present, else from [channel]"""
        delta_t_i = self.get("channel", "delta_t_i", 0.0)
        eta = self.get("channel", "eta", 1.0)
        truth = self.target()
        if truth is not None:
            return truth_to_channel(truth, delta_t_i, eta)
        return ChannelParams(
            delta_t_s=self.get("channel", "delta_t_s", 0.0),
            delta_omega_s=self.get("channel", "delta_omega_s", 0.0),
            delta_t_i=delta_t_i,
            eta=eta,
        )

    def checks_enabled(self) -> bool:
        return self.get("checks", "enabled", True)


# =============================================================================
#  Parsing
# =============================================================================


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_lines(text: str) -> tuple[dict, dict]:
    """section -> key -> value, and (section, key) -> line number"""
    values: dict[str, dict] = {}
    lines: dict[tuple[str, str], int] = {}
    headers: dict[str, int] = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise UnknownKey(f"line {number}: unknown section [{section}]")
            values.setdefault(section, {})
            headers.setdefault(section, number)
            continue
        if "=" not in line:
            raise ConfigTypeError(f"expected 'key = value', got {raw.strip()!r}", number)
        if section is None:
            raise ConfigTypeError("key outside of any [section]", number)
        key, text_value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise UnknownKey(f"line {number}: unknown key {section}.{key}")
        if key in values[section]:
            raise ConfigTypeError(f"{section}.{key} given twice", number)
        spec = SCHEMA[section][key]
        try:
            value = spec.parse(text_value)
            if spec.check is not None:
                spec.check(value)
        except (ValueError, TypeError) as err:
            raise ConfigTypeError(f"{section}.{key} = {text_value}: {err}", number) from err
        values[section][key] = value
        lines[(section, key)] = number
    _check_target_section(values, lines, headers)
    # an empty section sets nothing and has no canonical form
    for name in [name for name, given in values.items() if not given]:
        logger.debug("dropping empty section [%s]", name)
        del values[name]
    return values, lines


def _check_target_section(values: dict, lines: dict, headers: dict):
    """[target] replaces the signal shifts of [channel], so it must set something
    and must not compete with them."""
    if "target" not in values:
        return
    if not values["target"]:
        raise ConfigTypeError("[target] sets no keys", headers["target"])
    shifts = [key for key in ("delta_t_s", "delta_omega_s") if key in values.get("channel", {})]
    if shifts:
        raise ConfigTypeError(
            f"[target] cannot be combined with channel.{shifts[0]}",
            max(headers["target"], lines[("channel", shifts[0])]),
        )


def _validate_combined(config: ScenarioConfig, lines: dict):
    """Build each module's parameter object so cross-key invariants are checked."""
    builders = []
    if "sigma_coh" in config.values.get("biphoton", {}):
        builders.append(("biphoton", config.biphoton))
    if "target" in config.values or "channel" in config.values:
        builders.append(("target" if "target" in config.values else "channel", config.channel))
    for section, build in builders:
        try:
            build()
        except (InvalidParams, InvalidTruth, ValueError) as err:
            line = min(
                (n for (s, _), n in lines.items() if s == section), default=None
            )
            raise ConfigTypeError(f"[{section}]: {err}", line) from err


def parse_config(text: str) -> ScenarioConfig:
    values, lines = _parse_lines(text)
    scenario = values.get("scenario", {})
    for key in ("kind", "seed"):
        if key not in scenario:
            raise MissingRequired(f"scenario.{key} is required")
    kind = scenario["kind"]
    missing = [
        f"{section}.{key}"
        for section, key in REQUIRED[kind]
        if key not in values.get(section, {})
    ]
    if missing:
        raise MissingRequired(f"{kind} scenarios need {', '.join(missing)}")
    config = ScenarioConfig(kind, scenario["seed"], values)
    _validate_combined(config, lines)
    logger.debug("parsed %s scenario with seed %d", kind, config.seed)
    return config


def read_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as file:
        return parse_config(file.read())


# =============================================================================
#  Canonical form
# =============================================================================


def serialize_config(config: ScenarioConfig) -> str:
    """Sections and keys in schema order, floats in round-trip repr, one blank line
    between sections."""
    blocks = []
    for section, keys in SCHEMA.items():
        given = config.values.get(section)
        if not given:
            continue
        lines = [f"[{section}]"]
        lines += [f"{key} = {_format(given[key])}" for key in keys if key in given]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode("utf-8")).hexdigest()
