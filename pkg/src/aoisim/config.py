"""Experiment configuration: a small line-oriented key = value format.

Values arrive in operator units (dB, dBm) and are converted to linear units
here, exactly once, at the parsing boundary; everything downstream is linear.
Unset keys fall back to the defaults below.  A sweep definition is the one
mandatory ingredient.

Recognized keys::

    sweep = arrival_rate | density | observation_radius
    values = 0.05 0.1 0.15 0.2          # sweep points, whitespace separated
    policies = empty, disk:100, nearest # ignored for observation_radius sweeps
    alpha = 3.8                         # path-loss exponent (> 2)
    threshold_db = 0                    # SINR decoding threshold
    tx_power_dbm = 23.7
    noise_dbm = -90
    link_distance = 25                  # meters
    density = 1e-4                      # transmitters per square meter
    arrival_rate = 0.2                  # packets per slot, in (0, 1]
    side = 2000                         # region side, meters
    boundary = torus | free:<margin>
    horizon = 20000                     # slots
    realizations = 20
    warmup_fraction = 0.1
    mode = actual | dominant
    fading = marginal | explicit
    seed = 1
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .channel import ChannelParams
from .engine import Mode, SimConfig
from .geometry import Boundary, RegionSpec, StoppingSet, StoppingSetSpec


class ConfigError(Exception):
    """Malformed configuration; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SweepVariable(Enum):
    ARRIVAL_RATE = "arrival_rate"
    DENSITY = "density"
    OBSERVATION_RADIUS = "observation_radius"


@dataclass
class ExperimentSpec:
    """A parsed configuration: base simulation plus the sweep to run."""

    base: SimConfig
    sweep: SweepVariable
    values: list
    policies: list


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def snr_from_dbm(tx_power_dbm: float, noise_dbm: float) -> float:
    """Transmit power over noise power, linear, from dBm figures."""
    return db_to_linear(tx_power_dbm - noise_dbm)


_DEFAULTS = {
    "alpha": 3.8,
    "threshold_db": 0.0,
    "tx_power_dbm": 23.7,
    "noise_dbm": -90.0,
    "link_distance": 25.0,
    "density": 1e-4,
    "arrival_rate": 0.2,
    "side": 2000.0,
    "boundary": "torus",
    "horizon": 20000,
    "realizations": 20,
    "warmup_fraction": 0.1,
    "mode": "actual",
    "fading": "marginal",
    "seed": 1,
    "policies": "empty",
}

_FLOAT_KEYS = {"alpha", "threshold_db", "tx_power_dbm", "noise_dbm", "link_distance",
               "density", "arrival_rate", "side", "warmup_fraction"}
_INT_KEYS = {"horizon", "realizations", "seed"}
_STR_KEYS = {"boundary", "mode", "fading", "sweep", "values", "policies"}


def parse_policy_label(label: str) -> StoppingSetSpec:
    label = label.strip()
    if label == "empty":
        return StoppingSetSpec.empty()
    if label == "nearest":
        return StoppingSetSpec.nearest_receiver()
    if label.startswith("disk:"):
        try:
            radius = float(label.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad disk radius in policy {label!r}")
        return StoppingSetSpec.fixed_disk(radius)
    raise ValueError(f"unknown policy {label!r} (expected empty, disk:<radius>, or nearest)")


def _parse_region(text: str) -> tuple[Boundary, float]:
    if text == "torus":
        return Boundary.TORUS, 0.0
    if text == "free":
        return Boundary.FREE_PLANE, 0.0
    if text.startswith("free:"):
        return Boundary.FREE_PLANE, float(text.split(":", 1)[1])
    raise ValueError(f"unknown boundary {text!r} (expected torus or free:<margin>)")


def parse_config(text: str) -> ExperimentSpec:
    """Parse a configuration document into an ExperimentSpec.

    Raises ConfigError with the line number for unknown keys, malformed
    values, out-of-range parameters, and a missing sweep definition.
    """
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        raw[key] = value
        lines[key] = lineno

    def get(key: str):
        value = raw.get(key, _DEFAULTS.get(key))
        if isinstance(value, str) and key in _FLOAT_KEYS | _INT_KEYS:
            caster = float if key in _FLOAT_KEYS else int
            try:
                return caster(value)
            except ValueError:
                raise ConfigError(f"{key} must be a {caster.__name__}, got {value!r}",
                                  lines.get(key))
        return value

    def fail(key: str, message: str):
        raise ConfigError(message, lines.get(key))

    alpha = get("alpha")
    if alpha <= 2:
        fail("alpha", f"path-loss exponent must exceed 2 (far-field interference "
                      f"diverges otherwise), got {alpha}")
    arrival = get("arrival_rate")
    if not 0 < arrival <= 1:
        fail("arrival_rate", f"arrival_rate must lie in (0, 1], got {arrival}")
    density = get("density")
    if density <= 0:
        fail("density", f"density must be positive, got {density}")
    link_distance = get("link_distance")
    if link_distance <= 0:
        fail("link_distance", f"link_distance must be positive, got {link_distance}")
    horizon, realizations = get("horizon"), get("realizations")
    if horizon < 1:
        fail("horizon", "horizon must be at least one slot")
    if realizations < 1:
        fail("realizations", "need at least one realization")
    warmup = get("warmup_fraction")
    if not 0 <= warmup < 1:
        fail("warmup_fraction", f"warmup_fraction must lie in [0, 1), got {warmup}")

    try:
        boundary, margin = _parse_region(get("boundary"))
        region = RegionSpec(side=get("side"), boundary=boundary, margin=margin)
    except ValueError as exc:
        raise ConfigError(str(exc), lines.get("boundary", lines.get("side")))
    try:
        mode = Mode(get("mode"))
    except ValueError:
        fail("mode", f"mode must be actual or dominant, got {get('mode')!r}")
    fading = get("fading")
    if fading not in ("marginal", "explicit"):
        fail("fading", f"fading must be marginal or explicit, got {fading!r}")

    channel = ChannelParams(alpha=alpha, threshold=db_to_linear(get("threshold_db")),
                            snr=snr_from_dbm(get("tx_power_dbm"), get("noise_dbm")),
                            link_distance=link_distance)

    if "sweep" not in raw:
        raise ConfigError("no sweep defined: add 'sweep = arrival_rate | density | "
                          "observation_radius' and a 'values' line")
    try:
        sweep = SweepVariable(raw["sweep"])
    except ValueError:
        fail("sweep", f"unknown sweep variable {raw['sweep']!r}")
    if "values" not in raw:
        raise ConfigError("sweep requires a 'values' line")
    try:
        values = [float(v) for v in raw["values"].split()]
    except ValueError:
        fail("values", f"values must be numbers, got {raw['values']!r}")
    if not values:
        fail("values", "values must not be empty")
    for v in values:
        if sweep is SweepVariable.ARRIVAL_RATE and not 0 < v <= 1:
            fail("values", f"swept arrival rates must lie in (0, 1], got {v}")
        elif v <= 0:
            fail("values", f"swept {sweep.value} values must be positive, got {v}")

    if sweep is SweepVariable.OBSERVATION_RADIUS:
        policies = []
    else:
        try:
            policies = [parse_policy_label(p) for p in get("policies").split(",")]
        except ValueError as exc:
            fail("policies", str(exc))

    base = SimConfig(channel=channel, region=region,
                     stopping=policies[0] if policies else StoppingSetSpec.empty(),
                     density=density, arrival_rate=arrival, horizon=horizon,
                     realizations=realizations, master_seed=get("seed"), mode=mode,
                     warmup_fraction=warmup, fading=fading)
    return ExperimentSpec(base=base, sweep=sweep, values=values, policies=policies)
