"""JSON scenario files: schema, defaults and resolution into ``ScenarioConfig``.

A file only lists what differs from the default deployment. Keys carrying a
``_dB`` / ``_dBm`` suffix are logarithmic; everything else is linear SI
(watts, meters, radians).
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .channel import path_loss
from .scenario import (
    DOUBLE_LINKS,
    LINK_NODES,
    ArraySpec,
    LinkAngles,
    LinkFading,
    Regime,
    ScenarioConfig,
    db_to_linear,
    dbm_to_watts,
    derived_link_angles,
    node_distance,
)

PI = math.pi

DEFAULT_ANGLES = {
    # link: (aoa, aod); each applies to both the azimuth and the elevation
    "S1": (PI / 6, PI / 6),
    "S2": (PI / 5, PI / 4),
    "12": (PI / 4, PI / 5),
    "SU": (0.0, PI / 3),
    "1U": (0.0, PI / 8),
    "2U": (0.0, PI / 9),
}
DEFAULT_EXPONENTS = {"S1": 2.3, "S2": 2.3, "12": 2.2, "SU": 3.7, "1U": 2.3, "2U": 2.3, "S0": 2.3, "0U": 2.3}
DEFAULT_IRS_X = 5.0
DEFAULT_IRS_Y = 20.0
DEFAULT_BS = (0.0, -25.0, 1.2)
DEFAULT_USER = (0.0, 25.0, 1.0)
DEFAULT_IRS_HEIGHT = 5.0
DEFAULT_K_DB = 10.0
DEFAULT_ARRAYS = {"S": (2, 2), "1": (10, 10), "2": (10, 10)}


class ConfigError(ValueError):
    """Scenario file is malformed or out of range."""


_number = {"type": "number"}
_point = {"type": "array", "items": _number, "minItems": 3, "maxItems": 3}
_dims = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2}
_angles = {
    "type": "object",
    "properties": {k: _number for k in ("aoa_h", "aoa_v", "aod_h", "aod_v")},
    "additionalProperties": False,
}
_regime = {"enum": [r.value for r in Regime]}
_link = {
    "type": "object",
    "properties": {
        "K": {"type": "number", "minimum": 0},
        "K_dB": _number,
        "regime": _regime,
        "alpha": {"type": "number", "minimum": 0},
        "alpha_dB": _number,
        "distance": {"type": "number", "exclusiveMinimum": 0},
        "exponent": _number,
        "angles": _angles,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "d_over_lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "P_S_dBm": _number,
        "P_S_W": {"type": "number", "exclusiveMinimum": 0},
        "noise_dBm": _number,
        "noise_W": {"type": "number", "exclusiveMinimum": 0},
        "K_dB": _number,
        "K": {"type": "number", "minimum": 0},
        "regime": _regime,
        "arrays": {
            "type": "object",
            "properties": {k: _dims for k in ("S", "1", "2", "0")},
            "additionalProperties": False,
        },
        "positions": {
            "type": "object",
            "properties": {k: _point for k in ("S", "U", "1", "2", "0")},
            "additionalProperties": False,
        },
        "irs_x": _number,
        "irs_y": _number,
        "links": {
            "type": "object",
            "properties": {k: _link for k in LINK_NODES},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
    "additionalProperties": False,
}


def validate(raw: Mapping[str, Any]) -> None:
    """Raise ``ConfigError`` naming the offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")
    for a, b in (("P_S_dBm", "P_S_W"), ("noise_dBm", "noise_W"), ("K_dB", "K")):
        if a in raw and b in raw:
            raise ConfigError(f"{a}: give either {a} or {b}, not both")
    for link, spec in raw.get("links", {}).items():
        for a, b in (("K_dB", "K"), ("alpha", "alpha_dB"), ("alpha", "distance")):
            if a in spec and b in spec:
                raise ConfigError(f"links/{link}: give either {a} or {b}, not both")


def default_positions(irs_x: float = DEFAULT_IRS_X, irs_y: float = DEFAULT_IRS_Y) -> dict:
    return {
        "S": DEFAULT_BS,
        "U": DEFAULT_USER,
        "1": (-irs_x, -irs_y, DEFAULT_IRS_HEIGHT),
        "2": (-irs_x, irs_y, DEFAULT_IRS_HEIGHT),
    }


def _rician(spec: Mapping, raw: Mapping) -> tuple[float, Regime]:
    regime = Regime(spec.get("regime", raw.get("regime", Regime.FINITE.value)))
    if regime is not Regime.FINITE:
        if "K" in spec or "K_dB" in spec:
            raise ConfigError("a link with a pure regime cannot also set K / K_dB")
        return 0.0, regime
    if "K" in spec:
        return float(spec["K"]), regime
    if "K_dB" in spec:
        return db_to_linear(spec["K_dB"]), regime
    if "K" in raw:
        return float(raw["K"]), regime
    return db_to_linear(raw.get("K_dB", DEFAULT_K_DB)), regime


def _link_angles(link: str, spec: Mapping, positions: Mapping, derive: bool) -> LinkAngles:
    if derive:
        base = derived_link_angles(positions, link)
    elif link in DEFAULT_ANGLES:
        aoa, aod = DEFAULT_ANGLES[link]
        base = LinkAngles(aoa, aoa, aod, aod)
    else:
        base = derived_link_angles(positions, link)
    overrides = spec.get("angles", {})
    return LinkAngles(**{**base.__dict__, **overrides})


def resolve_scenario(raw: Mapping[str, Any] | None = None) -> ScenarioConfig:
    """Fill defaults into a raw (already parsed) JSON mapping."""
    raw = {} if raw is None else dict(raw)
    validate(raw)
    arrays_raw = {**DEFAULT_ARRAYS, **raw.get("arrays", {})}
    arrays = {node: ArraySpec(*dims) for node, dims in arrays_raw.items()}

    irs_x = float(raw.get("irs_x", DEFAULT_IRS_X))
    irs_y = float(raw.get("irs_y", DEFAULT_IRS_Y))
    positions = default_positions(irs_x, irs_y)
    positions.update({k: tuple(map(float, v)) for k, v in raw.get("positions", {}).items()})
    # explicit positions switch unspecified angles to geometry-derived ones
    derive = "positions" in raw

    link_specs = raw.get("links", {})
    links = list(DOUBLE_LINKS)
    if "0" in arrays:
        links += ["S0", "0U"]
    fading, angles, exponents = {}, {}, {}
    for link in links:
        spec = link_specs.get(link, {})
        exponents[link] = float(spec.get("exponent", DEFAULT_EXPONENTS[link]))
        if "alpha" in spec:
            alpha = float(spec["alpha"])
        elif "alpha_dB" in spec:
            alpha = db_to_linear(spec["alpha_dB"])
        else:
            missing = [n for n in LINK_NODES[link] if n not in positions]
            if "distance" not in spec and missing:
                raise ConfigError(f"links/{link}: no alpha, distance or position for node(s) {missing}")
            distance = float(spec["distance"]) if "distance" in spec else node_distance(positions, link)
            try:
                alpha = path_loss(distance, exponents[link])
            except ValueError as exc:
                raise ConfigError(f"links/{link}: {exc}") from None
        k, regime = _rician(spec, raw)
        try:
            fading[link] = LinkFading(alpha, k, regime)
            angles[link] = _link_angles(link, spec, positions, derive)
        except ValueError as exc:
            raise ConfigError(f"links/{link}: {exc}") from None
    for link in link_specs:
        if link not in links:
            raise ConfigError(f"links/{link}: link needs an array for IRS 0 ('arrays': {{'0': [M, N]}})")

    try:
        return ScenarioConfig(
            arrays=arrays,
            fading=fading,
            angles=angles,
            d_over_lambda=float(raw.get("d_over_lambda", 0.5)),
            transmit_power=float(raw["P_S_W"]) if "P_S_W" in raw else dbm_to_watts(raw.get("P_S_dBm", 5.0)),
            noise_power=float(raw["noise_W"]) if "noise_W" in raw else dbm_to_watts(raw.get("noise_dBm", -104.0)),
            positions=positions,
            exponents=exponents,
            seed=int(raw.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def default_scenario() -> ScenarioConfig:
    """The reference deployment: 2x2 BS array, two 10x10 IRSs, K = 10 dB."""
    return resolve_scenario({})


def read_config(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not text.strip():
        return {}
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw


def load_scenario(path: str | Path) -> ScenarioConfig:
    return resolve_scenario(read_config(path))


def merged(raw: Mapping[str, Any], **updates) -> dict:
    """Deep-ish copy of ``raw`` with top-level keys replaced."""
    out = copy.deepcopy(dict(raw))
    out.update(updates)
    return out
