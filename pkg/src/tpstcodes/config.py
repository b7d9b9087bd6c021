"""JSON run configuration: validation and resolution to a TpstSpec + ExperimentConfig."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .binlin import BitMatrix, build_selection_matrix, hex_to_bits, sample_structured_matrix
from .convcode import PRESETS, ConvSpec, PuncturePattern
from .sim import ExperimentConfig
from .tpst import TpstSpec

DEFAULTS: dict[str, Any] = {
    "campaign": "fer",
    "alpha": 1.0,
    "r_kind": "permutation",
    "r_seed": 0,
    "l_max": 1,
    "threshold": None,
    "snr_db": [2.0],
    "snr_mode": "ebn0",
    "master_seed": 0,
    "max_trials": 1000,
    "max_errors": None,
    "workers": 1,
    "plot": True,
}

# keys that cannot change any number in the results
NON_RESULT_KEYS = {"workers", "output", "plot", "reference_curves"}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message

    def as_dict(self) -> dict:
        return {"error": "validation", "field": self.field, "message": self.message}


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def validate(raw: dict) -> None:
    """Raise ConfigError naming the first offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    errors = sorted(jsonschema.Draft202012Validator(schema()).iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            field = ".".join([*map(str, e.path), extra[0]]) if extra else "<root>"
            raise ConfigError(field, "unknown field")
        field = ".".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(field, e.message)
    if raw.get("campaign") == "rate-allocate":
        if "rate_allocation" not in raw:
            raise ConfigError("rate_allocation", "required for the rate-allocate campaign")
        return
    if "preset" not in raw and "generators" not in raw:
        raise ConfigError("preset", "either 'preset' or 'generators' is required")
    if "k0" not in raw:
        raise ConfigError("k0", "required")


def load(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError("<root>", f"cannot read config: {exc}") from None
    validate(raw)
    return raw


def _basic(cfg: dict, layer: int, k: int, n: int | None) -> ConvSpec:
    # layer 1 reuses the layer-0 code unless it names its own
    own = layer == 1 and ("preset1" in cfg or "generators1" in cfg)
    sfx = "1" if own else ""
    gens, memory = cfg.get("generators" + sfx), cfg.get("memory" + sfx)
    field = "generators" + sfx
    if gens is None:
        gens, memory = PRESETS[cfg["preset" + sfx]]
        field = "preset" + sfx
    try:
        spec = ConvSpec.from_octal(gens, k, memory)
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from None
    pattern = cfg.get(f"puncture{layer}")
    if pattern is not None:
        spec = ConvSpec(spec.generators, k, spec.memory, PuncturePattern.from_string(pattern))
    elif n is not None and n != spec.mother_len:
        if n > spec.mother_len:
            raise ConfigError("n", f"length {n} exceeds mother length {spec.mother_len} of layer {layer}")
        spec = ConvSpec(spec.generators, k, spec.memory, PuncturePattern.homogeneous(spec.mother_len, n))
    return spec


def resolve_spec(cfg: dict) -> TpstSpec:
    cfg = {**DEFAULTS, **cfg}
    k0 = cfg["k0"]
    k1 = cfg.get("k1", k0)
    n = cfg.get("n")
    b0 = _basic(cfg, 0, k0, n)
    b1 = _basic(cfg, 1, k1, n if n is not None else b0.length)
    if b1.length != b0.length:
        raise ConfigError("k1", f"layer lengths differ ({b0.length} vs {b1.length}); set 'n' or punctures")
    nn = b0.length
    if "r_rows" in cfg:
        try:
            r = BitMatrix(np.array([hex_to_bits(row, nn) for row in cfg["r_rows"]], np.uint8).reshape(-1, nn), cols=nn)
        except ValueError as exc:
            raise ConfigError("r_rows", str(exc)) from None
        if r.shape != (nn, nn):
            raise ConfigError("r_rows", f"need {nn} rows of {nn} bits")
    else:
        r = sample_structured_matrix(nn, cfg["r_kind"], cfg["r_seed"])
    thr = cfg["threshold"]
    return TpstSpec(b0, b1, r, build_selection_matrix(nn, cfg["alpha"]), cfg["l_max"],
                    math.inf if thr is None else float(thr))


def resolve_experiment(cfg: dict, spec: TpstSpec | None = None) -> ExperimentConfig:
    full = {**DEFAULTS, **cfg}
    snr = full["snr_db"]
    snr = [snr] if isinstance(snr, (int, float)) else list(snr)
    return ExperimentConfig(
        spec=resolve_spec(cfg) if spec is None else spec,
        snr_points=tuple(snr),
        snr_mode=full["snr_mode"],
        master_seed=full["master_seed"],
        max_trials=full["max_trials"],
        max_errors=full["max_errors"],
        workers=full["workers"],
    )


def config_hash(cfg: dict) -> str:
    """Short digest of every setting that can influence results."""
    canon = {k: v for k, v in {**DEFAULTS, **cfg}.items() if k not in NON_RESULT_KEYS}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    master_seed: int
    snr_mode: str

    @classmethod
    def of(cls, cfg: dict) -> "Provenance":
        full = {**DEFAULTS, **cfg}
        return cls(config_hash(cfg), full["master_seed"], full["snr_mode"])
