"""System configuration files: JSON schema, validation, hashing."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .symbolic import BernoulliWeights
from .system import AffineIFS

SCHEMA_VERSION = 1

DEFAULT_DEPTHS = {
    "spectrum": 10,
    "pressure": 10,
    "separation": 8,
    "cover": 40,
    "ratio": 10,
}
DEFAULT_TOLERANCES = {
    "root": 1e-9,
    "fd_step": 1e-3,
}


class ConfigError(ValueError):
    """Invalid configuration; `field` names the offending entry."""

    def __init__(self, message: str, field_name: str = ""):
        super().__init__(message)
        self.field = field_name


@dataclass
class SystemConfig:
    """Validated system description loaded from a JSON config file."""

    matrices: list[list[float]]  # N x 4, row-major (a, b, c, d)
    translations: list[list[float]]  # N x 2
    probabilities: list[float]  # N
    label: str = ""
    labels: list[str] = field(default_factory=list)  # per-map names
    seed: int = 0
    depths: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.depths = {**DEFAULT_DEPTHS, **self.depths}
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}
        if not self.labels:
            self.labels = [f"map{i}" for i in range(len(self.matrices))]

    def system(self) -> AffineIFS:
        mats = [[[m[0], m[1]], [m[2], m[3]]] for m in self.matrices]
        return AffineIFS.from_arrays(mats, self.translations)

    def weights(self) -> BernoulliWeights:
        return BernoulliWeights(tuple(self.probabilities))

    def canonical_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "label": self.label,
            "labels": self.labels,
            "matrices": self.matrices,
            "translations": self.translations,
            "probabilities": self.probabilities,
            "seed": self.seed,
            "depths": self.depths,
            "tolerances": self.tolerances,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _require(data: dict, key: str, kind, where: str):
    if key not in data:
        raise ConfigError(f"missing required field '{key}'", key)
    value = data[key]
    if not isinstance(value, kind):
        raise ConfigError(f"field '{key}' in {where} must be {kind.__name__}, "
                          f"got {type(value).__name__}", key)
    return value


def _float_row(row, length: int, key: str, index: int) -> list[float]:
    if not isinstance(row, list) or len(row) != length:
        raise ConfigError(f"'{key}[{index}]' must be a list of {length} numbers", key)
    out = []
    for v in row:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ConfigError(f"'{key}[{index}]' contains a non-finite or non-numeric entry", key)
        out.append(float(v))
    return out


def parse_config(data: dict, where: str = "config") -> SystemConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object", "")
    schema = _require(data, "schema", int, where)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {schema} (expected {SCHEMA_VERSION})",
                          "schema")
    matrices = _require(data, "matrices", list, where)
    translations = _require(data, "translations", list, where)
    probabilities = _require(data, "probabilities", list, where)
    n = len(matrices)
    if n < 1:
        raise ConfigError("'matrices' must be non-empty", "matrices")
    if len(translations) != n:
        raise ConfigError(f"'translations' has {len(translations)} rows, expected {n}",
                          "translations")
    if len(probabilities) != n:
        raise ConfigError(f"'probabilities' has {len(probabilities)} entries, expected {n}",
                          "probabilities")
    mats = [_float_row(row, 4, "matrices", i) for i, row in enumerate(matrices)]
    trans = [_float_row(row, 2, "translations", i) for i, row in enumerate(translations)]
    probs = _float_row(probabilities, n, "probabilities", 0)

    total = sum(probs)
    if abs(total - 1.0) > 1e-12:
        raise ConfigError(f"probabilities sum to {total!r}, expected 1", "probabilities")
    if any(p <= 0.0 for p in probs):
        raise ConfigError("probabilities must be strictly positive", "probabilities")

    labels = data.get("labels", [])
    if labels and (not isinstance(labels, list) or len(labels) != n
                   or not all(isinstance(x, str) for x in labels)):
        raise ConfigError(f"'labels' must be a list of {n} strings", "labels")

    cfg = SystemConfig(
        matrices=mats,
        translations=trans,
        probabilities=probs,
        label=str(data.get("label", "")),
        labels=list(labels),
        seed=int(data.get("seed", 0)),
        depths=dict(data.get("depths", {})),
        tolerances=dict(data.get("tolerances", {})),
    )
    try:
        cfg.system()
    except ValueError as exc:
        raise ConfigError(f"invalid system: {exc}", "matrices") from exc
    return cfg


def load_config(path: str | Path) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return parse_config(data, where=str(path))
