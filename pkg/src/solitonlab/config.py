"""Experiment configuration: a flat key = value text format plus overrides.

Grammar (one statement per line, '#' comments):

    key = value
    value := number | true | false | "quoted string" | bare-word
           | [ value, value, ... ]          (numeric vectors)

Unknown keys are errors, not warnings.  Resolution order is
defaults < preset < config file < command-line overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

KINDS = (
    "compare",
    "pde-only",
    "effective-only",
    "h-sweep",
    "ehrenfest",
    "convergence",
    "scheme-bench",
    "mkdv-compare",
    "mkdv-h-sweep",
)

MODELS = ("nls", "mkdv")
SCHEMES = ("etdrk4", "ark436")
SWEEP_METRICS = ("final", "max")


@dataclass
class ExperimentConfig:
    kind: str = "compare"
    model: str = "nls"
    preset: str = ""
    potential: str = "0"
    h: float = 1.0
    n: int = 1
    a: list = field(default_factory=lambda: [0.0])
    v: list = field(default_factory=lambda: [0.0])
    theta: list = field(default_factory=lambda: [0.0])
    mu: list = field(default_factory=lambda: [17.0])
    c: list = field(default_factory=lambda: [10.0])
    phases: list = field(default_factory=list)
    t_final: float = 0.1
    dt: float = 1e-4
    dt_ode: float = 0.0  # 0 -> same as dt
    grid_n: int = 0  # 0 -> automatic
    scheme: str = "etdrk4"
    stride: int = 50
    snapshot_stride: int = 100
    out: str = "runs"
    h_values: list = field(default_factory=list)
    dt_values: list = field(default_factory=list)
    fit_k: int = 6
    sweep_metric: str = "max"
    window_lo: float = 0.15
    window_hi: float = 1.2
    target_accuracy: float = 1e-8
    dealias: bool = False
    exp_cap: float = 600.0
    refine: bool = False
    threads: int = 1

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, (list, tuple, np.ndarray)) else v
        return out


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_KEYS = {"n", "grid_n", "stride", "snapshot_stride", "fit_k", "threads"}
_BOOL_KEYS = {"dealias", "refine"}
_VECTOR_KEYS = {"a", "v", "theta", "mu", "c", "phases", "h_values", "dt_values"}
_STR_KEYS = {"kind", "model", "preset", "potential", "scheme", "sweep_metric", "out"}
_FLOAT_KEYS = (
    set(_FIELD_TYPES)
    - _INT_KEYS
    - _BOOL_KEYS
    - _VECTOR_KEYS
    - _STR_KEYS
)


def parse_value(text: str, key: str = ""):
    text = text.strip()
    if not text:
        raise ConfigError(f"empty value for key {key!r}", key=key)
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        parts = [p.strip() for p in inner.split(",")]
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(
                f"vector value for {key!r} has a non-numeric entry: {exc}", key=key
            ) from None
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    try:
        return float(text)
    except ValueError:
        return text  # bare word


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}", key=key)
    if key in _VECTOR_KEYS:
        if not isinstance(value, list):
            raise ConfigError(f"key {key!r} expects a vector [..]", key=key)
        return [float(v) for v in value]
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"key {key!r} expects true/false", key=key)
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key {key!r} expects an integer", key=key)
        if float(value) != int(value):
            raise ConfigError(f"key {key!r} expects an integer", key=key)
        return int(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"key {key!r} expects a string", key=key)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key {key!r} expects a number", key=key)
    return float(value)


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key=None)
        key, _, val = line.partition("=")
        key = key.strip()
        out[key] = _coerce(key, parse_value(val, key))
    return out


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} must be key=value", key=pair)
        key, _, val = pair.partition("=")
        key = key.strip()
        out[key] = _coerce(key, parse_value(val, key))
    return out


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    def fail(msg, key):
        raise ConfigError(msg, key=key)

    if cfg.kind not in KINDS:
        fail(f"kind must be one of {KINDS}, got {cfg.kind!r}", "kind")
    if cfg.model not in MODELS:
        fail(f"model must be one of {MODELS}", "model")
    if cfg.kind.startswith("mkdv") and cfg.model != "mkdv":
        cfg.model = "mkdv"
    if cfg.scheme not in SCHEMES:
        fail(f"scheme must be one of {SCHEMES}", "scheme")
    if cfg.sweep_metric not in SWEEP_METRICS:
        fail(f"sweep_metric must be one of {SWEEP_METRICS}", "sweep_metric")
    n = cfg.n
    if n < 1:
        fail("soliton count n must be >= 1", "n")
    if cfg.model == "nls":
        for key in ("a", "v", "theta", "mu"):
            if len(getattr(cfg, key)) != n:
                fail(f"vector {key!r} must have length n = {n}", key)
    else:
        for key in ("a", "c"):
            if len(getattr(cfg, key)) != n:
                fail(f"vector {key!r} must have length n = {n}", key)
        if cfg.phases and len(cfg.phases) != n:
            fail(f"vector 'phases' must have length n = {n}", "phases")
    if cfg.t_final <= 0 and cfg.kind not in ("ehrenfest",):
        fail("t_final must be positive", "t_final")
    if cfg.dt <= 0:
        fail("dt must be positive", "dt")
    if cfg.dt_ode < 0:
        fail("dt_ode must be >= 0 (0 means: use dt)", "dt_ode")
    if cfg.grid_n and (cfg.grid_n < 8 or cfg.grid_n & (cfg.grid_n - 1)):
        fail("grid_n must be 0 (auto) or a power of two >= 8", "grid_n")
    if cfg.kind in ("h-sweep", "ehrenfest", "mkdv-h-sweep") and not cfg.h_values:
        cfg.h_values = default_h_values(cfg.kind)
    if cfg.kind in ("convergence", "scheme-bench") and not cfg.dt_values:
        cfg.dt_values = [4e-4, 2e-4, 1e-4, 5e-5]
    if cfg.kind in ("h-sweep", "mkdv-h-sweep") and cfg.fit_k > len(cfg.h_values):
        fail("fit_k exceeds the number of h values", "fit_k")
    if cfg.threads < 1:
        fail("threads must be >= 1", "threads")
    return cfg


def default_h_values(kind: str) -> list:
    if kind == "ehrenfest":
        return [0.5, 0.35, 0.25, 0.18]
    # geometric, ratio ~ sqrt(2), spanning the slowly-varying regime
    return [0.5, 0.35, 0.25, 0.18, 0.125, 0.09, 0.0625, 0.045]


def load_config(
    path: str | None = None,
    overrides=(),
    preset: str | None = None,
) -> ExperimentConfig:
    """Resolve a configuration: defaults < preset < file < overrides."""
    from .presets import get_preset

    merged: dict = {}
    file_values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path!r} does not exist", key=None)
        file_values = parse_config_text(p.read_text())
    override_values = parse_overrides(overrides)

    preset_name = (
        preset
        or override_values.get("preset")
        or file_values.get("preset")
        or ""
    )
    if preset_name:
        merged.update(get_preset(preset_name).values)
        merged["preset"] = preset_name
    merged.update(file_values)
    merged.update(override_values)

    cfg = ExperimentConfig()
    for key, value in merged.items():
        setattr(cfg, key, _coerce(key, value))
    return validate(cfg)
