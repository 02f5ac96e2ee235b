"""Run configuration files: JSON, strict keys, documented defaults.

A config mirrors :class:`~gradgate.trainer.TrainConfig` plus an ``output``
section.  Unknown keys are rejected, and every error names the offending
field and, when the value came from the file, its line.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .controller import ControllerConfig
from .sampler import SamplerConfig
from .sim_stream import StreamConfig
from .toy_model import DEFAULT_DIMS
from .trainer import OptimizerConfig, ToyConfig, TrainConfig

DEFAULTS = {
    "seed": 0,
    "source": "toy",
    "total_steps": 2000,
    "monitor": "group",
    "update": "mean",
    "data_budget": None,
    "controller": {
        "alpha": 1.1,
        "min_minibatches": 2,
        "max_minibatches": 64,
        "degenerate_policy": "skip",
        "fixed_k": None,
    },
    "sampler": {
        "beta": 3.0,
        "mode": "power",
        "window_len": 5,
        "rng_seed": None,  # null: use the top-level seed
    },
    "optimizer": {"learning_rate": 0.0005, "momentum": 0.0},
    "sim": {
        "dim": 512,
        "sigma": 1.0,
        "mu0": 16.0,
        "schedule": "exp",
        "decay": 0.005,
        "seed": None,  # null: use the top-level seed
        "minibatch_size_units": 100,
        "groups": 4,
    },
    "toy": {
        "dims": list(DEFAULT_DIMS),
        "label_noise_sigma": 0.1,
        "minibatch_size": 4,
        "teacher_gain": 5.0,
    },
    "output": {"dir": "runs/default", "hist_bins": 20, "amin_window": 100},
}

# fields that may be null, and what they hold otherwise
_NULLABLE = {"data_budget": int, "controller.fixed_k": int, "sampler.rng_seed": int, "sim.seed": int}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputConfig:
    dir: str
    hist_bins: int
    amin_window: int


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Located:
    """Builds error messages that point into the source file."""

    def __init__(self, source: str, text: str, overridden: set):
        self.source = source
        self.text = text
        self.overridden = overridden

    def error(self, path: str, msg: str) -> ConfigError:
        if path in self.overridden:
            return ConfigError(f"{self.source}: {path}: {msg} (from --override)")
        line = _line_of(self.text, path.rsplit(".", 1)[-1]) if self.text else None
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {path}: {msg}")


def _merge(defaults: dict, given: dict, loc: _Located, prefix: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise loc.error(path, "unknown key")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise loc.error(path, "expected an object")
            out[key] = _merge(defaults[key], value, loc, path + ".")
        else:
            out[key] = value
    return out


def _check_types(cfg: dict, defaults: dict, loc: _Located, prefix: str = "") -> None:
    for key, default in defaults.items():
        path = f"{prefix}{key}"
        value = cfg[key]
        if isinstance(default, dict):
            _check_types(value, default, loc, path + ".")
            continue
        if value is None:
            if path in _NULLABLE:
                continue
            raise loc.error(path, "must not be null")
        want = _NULLABLE.get(path, type(default))
        ok = {
            bool: lambda v: isinstance(v, bool),
            int: lambda v: isinstance(v, int) and not isinstance(v, bool),
            float: lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            str: lambda v: isinstance(v, str),
            list: lambda v: isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v),
        }[want](value)
        if not ok:
            raise loc.error(path, f"expected {want.__name__}, got {json.dumps(value)}")


def resolve_key(key: str) -> str:
    """Expand a bare override key such as ``alpha`` to ``controller.alpha``."""
    if "." in key or key in DEFAULTS:
        return key
    hits = [f"{sec}.{key}" for sec, body in DEFAULTS.items() if isinstance(body, dict) and key in body]
    if len(hits) == 1:
        return hits[0]
    if hits:
        raise ConfigError(f"ambiguous override key {key!r}: use one of {', '.join(hits)}")
    raise ConfigError(f"unknown override key {key!r}")


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return resolve_key(key.strip()), value


def _set_path(cfg: dict, path: str, value) -> None:
    node = cfg
    *parents, leaf = path.split(".")
    for p in parents:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown override key {path!r}")
        node = node[p]
    if leaf not in node or isinstance(node[leaf], dict):
        raise ConfigError(f"unknown override key {path!r}")
    node[leaf] = value


def build_config(data: dict, overrides=(), source: str = "<config>", text: str = "") -> dict:
    """Merge defaults, file contents and overrides; validate; return the effective dict."""
    parsed = [parse_override(o) if isinstance(o, str) else o for o in overrides]
    loc = _Located(source, text, {p for p, _ in parsed})
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    cfg = _merge(DEFAULTS, data, loc)
    for path, value in parsed:
        _set_path(cfg, path, value)
    _check_types(cfg, DEFAULTS, loc)
    if cfg["sampler"]["rng_seed"] is None:
        cfg["sampler"]["rng_seed"] = cfg["seed"]
    if cfg["sim"]["seed"] is None:
        cfg["sim"]["seed"] = cfg["seed"]
    to_train_config(cfg, loc)
    return cfg


def _section(cls, body: dict, name: str, loc: _Located):
    try:
        return cls(**body)
    except ValueError as exc:
        field = next((k for k in body if re.search(r"\b%s\b" % re.escape(k), str(exc))), None)
        raise loc.error(f"{name}.{field}" if field else name, str(exc)) from None


def to_train_config(cfg: dict, loc: _Located | None = None) -> TrainConfig:
    loc = loc or _Located("<config>", "", set())
    controller = _section(ControllerConfig, cfg["controller"], "controller", loc)
    sampler = _section(SamplerConfig, cfg["sampler"], "sampler", loc)
    sim = _section(StreamConfig, cfg["sim"], "sim", loc)
    toy = _section(ToyConfig, cfg["toy"], "toy", loc)
    optimizer = _section(OptimizerConfig, cfg["optimizer"], "optimizer", loc)
    top = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    try:
        return TrainConfig(controller=controller, sampler=sampler, sim=sim, toy=toy, optimizer=optimizer, **top)
    except ValueError as exc:
        field = next((k for k in top if re.search(r"\b%s\b" % re.escape(k), str(exc))), None)
        raise loc.error(field or "<top>", str(exc)) from None


def output_config(cfg: dict) -> OutputConfig:
    out = OutputConfig(**cfg["output"])
    if out.hist_bins < 1 or out.amin_window < 1:
        raise ConfigError("output.hist_bins and output.amin_window must be >= 1")
    return out


def load_config(path: str | Path | None, overrides=()) -> dict:
    if path is None:
        return build_config({}, overrides, source="<defaults>")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    return build_config(data, overrides, source=str(path), text=text)
