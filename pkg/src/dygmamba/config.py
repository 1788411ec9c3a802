"""Run configuration: flat ``key = value`` files with command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .model import ModelConfig

MODEL_KEYS = tuple(f.name for f in dataclasses.fields(ModelConfig))


@dataclass
class RunConfig:
    # model
    rho: int = 32
    p: int = 1
    k: int = 10
    d: int = 50
    d_SSM: int = 16
    gamma: float = 0.5
    l_N: int = 2
    l_T: int = 2
    d_N: int = 172
    d_E: int = 172
    d_T: int = 100
    d_F: int = 50
    dropout: float = 0.1
    variant: str = "full"
    seed: int = 0
    # data
    data: Optional[str] = None
    node_features: Optional[str] = None
    edge_features: Optional[str] = None
    synth_num_pairs: Optional[int] = None
    synth_period: float = 1.0
    synth_decay: float = 1.1
    synth_noise_edges: int = 2000
    synth_horizon: float = 200.0
    synth_noise_nodes: Optional[int] = None
    ratios: tuple = (0.70, 0.15, 0.15)
    unseen_fraction: float = 0.10
    # training / evaluation
    epochs_max: int = 200
    patience: int = 20
    batch_size: int = 200
    lr: float = 1e-4
    seeds: tuple = (0,)
    setting: str = "transductive"
    nss: str = "random"
    checkpoint: Optional[str] = None
    out: str = "runs"
    # baselines and benchmark
    edgebank_thresh: int = 1
    bench_lengths: tuple = (1024, 2048, 4096, 8192)
    bench_width: int = 128
    bench_reps: int = 5

    def model_config(self, seed=None) -> ModelConfig:
        kw = {k: getattr(self, k) for k in MODEL_KEYS}
        if seed is not None:
            kw["seed"] = seed
        return ModelConfig(**kw)

    def validate(self, need_data=False):
        self.model_config()
        has_path = self.data is not None
        has_synth = self.synth_num_pairs is not None
        if has_path and has_synth:
            raise ConfigError("give either a dataset path or synth_num_pairs, not both")
        if need_data and not (has_path or has_synth):
            raise ConfigError("no dataset: set data=<edges.csv> or synth_num_pairs=<n>")
        if self.setting not in ("transductive", "inductive"):
            raise ConfigError(f"unknown setting {self.setting!r}")
        if self.nss not in ("random", "historical", "inductive"):
            raise ConfigError(f"unknown nss {self.nss!r}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        return self

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TUPLE_ITEM = {"ratios": float, "seeds": int, "bench_lengths": int}


def _scalar_type(name):
    default = _FIELDS[name].default
    if name in ("data", "node_features", "edge_features", "checkpoint", "out", "variant",
                "setting", "nss"):
        return str
    if name in ("synth_num_pairs", "synth_noise_nodes"):
        return int
    return type(default)


def coerce(name, raw):
    """Parse one textual value for field ``name``."""
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    raw = str(raw).strip()
    try:
        if name in _TUPLE_ITEM:
            return tuple(_TUPLE_ITEM[name](x) for x in raw.split(",") if x.strip())
        if raw.lower() in ("", "none") and _FIELDS[name].default is None:
            return None
        typ = _scalar_type(name)
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError(f"not an integer: {raw}")
            return int(f)
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, raw)
    return values


def load_config(path=None, overrides=None) -> RunConfig:
    """Defaults, then the file (if any), then ``overrides`` (flag wins)."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = coerce(k, v) if isinstance(v, str) else v
    return RunConfig(**values)
