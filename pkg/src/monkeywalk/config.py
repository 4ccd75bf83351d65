"""Experiment configuration: one JSON document, unknown keys rejected with line numbers."""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .model import Model, make_model
from .process import ProcessDescriptor, process_from_dict
from .runlen import RunLengthDistribution

SAMPLERS = ("direct", "effective", "both")
_KEYS = {"delta", "gamma", "run_length", "process", "times", "replicates", "seed", "sampler", "output"}
_REQUIRED = {"delta", "times"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    delta: float
    gamma: float = 1.0
    run_length: RunLengthDistribution = field(default_factory=lambda: RunLengthDistribution("exponential", {"rate": 1.0}))
    process: ProcessDescriptor = field(default_factory=lambda: process_from_dict({"kind": "brownian", "drift": 1.0}))
    times: tuple = (100.0,)
    replicates: int = 1000
    seed: int = 0
    sampler: str = "effective"
    output: str = "out/run"

    def model(self) -> Model:
        return make_model(self.delta, self.gamma, self.run_length, self.process)

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "gamma": self.gamma,
            "run_length": self.run_length.to_dict(),
            "process": self.process.to_dict(),
            "times": list(self.times),
            "replicates": self.replicates,
            "seed": self.seed,
            "sampler": self.sampler,
            "output": self.output,
        }

    def replace(self, **kw) -> "ExperimentConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        cfg = ExperimentConfig(**d)
        _check(cfg, "")
        return cfg


def _line_of(text: str, key: str) -> str:
    if not text:
        return ""
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for no, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return f"line {no}: "
    return ""


def _check(cfg: ExperimentConfig, text: str) -> None:
    def fail(key, msg):
        raise ConfigError(f"{_line_of(text, key)}{key}: {msg}")

    if not cfg.delta > 0:
        fail("delta", "must be positive")
    if not cfg.gamma > 0:
        fail("gamma", "must be positive")
    if not cfg.times or any(not t > 0 for t in cfg.times):
        fail("times", "must be a nonempty list of positive numbers")
    if cfg.replicates < 1:
        fail("replicates", "must be >= 1")
    if cfg.sampler not in SAMPLERS:
        fail("sampler", f"must be one of {', '.join(SAMPLERS)}")
    if not 0 <= cfg.seed < 2**64:
        fail("seed", "must be a 64-bit unsigned integer")
    try:
        cfg.model()
    except ValueError as exc:
        raise ConfigError(f"{_line_of(text, 'run_length')}model: {exc}") from exc


def config_from_dict(d: dict, text: str = "") -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(d) - _KEYS)
    if unknown:
        raise ConfigError(f"{_line_of(text, unknown[0])}unknown key(s) {unknown}; allowed: {sorted(_KEYS)}")
    missing = sorted(_REQUIRED - set(d))
    if missing:
        raise ConfigError(f"missing required key(s) {missing}")
    kw = {}
    try:
        kw["delta"] = float(d["delta"])
        if "gamma" in d:
            kw["gamma"] = float(d["gamma"])
        times = d["times"]
        kw["times"] = tuple(float(t) for t in (times if isinstance(times, list) else [times]))
        if "replicates" in d:
            if isinstance(d["replicates"], bool) or not float(d["replicates"]).is_integer():
                raise ConfigError(f"{_line_of(text, 'replicates')}replicates: must be an integer")
            kw["replicates"] = int(d["replicates"])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        for key in ("sampler", "output"):
            if key in d:
                kw[key] = str(d[key])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value: {exc}") from exc
    for key, build in (("run_length", RunLengthDistribution.from_dict), ("process", process_from_dict)):
        if key in d:
            try:
                kw[key] = build(d[key])
            except (TypeError, ValueError, KeyError) as exc:
                raise ConfigError(f"{_line_of(text, key)}{key}: {exc}") from exc
    cfg = ExperimentConfig(**kw)
    _check(cfg, text)
    return cfg


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(d, text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
