"""Run configuration: one JSON file, overridden field-by-field by CLI flags."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration."""


@dataclass
class PathsConfig:
    templates: Optional[str] = None
    corpus: Optional[str] = None
    images: Optional[str] = None
    output: Optional[str] = None


@dataclass
class GenerationConfig:
    seed: int = 0
    caps: Dict[str, int] = field(default_factory=dict)
    enricher: str = "stub"
    numerals: str = "words"

    def validate(self) -> None:
        for key, cap in self.caps.items():
            if cap < 0:
                raise ConfigError(f"generation cap for {key!r} must be >= 0, got {cap}")
        if self.enricher not in ("stub", "live"):
            raise ConfigError(f"enricher must be 'stub' or 'live', got {self.enricher!r}")
        if self.numerals not in ("words", "digits"):
            raise ConfigError(f"numerals must be 'words' or 'digits', got {self.numerals!r}")


@dataclass
class CleaningConfig:
    ratio: float = 0.2
    seed: int = 0
    rule_threshold: int = 2

    def validate(self) -> None:
        if not 0.0 < self.ratio <= 1.0:
            raise ConfigError(f"cleaning ratio must be in (0, 1], got {self.ratio}")
        if self.rule_threshold < 1:
            raise ConfigError("rule_threshold must be >= 1")


@dataclass
class EvalConfig:
    metrics: Optional[List[str]] = None
    judge: str = "stub"

    def validate(self) -> None:
        if self.judge not in ("stub", "live"):
            raise ConfigError(f"judge must be 'stub' or 'live', got {self.judge!r}")


@dataclass
class DecodeConfig:
    alpha: float = 1.0
    beta: float = 0.1
    sigma: float = 0.3

    def validate(self) -> None:
        if self.alpha < 0:
            raise ConfigError("decode alpha must be >= 0")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("decode beta must be in [0, 1]")
        if self.sigma < 0:
            raise ConfigError("decode sigma must be >= 0")


@dataclass
class Config:
    paths: PathsConfig = field(default_factory=PathsConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def validate(self) -> "Config":
        self.generation.validate()
        self.cleaning.validate()
        self.eval.validate()
        self.decode.validate()
        return self


_SECTIONS = {
    "paths": PathsConfig,
    "generation": GenerationConfig,
    "cleaning": CleaningConfig,
    "eval": EvalConfig,
    "decode": DecodeConfig,
}


def load_config(path: Path) -> Config:
    """Parse a JSON config file; unknown sections or keys are rejected."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    kwargs = {}
    for section, payload in raw.items():
        cls = _SECTIONS.get(section)
        if cls is None:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(payload, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        known = set(cls.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown keys in config section {section!r}: {sorted(unknown)}")
        kwargs[section] = cls(**payload)
    return Config(**kwargs).validate()
