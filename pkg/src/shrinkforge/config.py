"""Experiment configuration: flat key-value text with one section per command.

Values stay strings in the round trip; typed access happens through the
``Section`` helpers.  Unknown keys are preserved verbatim.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

COMMANDS = ("instability", "ga", "oracle", "real", "simulate")


@dataclass
class Section:
    name: str
    values: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default=None) -> str | None:
        return self.values.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"[{self.name}] is missing required key {key!r}")
        return self.values[key]

    def get_int(self, key: str, default: int | None = None) -> int | None:
        raw = self.values.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not an integer") from None

    def get_float(self, key: str, default: float | None = None) -> float | None:
        raw = self.values.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from None

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.values.get(key)
        if raw is None:
            return default
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a boolean")

    def get_int_list(self, key: str, default=()) -> list[int]:
        raw = self.values.get(key)
        if raw is None:
            return list(default)
        try:
            return [int(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not an integer list") from None

    def get_float_list(self, key: str, default=()) -> list[float]:
        raw = self.values.get(key)
        if raw is None:
            return list(default)
        try:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number list") from None

    def get_str_list(self, key: str, default=()) -> list[str]:
        raw = self.values.get(key)
        if raw is None:
            return list(default)
        return [tok.strip() for tok in raw.split(",") if tok.strip()]


@dataclass
class ExperimentConfig:
    sections: dict[str, Section] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        sections = {
            name: Section(name, dict(parser[name])) for name in parser.sections()
        }
        return cls(sections)

    def to_file(self, path) -> None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for name, section in self.sections.items():
            parser[name] = dict(section.values)
        with Path(path).open("w") as fh:
            parser.write(fh)

    def section(self, name: str) -> Section:
        return self.sections.get(name) or Section(name)

    @property
    def common(self) -> Section:
        return self.section("common")
