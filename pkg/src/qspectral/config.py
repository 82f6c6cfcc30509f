"""Run configuration and its flat ``section.key = value`` text format.

Grammar, one setting per line::

    # comment
    dataset.generator = circles        # or csv
    dataset.n = 600
    graph.d_min = 0.6
    noise.mode = quantum
    run.sweep = 300, 400, 500

Blank lines and ``#`` comments are ignored, keys are case-sensitive and a
repeated key keeps its last value.  Lists are comma-separated; booleans are
``true``/``false``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from qspectral.noise import NoiseProfile

OUTPUT_DIR_ENV = "QSPECTRAL_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    generator: str = "circles"
    n: int = 600
    radius_inner: float = 1.0
    radius_outer: float = 2.0
    noise_sd: float = 0.05
    path: Optional[str] = None


@dataclass(frozen=True)
class GraphConfig:
    d_min: Optional[float] = None  # None: 0.6 * (radius_outer - radius_inner)
    rescale: bool = True


@dataclass(frozen=True)
class SpectralConfig:
    k: int = 2
    gamma: float = 1.1
    normalize_rows: bool = False


@dataclass(frozen=True)
class ClusteringSettings:
    max_iters: int = 100
    tol: float = 1e-4


@dataclass(frozen=True)
class CostConfig:
    c_qram: float = 1.0
    classical: tuple = (1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class RunSettings:
    repetitions: int = 1
    sweep: tuple = ()
    output_dir: Optional[str] = None
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    clustering: ClusteringSettings = field(default_factory=ClusteringSettings)
    cost: CostConfig = field(default_factory=CostConfig)
    run: RunSettings = field(default_factory=RunSettings)

    @property
    def d_min(self) -> float:
        if self.graph.d_min is not None:
            return self.graph.d_min
        if self.dataset.generator != "circles":
            raise ConfigError("graph.d_min is required for non-circles datasets")
        return 0.6 * (self.dataset.radius_outer - self.dataset.radius_inner)

    def output_dir(self) -> Path:
        return Path(self.run.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "results")

    def validate(self, check_files: bool = True) -> "RunConfig":
        ds = self.dataset
        if ds.generator not in ("circles", "csv"):
            raise ConfigError(f"dataset.generator must be 'circles' or 'csv', got {ds.generator!r}")
        if ds.generator == "csv":
            if not ds.path:
                raise ConfigError("dataset.path is required when dataset.generator = csv")
            if check_files and not Path(ds.path).is_file():
                raise ConfigError(f"dataset.path {ds.path!r} does not exist")
            if self.run.sweep:
                raise ConfigError("run.sweep needs a generated dataset")
        else:
            if ds.n < 4 or ds.n % 2:
                raise ConfigError("dataset.n must be even and >= 4")
            if not 0 < ds.radius_inner < ds.radius_outer:
                raise ConfigError("need 0 < dataset.radius_inner < dataset.radius_outer")
            if ds.noise_sd < 0:
                raise ConfigError("dataset.noise_sd must be >= 0")
        if self.d_min <= 0:
            raise ConfigError("graph.d_min must be > 0")
        if self.spectral.k < 1:
            raise ConfigError("spectral.k must be >= 1")
        if self.spectral.gamma <= 1:
            raise ConfigError("spectral.gamma must be > 1")
        if self.clustering.max_iters < 1 or self.clustering.tol <= 0:
            raise ConfigError("clustering.max_iters must be >= 1 and clustering.tol > 0")
        if self.run.repetitions < 1:
            raise ConfigError("run.repetitions must be >= 1")
        if self.run.workers < 1:
            raise ConfigError("run.workers must be >= 1")
        sweep = list(self.run.sweep)
        if sweep != sorted(set(sweep)):
            raise ConfigError("run.sweep values must be strictly ascending")
        if any(v < 4 or v % 2 for v in sweep):
            raise ConfigError("run.sweep values must be even and >= 4")
        if len(self.cost.classical) != 4:
            raise ConfigError("cost.classical needs four constants")
        return self

    def to_dict(self) -> dict:
        out = {}
        for section in fields(self):
            obj = getattr(self, section.name)
            if isinstance(obj, NoiseProfile):
                out[section.name] = obj.to_dict()
            else:
                out[section.name] = {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
        return out

    def to_text(self) -> str:
        lines = []
        for section, values in self.to_dict().items():
            for key, value in values.items():
                if value is None:
                    continue
                lines.append(f"{section}.{key} = {_format(value)}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, overrides: dict) -> "RunConfig":
        return _apply(self, overrides)


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(text: str, default, name: str):
    text = text.strip()
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if not text:
                return ()
            items = [t.strip() for t in text.split(",")]
            if name == "sweep":
                return tuple(int(t) for t in items)
            return tuple(float(t) for t in items)
        if name == "d_min":
            return None if text.lower() in ("", "auto", "none") else float(text)
        if name in ("path", "output_dir"):
            return text or None
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def _apply(cfg: RunConfig, settings: dict) -> RunConfig:
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    noise = cfg.noise.to_dict()
    new_mode = str(settings.get("noise.mode", cfg.noise.mode)).strip()
    if new_mode != cfg.noise.mode and new_mode == "quantum":
        # classical mode zeroed the precision fields; start from the quantum defaults
        noise = cfg.noise.with_mode("quantum").to_dict()
    touched_noise = False
    for dotted, raw in settings.items():
        if "." not in dotted:
            raise ConfigError(f"key {dotted!r} lacks a section prefix")
        section, key = dotted.split(".", 1)
        if section not in sections:
            raise ConfigError(f"unknown section {section!r}")
        if section == "noise":
            if key not in noise:
                raise ConfigError(f"unknown key {dotted!r}")
            noise[key] = raw.strip() if isinstance(raw, str) else raw
            touched_noise = True
            continue
        obj = sections[section]
        names = {f.name: f for f in fields(obj)}
        if key not in names:
            raise ConfigError(f"unknown key {dotted!r}")
        default = getattr(type(obj)(), key)
        value = raw if not isinstance(raw, str) else _convert(raw, default, key)
        sections[section] = replace(obj, **{key: value})
    if touched_noise:
        try:
            sections["noise"] = NoiseProfile.from_dict(noise)
        except ValueError as exc:
            raise ConfigError(f"bad noise settings: {exc}") from None
    return RunConfig(**sections)


def parse_config_text(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    settings = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = line.split("=", 1)
        settings[key.strip()] = value.strip()
    return _apply(base or RunConfig(), settings)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config_text(path.read_text())


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} must look like section.key=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out
