"""Pipeline configuration: one JSON document with a section per module.

Unknown keys are rejected and every section is validated before any work
starts. ``config_hash`` fingerprints only the fields that change descriptor
values, so descriptor files from different parameterisations never mix.
"""
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .descriptor import DescriptorConfig
from .errors import ConfigError
from .features import FeatureConfig
from .metrics import MetricsConfig
from .posegraph import PoseGraphConfig
from .registration import IcpConfig
from .retrieval import RetrievalConfig
from .synth import SynthConfig


@dataclass(frozen=True)
class SessionConfig:
    range_resolution: float = 0.25

    def __post_init__(self):
        if not self.range_resolution > 0:
            raise ConfigError("session.range_resolution must be positive")


SECTIONS = {
    "session": SessionConfig,
    "feature": FeatureConfig,
    "descriptor": DescriptorConfig,
    "retrieval": RetrievalConfig,
    "icp": IcpConfig,
    "posegraph": PoseGraphConfig,
    "metrics": MetricsConfig,
    "synth": SynthConfig,
}


@dataclass(frozen=True)
class PipelineConfig:
    session: SessionConfig = field(default_factory=SessionConfig)
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    descriptor: DescriptorConfig = field(default_factory=DescriptorConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    icp: IcpConfig = field(default_factory=IcpConfig)
    posegraph: PoseGraphConfig = field(default_factory=PoseGraphConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, section_cls in SECTIONS.items():
            values = data.get(name, {})
            if not isinstance(values, dict):
                raise ConfigError(f"config section {name!r} must be an object")
            allowed = {f.name for f in dataclasses.fields(section_cls)}
            bad = set(values) - allowed
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
            try:
                kwargs[name] = section_cls(**values)
            except TypeError as exc:
                raise ConfigError(f"section {name!r}: {exc}") from None
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}

    def replace(self, **sections) -> "PipelineConfig":
        """Return a copy with some sections replaced or patched with a dict of fields."""
        out = {}
        for name, value in sections.items():
            if isinstance(value, dict):
                value = dataclasses.replace(getattr(self, name), **value)
            out[name] = value
        return dataclasses.replace(self, **out)

    @property
    def config_hash(self) -> int:
        return descriptor_config_hash(self.feature, self.descriptor)


def descriptor_config_hash(feature: FeatureConfig, descriptor: DescriptorConfig) -> int:
    canon = json.dumps({"feature": dataclasses.asdict(feature),
                        "descriptor": dataclasses.asdict(descriptor)},
                       sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.blake2b(canon.encode(), digest_size=8).digest(), "little")


def load_config(path: Optional[str] = None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return PipelineConfig.from_dict(data)


def preset(name: str) -> PipelineConfig:
    """Load a bundled configuration, e.g. ``preset("synthetic")``."""
    try:
        text = resources.files("referee.presets").joinpath(f"{name}.json").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no bundled preset named {name!r}") from None
    return PipelineConfig.from_dict(json.loads(text))
