"""Run configuration loaded from a JSON file.

One seed governs all randomness; it overrides the seeds of the nested
dataset and training sections. Missing keys take their defaults.
"""
import json
import os
from dataclasses import asdict, dataclass, field, fields

from .csd import CsdParams
from .errors import ConfigError
from .mlp import TrainConfig
from .phantom import DatasetConfig

# 72 of 567 base voxels, i.e. 7,272 of 57,267 samples
DEFAULT_TEST_FRACTION = 7272 / 57267


@dataclass
class Paths:
    scheme: str = "out/scheme"
    dataset: str = "out/dataset.jsonl"
    train: str = "out/train.jsonl"
    test: str = "out/test.jsonl"
    model: str = "out/model.json"
    reports: str = "out/reports"
    figures: str = "out/figures"

    def resolve(self, base):
        for f in fields(self):
            value = getattr(self, f.name)
            if not os.path.isabs(value):
                setattr(self, f.name, os.path.normpath(os.path.join(base, value)))


@dataclass
class RunConfig:
    seed: int = 0
    paths: Paths = field(default_factory=Paths)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    csd: CsdParams = field(default_factory=CsdParams)
    test_fraction: float = DEFAULT_TEST_FRACTION
    exclude_groups: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")
        self.set_seed(self.seed)

    def set_seed(self, seed):
        self.seed = int(seed)
        self.dataset.seed = self.seed
        self.train.seed = self.seed

    def to_dict(self):
        d = asdict(self)
        d["train"]["dims"] = list(self.train.dims)
        return d


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc


def from_dict(data, base_dir="."):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    paths = _section(Paths, data.get("paths"), "paths")
    paths.resolve(base_dir)
    try:
        return RunConfig(
            seed=int(data.get("seed", 0)),
            paths=paths,
            dataset=_section(DatasetConfig, data.get("dataset"), "dataset"),
            train=_section(TrainConfig, data.get("train"), "train"),
            csd=_section(CsdParams, data.get("csd"), "csd"),
            test_fraction=float(data.get("test_fraction", DEFAULT_TEST_FRACTION)),
            exclude_groups=[int(g) for g in data.get("exclude_groups", [])],
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc


def load(path=None):
    """Read a config file; ``None`` gives the defaults relative to the cwd."""
    if path is None:
        return from_dict({}, os.getcwd())
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return from_dict(data, os.path.dirname(os.path.abspath(path)))
