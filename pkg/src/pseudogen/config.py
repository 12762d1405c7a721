"""Pipeline configuration, loaded from a YAML file with nested sections."""
from __future__ import annotations

import dataclasses
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .classifier import MlpConfig, TrainConfig
from .detector import DetectorConfig, DetectorError
from .errors import ConfigError
from .generation import STRATEGIES, LlmConfig

BASE_BUDGET = 100
LARGE_DATASET_ROWS = 3000


@dataclass
class DataConfig:
    train_csv: str = "data/train.csv"
    test_csv: str = "data/test.csv"
    label_column: Optional[str] = "label"
    # 0 pseudo-labels the whole test set and evaluates on it too; a fraction in
    # (0, 1) pseudo-labels that share of test rows and evaluates on the rest
    pseudo_split: float = 0.0
    split_seed: int = 0


@dataclass
class RarityConfig:
    p2: float = 0.1
    ecdf_population: str = "all"  # all | train


@dataclass
class GenerationConfig:
    strategy: str = "mock"
    count: Optional[int] = None  # None: 100, plus 100 when the data exceed 3000 rows
    sigma: float = 0.1
    mask_fraction: float = 0.3
    normal_refs: int = 20
    token_budget: int = 12000
    llm: LlmConfig = field(default_factory=LlmConfig)


@dataclass
class SelectionConfig:
    delta: Optional[float] = None  # None: median pairwise squared distance
    relax_step: float = 0.25
    target_count: Optional[int] = None  # None: the generation budget
    range_tolerance: float = 0.1
    paper_literal_scos: bool = False
    skip_selection: bool = False
    skip_generation: bool = False


@dataclass
class ClassifierConfig:
    mlp: MlpConfig = field(default_factory=MlpConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class PipelineConfig:
    data: DataConfig = field(default_factory=DataConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    p1: float = 5.0
    rarity: RarityConfig = field(default_factory=RarityConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    f1_threshold: float = 0.5
    seed: int = 0
    n_seeds: int = 5
    output_dir: str = "runs/default"

    def validate(self) -> "PipelineConfig":
        if self.generation.strategy not in STRATEGIES:
            raise ConfigError(f"unknown generation strategy {self.generation.strategy!r}; choose from {STRATEGIES}")
        if self.generation.count is not None and self.generation.count < 1 and not self.selection.skip_generation:
            raise ConfigError("generation count must be >= 1")
        if not 0 < self.p1 < 100:
            raise ConfigError("p1 must lie in (0, 100)")
        if not 0 < self.rarity.p2 <= 1:
            raise ConfigError("p2 must lie in (0, 1]")
        if self.rarity.ecdf_population not in ("all", "train"):
            raise ConfigError("ecdf_population must be 'all' or 'train'")
        if not 0 <= self.data.pseudo_split < 1:
            raise ConfigError("pseudo_split must lie in [0, 1)")
        if self.selection.delta is not None and self.selection.delta <= 0:
            raise ConfigError("delta must be positive")
        if not self.selection.relax_step > 0:
            raise ConfigError("relax_step must be positive")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **sections) -> "PipelineConfig":
        return dataclasses.replace(self, **sections)


def generation_budget(n_rows: int) -> int:
    return BASE_BUDGET + (BASE_BUDGET if n_rows > LARGE_DATASET_ROWS else 0)


def _build(cls, data, path=""):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path or 'root'}' must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{path or 'root'}': {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        sub = f.default_factory if f.default_factory is not dataclasses.MISSING else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[name] = _build(sub, value, f"{path}.{name}".lstrip("."))
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError, DetectorError) as exc:
        raise ConfigError(f"invalid section '{path or 'root'}': {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    return _build(PipelineConfig, data).validate()


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False), encoding="utf-8")
