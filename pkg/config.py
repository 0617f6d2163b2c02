"""
Run configuration: model hyperparameters, optimizer settings and harness options.

Config files are either flat ``key=value`` text (``#`` starts a comment) or
JSON, flat or nested. Flat keys are routed to whichever section owns them;
``model.width`` style dotted keys name the section explicitly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import ConfigError

QAModeName = Literal["multiple_choice", "open_ended"]
FusionName = Literal["q_hg", "q_v", "q_v_hg"]
ComponentsName = Literal["full", "action_only", "relation_only"]
MatchScope = Literal["frame", "video"]
MapVariant = Literal["all_point", "non_interpolated", "eleven_point"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ModelConfig(_Section):
    """Architecture hyperparameters; vocabulary sizes of 0 are filled in from the dataset."""
    width: int = Field(16, ge=1)
    num_layers: int = Field(2, ge=0)
    num_heads: int = Field(2, ge=1)
    ff_multiplier: int = Field(2, ge=1)
    coattention_layers: int = Field(2, ge=0)
    num_frames: int = Field(4, ge=1)
    grid_h: int = Field(2, ge=1)
    grid_w: int = Field(2, ge=1)
    feature_dim: int = Field(32, ge=1)
    temporal_halving: bool = True
    max_actions: int = Field(2, ge=1)
    max_relations: int = Field(3, ge=1)
    num_actions: int = Field(0, ge=0)
    num_predicates: int = Field(0, ge=0)
    num_answers: int = Field(0, ge=0)
    num_words: int = Field(0, ge=0)
    qa_mode: QAModeName = "multiple_choice"
    num_choices: int = Field(4, ge=0)
    max_question_len: int = Field(48, ge=2)
    dropout: float = Field(0.1, ge=0.0, lt=1.0)
    position_kind: Literal["learned", "sinusoidal"] = "learned"
    init_std: float = Field(0.02, gt=0.0)
    fusion: FusionName = "q_hg"
    components: ComponentsName = "full"
    gt_graph: bool = False

    @model_validator(mode="after")
    def _check_heads(self) -> "ModelConfig":
        if self.width % self.num_heads:
            raise ValueError(f"width {self.width} is not divisible by num_heads {self.num_heads}")
        if self.temporal_halving and self.num_frames % 2:
            raise ValueError(f"temporal halving needs an even frame count, got {self.num_frames}")
        return self

    @classmethod
    def toy(cls, **overrides: Any) -> "ModelConfig":
        """d=16, L=2, h=2, T=4, N=2, M=3 on a 2x2 grid with one video token row per frame."""
        values: Dict[str, Any] = dict(temporal_halving=False)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def benchmark(cls, **overrides: Any) -> "ModelConfig":
        """d=768, L=5, h=8, T=16, N=3, M=8 over 7x7x2048 backbone features."""
        values = dict(width=768, num_layers=5, num_heads=8, ff_multiplier=4, num_frames=16,
                      grid_h=7, grid_w=7, feature_dim=2048, max_actions=3, max_relations=8,
                      max_question_len=128, temporal_halving=True)
        values.update(overrides)
        return cls(**values)

    @property
    def ff_hidden(self) -> int:
        return self.width * self.ff_multiplier

    @property
    def adapted_frames(self) -> int:
        return self.num_frames // 2 if self.temporal_halving else self.num_frames

    @property
    def video_tokens(self) -> int:
        return 1 + self.adapted_frames * self.grid_h * self.grid_w

    @property
    def use_actions(self) -> bool:
        return self.components in ("full", "action_only")

    @property
    def use_relations(self) -> bool:
        return self.components in ("full", "relation_only")

    @property
    def graph_length(self) -> int:
        per_frame = (self.max_actions if self.use_actions else 0) + \
                    (self.max_relations if self.use_relations else 0)
        return 1 + per_frame * self.num_frames

    @property
    def answer_classes(self) -> int:
        return self.num_choices if self.qa_mode == "multiple_choice" else self.num_answers


class OptimizerConfig(_Section):
    lr: float = Field(1e-3, ge=0.0)
    warmup_fraction: float = Field(0.1, ge=0.0, lt=1.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.0, ge=0.0)
    clip_norm: Optional[float] = Field(None, gt=0.0)
    schedule: Literal["linear", "constant"] = "linear"


class RunConfig(_Section):
    """Everything one ``train``/``eval`` invocation needs besides the seed-derived state."""
    train_path: Optional[str] = None
    val_path: Optional[str] = None
    synth: Optional[str] = None
    noise_sigma: float = Field(0.0, ge=0.0)
    model: ModelConfig = Field(default_factory=ModelConfig.toy)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    batch_size: int = Field(8, ge=1)
    max_epochs: int = Field(100, ge=0)
    max_steps: Optional[int] = Field(None, ge=1)
    patience: int = Field(10, ge=1)
    eval_every: int = Field(1, ge=1)
    seed: int = 0
    match_scope: MatchScope = "frame"
    map_variant: MapVariant = "all_point"
    phi_weight: float = Field(1.0, ge=0.0)

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy used in reports and checkpoints."""
        return self.model_dump(mode="json")


# Ablation switches accepted as booleans in config files.
FLAG_ALIASES: Dict[str, tuple[str, Any]] = {
    "q_plus_v": ("fusion", "q_v"),
    "q_plus_v_plus_hg": ("fusion", "q_v_hg"),
    "action_only": ("components", "action_only"),
    "relation_only": ("components", "relation_only"),
}

_SECTIONS = {"model": ModelConfig, "optimizer": OptimizerConfig}


def _truthy(value: Any) -> bool:
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _route(flat: Dict[str, Any]) -> Dict[str, Any]:
    """Nest flat keys under the section that declares them."""
    nested: Dict[str, Any] = {"model": {}, "optimizer": {}}
    for key, value in flat.items():
        if key in FLAG_ALIASES:
            if _truthy(value):
                field, choice = FLAG_ALIASES[key]
                nested["model"][field] = choice
            continue
        section, _, name = key.rpartition(".")
        if section:
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section {section!r} in key {key!r}")
            nested[section][name] = value
        elif key in ModelConfig.model_fields:
            nested["model"][key] = value
        elif key in OptimizerConfig.model_fields:
            nested["optimizer"][key] = value
        elif key in RunConfig.model_fields and key not in _SECTIONS:
            nested[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return nested


def _flatten(raw: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in raw.items():
        if key in _SECTIONS and isinstance(value, dict):
            flat.update({f"{key}.{k}": v for k, v in value.items()})
        else:
            flat[key] = value
    return flat


def parse_key_values(text: str) -> Dict[str, Any]:
    """
    Parse ``key = value`` lines; ``none``/``null`` become None.

    Raises:
        ConfigError: On a line without ``=`` or a repeated key.
    """
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = None if value.lower() in ("none", "null") else value
    return values


def build_run_config(values: Dict[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """
    Merge ``values`` (flat, dotted or nested) over ``base`` and validate.

    Raises:
        ConfigError: On unknown keys or values pydantic rejects.
    """
    nested = _route(_flatten(values))
    merged = (base or RunConfig()).model_dump()
    for section in _SECTIONS:
        merged[section].update(nested.pop(section))
    merged.update(nested)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path: Union[str, Path], base: Optional[RunConfig] = None) -> RunConfig:
    """Read a ``key=value`` or JSON config file; see ``build_run_config``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    else:
        values = parse_key_values(text)
    return build_run_config(values, base)
