"""
Dataset resolution for a run: synthetic presets or dataset files, vocabulary
sizes filled into the model config, and the cross-checks between the two.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from config import RunConfig
from errors import ConfigError, SchemaError
from models.pipeline import Example, build_examples
from models.question import compose_qa
from situations.loader import load_dataset, save_dataset
from situations.records import SituationDataset
from situations.synth import SYNTH_PRESETS, SynthSpec, split_dataset, synth_generate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAIN_FILE = "train.json"
VAL_FILE = "val.json"


@dataclass
class PreparedRun:
    config: RunConfig
    train: SituationDataset
    val: SituationDataset
    train_examples: List[Example]
    val_examples: List[Example]


def synth_spec(name: str) -> SynthSpec:
    try:
        return SYNTH_PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown synthetic preset {name!r}; choose from {sorted(SYNTH_PRESETS)}") from None


def generate_files(preset: str, seed: int, out_dir: PathLike) -> Dict[str, Path]:
    """Write the train/val split of a synthetic preset as dataset files."""
    spec = synth_spec(preset)
    train, val = split_dataset(synth_generate(seed, spec), spec.val_episodes)
    out_dir = Path(out_dir)
    written = {"train": save_dataset(train, out_dir / TRAIN_FILE)}
    if val.qa:
        written["val"] = save_dataset(val, out_dir / VAL_FILE)
    return written


def load_datasets(cfg: RunConfig) -> Tuple[SituationDataset, SituationDataset]:
    """
    Resolve the train and validation datasets named by ``cfg``.

    Without a validation source the training set doubles as validation.

    Raises:
        ConfigError: If neither a synthetic preset nor a train path is given.
    """
    model = cfg.model
    if cfg.synth:
        spec = synth_spec(cfg.synth)
        train, val = split_dataset(synth_generate(cfg.seed, spec), spec.val_episodes)
    elif cfg.train_path:
        train = load_dataset(cfg.train_path, model.max_actions, model.max_relations)
        val = load_dataset(cfg.val_path, model.max_actions, model.max_relations) if cfg.val_path else None
    else:
        raise ConfigError("config names no dataset: set 'synth' or 'train_path'")
    if val is None or not val.qa:
        logger.warning("no validation split; early stopping monitors the training set")
        val = train
    if val.vocab.to_dict() != train.vocab.to_dict():
        raise ConfigError("train and validation datasets use different vocabularies")
    return train, val


def load_eval_dataset(cfg: RunConfig, path: Optional[PathLike] = None) -> SituationDataset:
    """The explicit ``path``, else the validation source recorded in ``cfg``."""
    if path is not None:
        return load_dataset(path, cfg.model.max_actions, cfg.model.max_relations)
    return load_datasets(cfg)[1]


def _infer_qa_shape(dataset: SituationDataset) -> Optional[Tuple[str, int]]:
    modes = {s.mode for s in dataset.qa}
    if len(modes) > 1:
        raise SchemaError("dataset mixes multiple-choice and open-ended questions")
    choices = {s.num_choices for s in dataset.qa}
    if len(choices) > 1:
        raise SchemaError(f"dataset mixes choice counts {sorted(choices)}")
    if not modes:
        return None
    return modes.pop(), choices.pop()


def resolve_model_config(cfg: RunConfig, dataset: SituationDataset) -> RunConfig:
    """
    Fill vocabulary sizes and the QA shape from ``dataset`` into the model config.

    Raises:
        ConfigError: If a size set in the config disagrees with the dataset.
    """
    vocab = dataset.vocab
    sizes = {
        "num_actions": len(vocab.actions),
        "num_predicates": len(vocab.predicates),
        "num_answers": len(vocab.answers),
        "num_words": len(vocab.words),
    }
    model = cfg.model
    for name, size in sizes.items():
        configured = getattr(model, name)
        if configured and configured != size:
            raise ConfigError(f"{name}={configured} in config but the dataset vocabulary has {size}")
    update = dict(sizes)
    shape = _infer_qa_shape(dataset)
    if shape is not None:
        mode, num_choices = shape
        update.update(qa_mode=mode, num_choices=num_choices if mode == "multiple_choice" else 0)
    return cfg.model_copy(update={"model": model.model_copy(update=update)})


def validate_dataset(cfg: RunConfig, dataset: SituationDataset) -> None:
    """
    Raises:
        ConfigError: On frame counts, set sizes or question lengths the model cannot take.
    """
    model = cfg.model
    for clip_id, ann in dataset.annotations.items():
        if ann.num_frames != model.num_frames:
            raise ConfigError(f"clip {clip_id!r} has T={ann.num_frames}, model expects {model.num_frames}")
        widest_a = max((len(f) for f in ann.actions), default=0)
        widest_r = max((len(f) for f in ann.relations), default=0)
        if widest_a > model.max_actions:
            raise ConfigError(f"clip {clip_id!r}: {widest_a} actions in a frame exceed max_actions={model.max_actions}")
        if widest_r > model.max_relations:
            raise ConfigError(
                f"clip {clip_id!r}: {widest_r} relations in a frame exceed max_relations={model.max_relations}")
    for sample in dataset.qa:
        length = len(compose_qa(sample.question, sample.choices, dataset.vocab.words, model.qa_mode))
        if length > model.max_question_len:
            raise ConfigError(
                f"clip {sample.clip_id!r}: composed question has {length} tokens, "
                f"max_question_len={model.max_question_len}")


def prepare_run(cfg: RunConfig) -> PreparedRun:
    """Everything ``train`` needs before the first forward pass; all checks run here."""
    train, val = load_datasets(cfg)
    if not train.qa:
        raise ConfigError("training dataset has no QA samples")
    cfg = resolve_model_config(cfg, train)
    for dataset in (train, val) if val is not train else (train,):
        validate_dataset(cfg, dataset)
    train_examples = build_examples(train, cfg.model, cfg.noise_sigma)
    val_examples = train_examples if val is train else build_examples(val, cfg.model, cfg.noise_sigma)
    logger.debug("prepared %d train / %d val examples", len(train_examples), len(val_examples))
    return PreparedRun(cfg, train, val, train_examples, val_examples)


def prepare_eval(cfg: RunConfig, path: Optional[PathLike] = None) -> Tuple[SituationDataset, List[Example]]:
    """Load and check an evaluation dataset against a trained model's config."""
    dataset = load_eval_dataset(cfg, path)
    checked = resolve_model_config(cfg, dataset)
    if checked.model != cfg.model:
        raise ConfigError("evaluation dataset does not match the checkpoint's vocabulary or QA shape")
    validate_dataset(cfg, dataset)
    return dataset, build_examples(dataset, cfg.model, cfg.noise_sigma)
