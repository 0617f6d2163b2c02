"""Shared fixtures: a tiny synthetic split, the hand-written STAR-style file and toy models."""
import json
from pathlib import Path

import numpy as np
import pytest

from config import ModelConfig, RunConfig
from harness.preparation import prepare_run
from models.pipeline import SituationHyperGraphModel
from situations.synth import SYNTH_PRESETS, synth_generate

FIXTURES = Path(__file__).parent / "fixtures"
TINY_SEED = 3


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def star_fixture_path() -> Path:
    return FIXTURES / "star_fixture.json"


@pytest.fixture
def star_raw(star_fixture_path) -> dict:
    return json.loads(star_fixture_path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def tiny_dataset():
    return synth_generate(TINY_SEED, SYNTH_PRESETS["tiny"])


def tiny_run_config(**overrides) -> RunConfig:
    model = overrides.pop("model", ModelConfig.toy(dropout=0.0))
    values = dict(synth="tiny", seed=TINY_SEED, model=model, batch_size=4, max_epochs=1)
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture
def make_run_config():
    return tiny_run_config


@pytest.fixture(scope="session")
def tiny_run():
    """Prepared tiny split (8 train / 4 val episodes) with resolved vocabulary sizes."""
    return prepare_run(tiny_run_config())


@pytest.fixture
def toy_model(tiny_run) -> SituationHyperGraphModel:
    return SituationHyperGraphModel(tiny_run.config.model, seed=0)


@pytest.fixture
def quiet_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SHGVQA_QUIET", "1")
    monkeypatch.setenv("SHGVQA_OUTPUTS", str(tmp_path / "outputs"))
