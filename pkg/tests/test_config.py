import json

import pytest

from config import ModelConfig, RunConfig, build_run_config, load_config, parse_key_values
from errors import ConfigError


class TestModelConfig:
    def test_toy_defaults(self):
        cfg = ModelConfig.toy()
        assert (cfg.width, cfg.num_layers, cfg.num_heads, cfg.num_frames) == (16, 2, 2, 4)
        assert (cfg.max_actions, cfg.max_relations) == (2, 3)
        assert cfg.video_tokens == 1 + 4 * 2 * 2
        assert not cfg.temporal_halving
        assert cfg.graph_length == 21

    def test_heads_must_divide_width(self):
        with pytest.raises(ValueError):
            ModelConfig.toy(width=10, num_heads=3)

    def test_assignment_is_validated(self):
        cfg = ModelConfig.toy()
        with pytest.raises(ValueError):
            cfg.dropout = 1.5

    def test_components_and_answer_classes(self):
        relation_only = ModelConfig.toy(components="relation_only")
        assert not relation_only.use_actions and relation_only.use_relations
        assert relation_only.graph_length == 1 + 3 * 4
        assert ModelConfig.toy(qa_mode="open_ended", num_answers=7).answer_classes == 7
        assert ModelConfig.toy().answer_classes == 4

    def test_without_halving(self):
        cfg = ModelConfig.toy(temporal_halving=False, num_frames=3)
        assert cfg.adapted_frames == 3 and cfg.video_tokens == 13

    def test_presets_choose_time_adapter(self):
        assert ModelConfig.benchmark().temporal_halving
        assert ModelConfig.toy(temporal_halving=True).adapted_frames == 2
        assert not RunConfig().model.temporal_halving


class TestKeyValues:
    def test_parse_comments_and_nulls(self):
        values = parse_key_values("width = 32  # wider\n\n# note\nmax_steps=none\nlr=0.01\n")
        assert values == {"width": "32", "max_steps": None, "lr": "0.01"}

    @pytest.mark.parametrize("text", ["width 32", "= 3", "seed=1\nseed=2"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_key_values(text)


class TestBuildRunConfig:
    def test_flat_keys_route_to_sections(self):
        cfg = build_run_config({"width": "32", "num_heads": "4", "lr": "0.01", "batch_size": "2", "seed": "9"})
        assert cfg.model.width == 32 and cfg.model.num_heads == 4
        assert cfg.optimizer.lr == 0.01
        assert cfg.batch_size == 2 and cfg.seed == 9

    def test_dotted_and_nested_keys(self):
        dotted = build_run_config({"model.dropout": 0.0, "optimizer.clip_norm": 1.0})
        nested = build_run_config({"model": {"dropout": 0.0}, "optimizer": {"clip_norm": 1.0}})
        assert dotted == nested
        assert dotted.model.dropout == 0.0 and dotted.optimizer.clip_norm == 1.0

    def test_ablation_flags(self):
        cfg = build_run_config({"q_plus_v_plus_hg": "true", "action_only": "1"})
        assert cfg.model.fusion == "q_v_hg"
        assert cfg.model.components == "action_only"
        assert build_run_config({"q_plus_v": "false"}).model.fusion == "q_hg"

    def test_overrides_keep_base_values(self):
        base = RunConfig(seed=4, model=ModelConfig.toy(width=32))
        cfg = build_run_config({"patience": 3}, base)
        assert cfg.seed == 4 and cfg.model.width == 32 and cfg.patience == 3

    @pytest.mark.parametrize("values", [
        {"widht": 16},
        {"trainer.lr": 0.1},
        {"width": "wide"},
        {"match_scope": "clip"},
        {"width": 10, "num_heads": 3},
        {"patience": 0},
    ])
    def test_invalid_values(self, values):
        with pytest.raises(ConfigError):
            build_run_config(values)

    def test_echo_is_json_ready(self):
        echo = RunConfig(synth="tiny").echo()
        assert json.loads(json.dumps(echo)) == echo
        assert RunConfig.model_validate(echo) == RunConfig(synth="tiny")


class TestLoadConfig:
    def test_key_value_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("synth = tiny\nmax_epochs = 3\nrelation_only = yes\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.synth == "tiny" and cfg.max_epochs == 3
        assert cfg.model.components == "relation_only"

    def test_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seed": 42, "model": {"width": 32, "num_heads": 4}}), encoding="utf-8")
        cfg = load_config(path)
        assert cfg.seed == 42 and cfg.model.width == 32

    def test_file_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.cfg")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(broken)
