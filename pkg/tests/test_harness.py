import json
import logging

import numpy as np
import pytest

from config import ModelConfig
from errors import ConfigError, ContractError, ReportError, SchemaError
from harness.checkpoint import decode_checkpoint, encode_checkpoint, load_model, read_checkpoint, write_checkpoint
from harness.dump import build_dump, dump_to_json, read_dump, write_dump
from harness.evaluation import build_report, dump_hypergraph, evaluate, evaluate_map, evaluate_vqa
from harness.metrics import average_precision, mean_average_precision, vqa_accuracy
from harness.preparation import TRAIN_FILE, VAL_FILE, generate_files, prepare_eval, prepare_run
from harness.report import read_report, render_markdown, report_to_json, write_report
from models.hypergraph_decoder import SetEntry
from models.pipeline import SituationHyperGraphModel
from situations.loader import load_dataset


class TestMetrics:
    def test_accuracy_by_category(self):
        report = vqa_accuracy([0, 1, 2, 3], [0, 1, 0, 0], ["a", "b", None, "a"])
        assert report.overall == 0.5
        assert list(report.per_category) == ["a", "b", "uncategorized"]
        assert report.per_category["a"].accuracy == 0.5
        assert report.per_category["b"].accuracy == 1.0
        assert report.per_category["uncategorized"].total == 1

    def test_untagged_samples_form_one_bucket(self):
        report = vqa_accuracy([1, 1], [1, 0])
        assert list(report.per_category) == ["all"]
        assert report.per_category["all"].correct == 1

    def test_accuracy_errors(self):
        with pytest.raises(ReportError):
            vqa_accuracy([], [])
        with pytest.raises(ContractError):
            vqa_accuracy([0], [0, 1])

    @pytest.mark.parametrize("variant, expected", [
        ("all_point", 2 / 3),
        ("non_interpolated", 7 / 12),
        ("eleven_point", 2 / 3),
    ])
    def test_average_precision_variants(self, variant, expected):
        ap = average_precision([0.9, 0.8, 0.7, 0.6], [False, True, True, False], 2, variant)
        assert ap == pytest.approx(expected)

    def test_one_miss_between_two_hits(self):
        assert average_precision([0.9, 0.8, 0.7], [True, False, True], 2) == pytest.approx((1 + 2 / 3) / 2)

    def test_perfect_ranking(self):
        assert average_precision([0.2, 0.9], [False, True], 1) == 1.0

    def test_average_precision_edge_cases(self):
        assert average_precision([], [], 3) == 0.0
        with pytest.raises(ReportError):
            average_precision([0.5], [True], 0)
        with pytest.raises(ContractError):
            average_precision([0.5], [True], 1, "voc2012")

    def test_mean_average_precision(self):
        perfect = mean_average_precision([{0: 0.9}, {0: 0.4, 1: 0.8}], [[0], [1]], num_classes=3)
        assert perfect.mean_ap == 1.0
        assert set(perfect.per_class) == {0, 1}
        swapped = mean_average_precision([{0: 0.3}, {0: 0.9}], [[0], [1]], num_classes=3)
        assert swapped.per_class == {0: pytest.approx(0.5), 1: 0.0}
        assert swapped.mean_ap == pytest.approx(0.25)

    def test_mean_average_precision_errors(self):
        with pytest.raises(ReportError):
            mean_average_precision([{}, {}], [[], []], num_classes=2)
        with pytest.raises(ContractError):
            mean_average_precision([{}], [[0], [1]], num_classes=2)


class TestCheckpoint:
    def test_round_trip_restores_predictions(self, toy_model, tiny_run, tmp_path):
        path = write_checkpoint(tmp_path / "model.shgc", toy_model, tiny_run.config, loss_curve=[2.5, 1.5])
        model, config, checkpoint = load_model(path)
        assert config == tiny_run.config
        assert checkpoint.meta["loss_curve"] == [2.5, 1.5]
        assert not model.training
        for name, value in toy_model.state_dict().items():
            np.testing.assert_array_equal(checkpoint.tensors[name], value)
        toy_model.eval()
        example = tiny_run.val_examples[0]
        np.testing.assert_array_equal(model(example, compute_loss=False).answer_logits.data,
                                      toy_model(example, compute_loss=False).answer_logits.data)

    def test_encoding_is_deterministic(self, toy_model, tiny_run, tmp_path):
        first = write_checkpoint(tmp_path / "a.shgc", toy_model, tiny_run.config).read_bytes()
        second = write_checkpoint(tmp_path / "b.shgc", toy_model, tiny_run.config).read_bytes()
        assert first == second
        assert first[:4] == b"SHGC" and first[4] == 1
        assert encode_checkpoint(decode_checkpoint(first)) == first

    @pytest.mark.parametrize("corrupt", [
        lambda p: b"XXXX" + p[4:],
        lambda p: p[:4] + bytes([2]) + p[5:],
        lambda p: p[:-8],
        lambda p: p + b"\x00" * 8,
        lambda p: p[:6],
    ])
    def test_corrupt_payloads(self, toy_model, tiny_run, tmp_path, corrupt):
        payload = write_checkpoint(tmp_path / "m.shgc", toy_model, tiny_run.config).read_bytes()
        with pytest.raises(SchemaError):
            decode_checkpoint(corrupt(payload))

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(SchemaError):
            read_checkpoint(tmp_path / "none.shgc")

    def test_shape_mismatch_on_load(self, toy_model, tiny_run, tmp_path):
        path = write_checkpoint(tmp_path / "m.shgc", toy_model, tiny_run.config)
        checkpoint = read_checkpoint(path)
        checkpoint.tensors["answer_head.output.bias"] = np.zeros(5)
        with pytest.raises(SchemaError):
            toy_model.load_state_dict(checkpoint.tensors)


class TestDump:
    def test_build_dump_resolves_labels(self, tiny_dataset, tmp_path):
        vocab = tiny_dataset.vocab
        actions = [[SetEntry(0, 0.9, 2)], []]
        relations = [[SetEntry(1, 0.6, 1)], [SetEntry(0, 0.7, 3), SetEntry(2, 0.5, 1)]]
        dump = build_dump("clip00001", actions, relations, vocab)
        assert dump.num_frames == 2
        assert dump.mean_duplicates == pytest.approx((1 + 2) / 2)
        relation = dump.frames[0][1]
        assert relation.kind == "relation"
        assert relation.label == vocab.predicates.label(1)
        assert "--".join([relation.triplet.subject, relation.triplet.relation, relation.triplet.object]) \
            == relation.label
        assert dump.frames[0][0].triplet is None

        path = write_dump(tmp_path / "hypergraph_clip00001.json", dump)
        assert read_dump(path) == dump
        assert "triplet" not in json.loads(dump_to_json(dump))["frames"][0][0]

    def test_action_only_dump(self, tiny_dataset):
        dump = build_dump("c", [[SetEntry(3, 0.8, 1)]], None, tiny_dataset.vocab)
        assert [e.kind for e in dump.frames[0]] == ["action"]

    def test_invalid_dump_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"clip_id": "x"}), encoding="utf-8")
        with pytest.raises(SchemaError):
            read_dump(bad)
        with pytest.raises(SchemaError):
            read_dump(tmp_path / "missing.json")


class TestEvaluation:
    def test_evaluate_restores_training_mode(self, toy_model, tiny_run):
        result = evaluate(toy_model, tiny_run.val_examples)
        assert toy_model.training
        assert result.accuracy.total == 4
        assert result.action_map is not None and result.relation_map is not None
        assert 0.0 <= result.action_map.mean_ap <= 1.0
        assert set(result.graphs) == {e.clip_id for e in tiny_run.val_examples}
        assert result.mean_duplicates >= 0.0
        assert evaluate_vqa(toy_model, tiny_run.val_examples).correct == result.accuracy.correct

    def test_evaluate_needs_examples(self, toy_model):
        with pytest.raises(ReportError):
            evaluate(toy_model, [])

    def test_ablated_kind_has_no_map(self, tiny_run):
        cfg = tiny_run.config.model.model_copy(update={"components": "action_only"})
        model = SituationHyperGraphModel(cfg, seed=0)
        result = evaluate(model, tiny_run.val_examples)
        assert result.relation_map is None
        with pytest.raises(ReportError):
            evaluate_map(model, tiny_run.val_examples, "relation")

    def test_dump_hypergraph(self, toy_model, tiny_run):
        clip_id = tiny_run.val_examples[0].clip_id
        dump = dump_hypergraph(toy_model, tiny_run.val_examples, clip_id, tiny_run.val.vocab)
        assert dump.clip_id == clip_id and dump.num_frames == 4
        with pytest.raises(SchemaError):
            dump_hypergraph(toy_model, tiny_run.val_examples, "nope", tiny_run.val.vocab)

    def test_ground_truth_graph_cannot_be_dumped(self, tiny_run):
        cfg = tiny_run.config.model.model_copy(update={"gt_graph": True})
        model = SituationHyperGraphModel(cfg, seed=0)
        example = tiny_run.val_examples[0]
        with pytest.raises(ReportError):
            dump_hypergraph(model, [example], example.clip_id, tiny_run.val.vocab)


class TestReport:
    def test_json_and_markdown(self, toy_model, tiny_run, tmp_path):
        result = evaluate(toy_model, tiny_run.val_examples)
        report = build_report(result, [2.0, 1.25], tiny_run.config)
        path = write_report(tmp_path / "metrics.json", report)
        assert read_report(path) == report
        assert path.read_text(encoding="utf-8") == report_to_json(report)
        assert json.loads(report_to_json(report))["seed"] == tiny_run.config.seed

        markdown = render_markdown(report)
        assert markdown.startswith("# Metrics report\n")
        assert "## Accuracy by category" in markdown
        assert "overall accuracy" in markdown
        assert "2.0000 / 1.2500" in markdown
        for category in report.per_category:
            assert category in markdown

    def test_read_rejects_foreign_json(self, tmp_path):
        path = tmp_path / "metrics.json"
        path.write_text(json.dumps({"accuracy": 1.0}), encoding="utf-8")
        with pytest.raises(SchemaError):
            read_report(path)


class TestPreparation:
    def test_fixture_dataset_run(self, make_run_config, star_fixture_path, caplog):
        with caplog.at_level(logging.WARNING):
            run = prepare_run(make_run_config(synth=None, train_path=str(star_fixture_path)))
        assert "no validation split" in caplog.text
        model = run.config.model
        assert (model.num_actions, model.num_predicates, model.num_words) == (5, 8, 33)
        assert run.val is run.train
        assert len(run.train_examples) == 6
        assert run.train_examples[0].features.shape == (4, 2, 2, 32)

    def test_generated_files_load_back(self, tmp_path):
        written = generate_files("tiny", 3, tmp_path)
        assert written == {"train": tmp_path / TRAIN_FILE, "val": tmp_path / VAL_FILE}
        assert len(load_dataset(written["train"]).clip_ids) == 8
        assert len(load_dataset(written["val"]).clip_ids) == 4

    @pytest.mark.parametrize("overrides", [
        dict(synth=None),
        dict(synth="huge"),
        dict(model=ModelConfig.toy(dropout=0.0, num_actions=7)),
        dict(model=ModelConfig.toy(dropout=0.0, num_frames=6)),
        dict(model=ModelConfig.toy(dropout=0.0, max_question_len=10)),
        dict(model=ModelConfig.toy(dropout=0.0, max_actions=1)),
    ])
    def test_run_config_errors(self, make_run_config, overrides):
        with pytest.raises(ConfigError):
            prepare_run(make_run_config(**overrides))

    def test_mismatched_vocabularies(self, make_run_config, star_fixture_path, tmp_path):
        written = generate_files("tiny", 3, tmp_path)
        cfg = make_run_config(synth=None, train_path=str(star_fixture_path), val_path=str(written["val"]))
        with pytest.raises(ConfigError):
            prepare_run(cfg)

    def test_eval_dataset_must_match_checkpoint(self, tiny_run, star_fixture_path):
        with pytest.raises(ConfigError):
            prepare_eval(tiny_run.config, star_fixture_path)
        dataset, examples = prepare_eval(tiny_run.config)
        assert len(examples) == 4
        assert dataset.clip_ids == tiny_run.val.clip_ids
