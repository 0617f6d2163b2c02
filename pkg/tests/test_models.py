from dataclasses import replace

import numpy as np
import pytest

from config import ModelConfig
from engine.gradcheck import check_gradients
from engine.tensor import Tensor, backward, concat
from errors import ConfigError, ContractError, DimensionError, SchemaError
from harness.preparation import prepare_run
from models.fusion import CoAttention
from models.hypergraph_decoder import HyperGraphDecoder, PredictionHead, SetEntry, init_queries, predict_sets
from models.hypergraph_embedding import GroundTruthGraph, HyperGraphEmbedding, pad_frames, token_index
from models.pipeline import SituationHyperGraphModel, build_examples
from models.question import compose_qa
from models.video import VideoEncoder
from situations.loader import load_dataset
from situations.records import SituationAnnotation

TOL = 1e-4
E2E_TOL = 1e-3


def weighted(out: Tensor, seed: int = 11) -> Tensor:
    return (out * np.random.default_rng(seed).normal(size=out.shape)).sum()


def sized_config(**overrides) -> ModelConfig:
    values = dict(num_actions=5, num_predicates=6, num_words=12, dropout=0.0)
    values.update(overrides)
    return ModelConfig.toy(**values)


@pytest.fixture
def fixture_words(star_fixture_path):
    return load_dataset(star_fixture_path).vocab.words


class TestQuestionComposition:
    def test_multiple_choice_layout(self, fixture_words):
        seq = compose_qa("Which object was opened by the person",
                         ["the door", "the cup", "the box", "the book"], fixture_words)
        assert seq.tokens[:9] == ("[CLS]", "which", "object", "was", "opened", "by", "the", "person", "[SEP]")
        assert seq.tokens.count("[SEP]") == 4
        assert len(seq) == 1 + 7 + 4 * 3
        assert seq.ids[0] == fixture_words.lookup("[CLS]")
        assert 3 not in seq.ids

    def test_unknown_words_become_unk(self, fixture_words):
        seq = compose_qa("which object was smashed", ["the door"], fixture_words)
        assert seq.ids[-4] == fixture_words.lookup("<unk>")

    def test_open_ended_layout(self, fixture_words):
        seq = compose_qa("what is the person holding", None, fixture_words, "open_ended")
        assert seq.text == "[CLS] what is the person holding"

    def test_composition_errors(self, fixture_words):
        with pytest.raises(SchemaError):
            compose_qa("   ", ["the door"], fixture_words)
        with pytest.raises(SchemaError):
            compose_qa("what is the person holding", ["the cup"], fixture_words, "open_ended")
        with pytest.raises(ConfigError):
            compose_qa("what is the person holding", None, fixture_words)


class TestShapes:
    def test_full_size_sequence_lengths(self):
        cfg = ModelConfig.benchmark()
        assert cfg.video_tokens == 393
        assert cfg.graph_length == 177
        assert cfg.ff_hidden == 3072

    def test_full_size_query_tables(self):
        actions = init_queries("action", 3, 16, 768, seed=0)
        relations = init_queries("relation", 8, 16, 768, seed=0)
        assert actions.table.shape == (48, 768)
        assert relations.table.shape == (128, 768)
        np.testing.assert_array_equal(actions.table.data, init_queries("action", 3, 16, 768, seed=0).table.data)
        assert actions.row(2, 1) == 7

    def test_full_size_video_tokens(self, rng):
        cfg = ModelConfig.benchmark(num_layers=0, num_actions=1, num_predicates=1)
        encoder = VideoEncoder(cfg, rng)
        out = encoder(Tensor(rng.normal(size=(16, 7, 7, 2048))))
        assert out.shape == (393, 768)

    def test_odd_frame_count_with_halving(self):
        with pytest.raises(ValueError):
            ModelConfig.toy(num_frames=3, temporal_halving=True)

    def test_toy_token_positions(self):
        cfg = sized_config()
        assert cfg.graph_length == 21
        assert token_index(0, "action", 0, 2, 3, 4) == 1
        assert token_index(0, "relation", 0, 2, 3, 4) == 3
        assert token_index(3, "relation", 2, 2, 3, 4) == 20
        with pytest.raises(ContractError):
            token_index(4, "action", 0, 2, 3, 4)
        with pytest.raises(ContractError):
            token_index(0, "relation", 3, 2, 3, 4)


class TestDecoder:
    def test_predict_sets_collapses_duplicates(self):
        logits = np.array([
            [0.0, 3.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 5.0],
            [4.0, 0.0, 0.0, 0.0],
        ])
        frames = predict_sets(logits, 2)
        assert [e.label for e in frames[0]] == [1]
        assert frames[0][0].raw_count == 2
        best = np.exp(3.0) / (np.exp(3.0) + 3)
        assert frames[0][0].score == pytest.approx(best)
        assert frames[1] == [SetEntry(0, pytest.approx(np.exp(4.0) / (np.exp(4.0) + 3)), 1)]

    def test_phi_only_frame_is_empty(self):
        logits = np.zeros((2, 3))
        logits[:, 2] = 1.0
        assert predict_sets(logits, 2) == [[]]

    def test_phi_never_emitted(self, rng):
        for _ in range(1000):
            classes = int(rng.integers(2, 7))
            queries = int(rng.integers(1, 4))
            logits = rng.normal(scale=3.0, size=(queries * int(rng.integers(1, 5)), classes))
            for frame in predict_sets(logits, queries):
                labels = [entry.label for entry in frame]
                assert classes - 1 not in labels
                assert len(labels) == len(set(labels))

    def test_prediction_head_is_row_local(self, rng):
        head = PredictionHead(16, 5, rng, std=0.3)
        x = rng.normal(size=(6, 16))
        before = head(Tensor(x)).data
        x[2] += rng.normal(size=16)
        after = head(Tensor(x)).data
        changed = np.any(before != after, axis=1)
        assert changed.tolist() == [False, False, True, False, False, False]

    def test_gradient_check(self, rng):
        cfg = sized_config(num_frames=3, temporal_halving=False)
        decoder = HyperGraphDecoder("action", 2, 5, cfg, rng)
        memory = Tensor(rng.normal(size=(5, 16)), requires_grad=True)
        decoded = decoder(memory)
        assert decoded.embeddings.shape == (6, 16)
        assert decoded.logits.shape == (6, 6)
        assert decoder.phi_index == 5
        params = [memory, decoder.queries.table, decoder.head.classifier.weight,
                  decoder.decoder.layers[0].cross_attn.q_proj.weight]
        result = check_gradients(lambda: weighted(decoder(memory).logits), params, max_entries=12, select="largest")
        assert result.passed(TOL), result.worst

    def test_first_frame_logits_ignore_later_queries(self, rng):
        cfg = sized_config(num_frames=3, temporal_halving=False)
        decoder = HyperGraphDecoder("relation", 3, 6, cfg, rng)
        memory = Tensor(rng.normal(size=(5, 16)))
        backward(weighted(decoder(memory).logits[np.arange(3)]))
        grad = decoder.queries.table.grad
        assert np.all(grad[3:] == 0.0)
        assert np.any(grad[:3] != 0.0)


class TestHyperGraphEmbedding:
    def test_layout_and_mask(self, rng):
        cfg = sized_config()
        embedding = HyperGraphEmbedding(cfg, rng)
        a_emb = Tensor(rng.normal(size=(8, 16)))
        r_emb = Tensor(rng.normal(size=(12, 16)))
        a_valid = np.array([True, False] * 4)
        r_valid = np.array([True, True, False] * 4)
        seq = embedding.assemble(a_emb, r_emb, a_valid, r_valid)
        assert len(seq) == 21
        assert seq.mask[0]
        t, q = 2, 1
        pos = token_index(t, "relation", q, 2, 3, 4)
        expected = r_emb.data[t * 3 + q] + embedding.type_table.data[1] + embedding.situation_table.data[t]
        np.testing.assert_allclose(seq.tokens.data[pos], expected)
        assert seq.mask[pos] == r_valid[t * 3 + q]
        assert not seq.mask[token_index(1, "action", 1, 2, 3, 4)]
        assert seq.mask.sum() == 1 + 4 + 8

    def test_inference_mask_is_all_ones(self, rng):
        embedding = HyperGraphEmbedding(sized_config(), rng)
        seq = embedding(Tensor(rng.normal(size=(8, 16))), Tensor(rng.normal(size=(12, 16))))
        assert seq.mask.all()

    def test_action_only_layout(self, rng):
        embedding = HyperGraphEmbedding(sized_config(components="action_only"), rng)
        seq = embedding.assemble(Tensor(rng.normal(size=(8, 16))), None)
        assert len(seq) == 9
        assert seq.relations_per_frame == 0

    def test_wrong_row_count(self, rng):
        embedding = HyperGraphEmbedding(sized_config(), rng)
        with pytest.raises(DimensionError):
            embedding.assemble(Tensor(np.zeros((7, 16))), Tensor(np.zeros((12, 16))))

    def test_ground_truth_graph_masks_phi_slots(self, rng):
        cfg = sized_config()
        annotation = SituationAnnotation("c", 4, ((1,), (0, 4), (), (2,)), ((5,), (), (0, 1, 2), (3,)))
        a_emb, a_valid, r_emb, r_valid = GroundTruthGraph(cfg, rng)(annotation)
        assert a_emb.shape == (8, 16) and r_emb.shape == (12, 16)
        np.testing.assert_array_equal(a_valid, [True, False, True, True, False, False, True, False])
        assert r_valid.sum() == 5
        np.testing.assert_array_equal(pad_frames(annotation.actions, 2, 5), [1, 5, 0, 4, 5, 5, 2, 5])


class TestCoAttention:
    def test_masked_graph_tokens_never_reach_pooled_outputs(self, rng):
        cfg = sized_config()
        fusion = CoAttention(cfg, rng)
        question = Tensor(rng.normal(size=(5, 16)), requires_grad=True)
        graph = Tensor(rng.normal(size=(7, 16)), requires_grad=True)
        mask = np.array([True, True, False, True, False, True, True])
        fused = fusion(question, graph, mask)
        backward(weighted(concat([fused.cls, fused.hg], axis=0)))
        assert np.all(graph.grad[[2, 4]] == 0.0)
        assert np.any(graph.grad[[1, 3]] != 0.0)

    def test_mask_must_fit_graph(self, rng):
        fusion = CoAttention(sized_config(), rng)
        with pytest.raises(DimensionError):
            fusion(Tensor(np.zeros((3, 16))), Tensor(np.zeros((4, 16))), np.ones(5, dtype=bool))


def scramble(model: SituationHyperGraphModel, seed: int = 5) -> None:
    """Replace the tiny initial weights so every gradient is well above rounding noise."""
    rng = np.random.default_rng(seed)
    for name, param in model.named_parameters():
        if not name.endswith(".gain"):
            param.data[...] = rng.normal(0.0, 0.3, size=param.shape)


class TestPipeline:
    def test_needs_vocabulary_sizes(self):
        with pytest.raises(ConfigError):
            SituationHyperGraphModel(ModelConfig.toy())

    def test_forward_outputs(self, toy_model, tiny_run):
        example = tiny_run.train_examples[0]
        out = toy_model(example)
        assert out.answer_logits.shape == (4,)
        assert out.action_logits.shape == (8, 11)
        assert out.relation_logits.shape == (12, 13)
        assert len(out.graph) == 21
        assert out.loss.item() == pytest.approx(out.l_act.item() + out.l_rel.item() + out.l_vqa.item())
        np.testing.assert_array_equal(out.graph.mask[1:3], out.action_assignment.matched[:2])

    def test_adjacent_frames_stay_distinct(self, toy_model, tiny_run):
        toy_model.eval()
        example = tiny_run.train_examples[0]
        swapped = replace(example, features=example.features[[1, 0, 3, 2]])
        first = toy_model(example, compute_loss=False).action_logits.data
        second = toy_model(swapped, compute_loss=False).action_logits.data
        assert not np.allclose(first, second)

    def test_halving_merges_frame_pairs(self, rng):
        encoder = VideoEncoder(sized_config(temporal_halving=True), rng)
        encoder.eval()
        features = rng.normal(size=(4, 2, 2, 32))
        first = encoder(Tensor(features)).data
        second = encoder(Tensor(features[[1, 0, 3, 2]])).data
        np.testing.assert_allclose(first, second, atol=1e-12)

    def test_end_to_end_gradient_check(self, toy_model, tiny_run):
        scramble(toy_model)
        example = tiny_run.train_examples[1]
        first = toy_model(example)
        pinned = (first.action_assignment, first.relation_assignment)
        params = [param for _, param in toy_model.named_parameters()]
        result = check_gradients(lambda: toy_model(example, assignments=pinned).loss, params,
                                 max_entries=2, select="largest")
        assert result.checked == sum(min(p.data.size, 2) for p in params)
        assert result.passed(E2E_TOL), result.worst

    def test_eval_answer_ignores_annotation(self, toy_model, tiny_run):
        toy_model.eval()
        example = tiny_run.train_examples[0]
        other = replace(example, annotation=tiny_run.train_examples[3].annotation)
        first = toy_model(example, compute_loss=False)
        second = toy_model(other, compute_loss=False)
        assert first.action_assignment is None and first.loss is None
        np.testing.assert_array_equal(first.answer_logits.data, second.answer_logits.data)

    def test_uniform_answer_head_gives_log_choices(self, toy_model, tiny_run):
        toy_model.answer_head.output.weight.data[...] = 0.0
        toy_model.answer_head.output.bias.data[...] = 0.0
        out = toy_model(tiny_run.train_examples[0])
        assert abs(out.l_vqa.item() - np.log(4)) < 1e-6

    def test_batch_loss_is_sum_of_samples(self, toy_model, tiny_run):
        examples = tiny_run.train_examples[:3]
        batch = toy_model.forward_batch(examples)
        total = sum(toy_model(e).loss.item() for e in examples)
        assert batch.loss_sum.item() == pytest.approx(total, rel=1e-12)
        assert batch.mean_loss.item() == pytest.approx(total / 3, rel=1e-12)
        with pytest.raises(ContractError):
            toy_model.forward_batch([])

    def test_action_only_leaves_relation_decoder_untouched(self, tiny_run):
        cfg = tiny_run.config.model.model_copy(update={"components": "action_only"})
        model = SituationHyperGraphModel(cfg, seed=0)
        out = model(tiny_run.train_examples[0])
        assert out.l_rel is None and len(out.graph) == 9
        backward(out.loss)
        for param in model.relation_decoder.parameters():
            assert param.grad is None or not np.any(param.grad)
        assert np.any(model.action_decoder.queries.table.grad)

    @pytest.mark.parametrize("fusion", ["q_v", "q_v_hg"])
    def test_video_fusion_variants(self, tiny_run, fusion):
        cfg = tiny_run.config.model.model_copy(update={"fusion": fusion})
        out = SituationHyperGraphModel(cfg, seed=0)(tiny_run.train_examples[0])
        assert out.answer_logits.shape == (4,)
        assert np.isfinite(out.loss.item())

    def test_ground_truth_graph_skips_decoders(self, tiny_run):
        cfg = tiny_run.config.model.model_copy(update={"gt_graph": True})
        example = tiny_run.train_examples[0]
        out = SituationHyperGraphModel(cfg, seed=0)(example)
        assert out.action_logits is None and out.l_act is None
        assert out.loss.item() == pytest.approx(out.l_vqa.item())
        ann = example.annotation
        labels = sum(len(f) for f in ann.actions) + sum(len(f) for f in ann.relations)
        assert out.graph.mask.sum() == 1 + labels

    def test_video_scope_matches_globally(self, toy_model, tiny_run):
        out = toy_model(tiny_run.train_examples[0], match_scope="video")
        assert len(out.action_assignment.frames) == 1
        assert len(out.relation_assignment.frames) == 1

    def test_examples_must_fit_model(self, tiny_run):
        cfg = tiny_run.config.model.model_copy(update={"num_choices": 3})
        with pytest.raises(ConfigError):
            build_examples(tiny_run.train, cfg)

    def test_open_ended_model(self, make_run_config):
        run = prepare_run(make_run_config(synth="open-ended"))
        cfg = run.config.model
        assert cfg.qa_mode == "open_ended" and cfg.answer_classes == 3
        out = SituationHyperGraphModel(cfg, seed=0)(run.train_examples[0])
        assert out.answer_logits.shape == (3,)
        assert np.isfinite(out.loss.item())
