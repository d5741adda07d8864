import json
import math
from datetime import date

import numpy as np
import pytest

from timerank import (Claim, DomainSchema, EvidenceSet, EvidenceSnippet,
                      RankingMethod, backward, build_ground_truth,
                      classification_loss, domain_label_vector, forward, fuse,
                      init_parameters, load_checkpoint, ranking_score,
                      save_checkpoint)

from oracles import numerical_gradient, relative_error

TWO_DOMAIN_SCHEMA = DomainSchema.from_labels({"a": ("x", "y"), "b": ("z",)})


def toy_params(schema=TWO_DOMAIN_SCHEMA, d=2, d_m=1, d_l=2, seed=0):
    return init_parameters(schema, d, d_m, seed=seed, d_l=d_l)


def random_instance(rng, schema, d, d_m, k=None, all_dated=True):
    k = k if k is not None else int(rng.integers(1, 11))
    domain = schema.domains[int(rng.integers(len(schema.domains)))]
    snippets = []
    for j in range(k):
        ts = date(2020, 1, 1 + int(rng.integers(28))) if (
            all_dated or rng.random() < 0.8) else None
        snippets.append(EvidenceSnippet(f"s{j}", rng.normal(size=d), j + 1,
                                        timestamp=ts))
    labels = schema.labels[domain]
    claim = Claim("c", domain, labels[int(rng.integers(len(labels)))],
                  date(2020, 1, 15), rng.normal(size=d), rng.normal(size=d_m))
    return claim, EvidenceSet(tuple(snippets))


class TestFuse:
    def test_zero_inputs(self):
        assert fuse(np.zeros(3), np.zeros(3), np.zeros(2)).tolist() == [0.0] * 14

    def test_identical_claim_and_evidence(self):
        c = np.array([2.0, -3.0])
        out = fuse(c, c, np.array([1.0]))
        assert out[4:6].tolist() == [0.0, 0.0]          # difference block
        assert out[6:8].tolist() == [4.0, 9.0]          # product block

    def test_hand_example(self):
        out = fuse(np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0]))
        assert out.tolist() == [1, 2, 3, 4, -2, -2, 3, 8, 5]

    def test_dimension_mismatch_names_the_block(self):
        with pytest.raises(ValueError, match="evidence block"):
            fuse(np.zeros(3), np.zeros(4), np.zeros(1))
        with pytest.raises(ValueError, match="metadata block"):
            fuse(np.zeros(3), np.zeros(3), np.zeros((1, 2)))


class TestRankingScore:
    def test_relu_clamps_negative_bias(self):
        params = toy_params()
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = -1.0
        assert ranking_score(np.ones(params.fused_dim), params) == 0.0

    def test_positive_bias_passes_through(self):
        params = toy_params()
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = 2.0
        assert ranking_score(np.zeros(params.fused_dim), params) == 2.0

    def test_hand_example(self):
        schema = DomainSchema.from_labels({"a": ("x",)})
        params = init_parameters(schema, d=1, d_m=1, seed=0, d_l=2)
        # fused dim is 5 here; use only the first two coordinates
        params.ranking_w[:] = 0.0
        params.ranking_w[0] = 0.5
        params.ranking_w[1] = 0.5
        params.ranking_b[:] = 0.0
        assert ranking_score(np.array([1.0, -1.0, 0.0, 0.0, 0.0]), params) == 0.0


def hand_set_params():
    """Hand-pitched parameters for the two-domain toy schema (T = 3)."""
    params = toy_params()
    params.fusion_projection[:] = 0.0
    params.fusion_projection[0, 0] = 1.0
    params.fusion_projection[1, 1] = 1.0
    params.label_embeddings[:] = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    params.label_fc_w["a"][:] = np.array([[1.0, 1.0, 1.0], [-1.0, 0.0, 0.0]])
    params.label_fc_b["a"][:] = np.array([0.5, -0.5])
    return params


class TestDomainLabelVector:
    def test_zero_fused_vector_reduces_to_bias(self):
        params = hand_set_params()
        out = domain_label_vector(np.zeros(9), "a", params, TWO_DOMAIN_SCHEMA)
        # Leaky ReLU of the bias [0.5, -0.5]
        assert out == pytest.approx([0.5, -0.005])

    def test_mask_zeroes_foreign_similarities(self):
        params = toy_params(seed=3)
        mask = TWO_DOMAIN_SCHEMA.mask("b")
        assert mask.tolist() == [0.0, 0.0, 1.0]
        assert int(mask.sum()) == TWO_DOMAIN_SCHEMA.n_labels("b")

    def test_hand_computed_chain(self):
        params = hand_set_params()
        f = fuse(np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0]))
        # projected = [1, 2]; similarities = [1, 2, 3]; masked for "a" = [1, 2, 0]
        # affine: [1 + 2 + 0.5, -1 - 0.5] = [3.5, -1.5]; leaky -> [3.5, -0.015]
        out = domain_label_vector(f, "a", params, TWO_DOMAIN_SCHEMA)
        assert out == pytest.approx([3.5, -0.015], abs=1e-12)

    def test_unknown_domain_rejected(self):
        params = toy_params()
        with pytest.raises(ValueError, match="unknown domain"):
            domain_label_vector(np.zeros(9), "nope", params, TWO_DOMAIN_SCHEMA)


class TestForward:
    def test_zero_scores_give_uniform_probabilities(self):
        rng = np.random.default_rng(0)
        params = toy_params(seed=1)
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = -1.0  # every score clamps to zero
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=3)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        n = TWO_DOMAIN_SCHEMA.n_labels(claim.domain)
        assert trace.logits == pytest.approx([0.0] * n)
        assert trace.probs == pytest.approx([1.0 / n] * n)

    def test_single_snippet_logits_are_score_times_label_vector(self):
        rng = np.random.default_rng(1)
        params = toy_params(seed=2)
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=1)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        expected = trace.rank_scores[0] * trace.label_vectors[0]
        assert trace.logits == pytest.approx(expected)

    def test_hand_computed_softmax(self):
        params = hand_set_params()
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = 2.0
        claim = Claim("c", "a", "x", date(2020, 1, 1),
                      np.array([1.0, 2.0]), np.array([5.0]))
        evidence = EvidenceSet((EvidenceSnippet("s", np.array([3.0, 4.0]), 1),))
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        # r = 2, l = [3.5, -0.015], logits = [7.0, -0.03]
        assert trace.logits == pytest.approx([7.0, -0.03], abs=1e-12)
        expected = math.exp(7.0) / (math.exp(7.0) + math.exp(-0.03))
        assert trace.probs[0] == pytest.approx(expected, abs=1e-12)

    def test_probabilities_sum_to_one_and_scores_nonnegative(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            d, d_m = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            params = init_parameters(TWO_DOMAIN_SCHEMA, d, d_m,
                                     seed=int(rng.integers(1000)), d_l=3)
            claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, d, d_m)
            trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
            assert abs(trace.probs.sum() - 1.0) < 1e-9
            assert np.all(trace.probs > 0.0)
            assert np.all(trace.rank_scores >= 0.0)

    def test_per_vector_operations_agree_with_the_batched_trace(self):
        rng = np.random.default_rng(10)
        params = toy_params(seed=4)
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=5)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        for j, snippet in enumerate(evidence):
            f = fuse(claim.claim_vector, snippet.evidence_vector,
                     claim.metadata_vector)
            assert ranking_score(f, params) == pytest.approx(
                trace.rank_scores[j], abs=1e-12)
            assert domain_label_vector(f, claim.domain, params,
                                       TWO_DOMAIN_SCHEMA) == pytest.approx(
                trace.label_vectors[j], abs=1e-12)

    def test_dimension_mismatch_names_the_block(self):
        params = toy_params()
        claim = Claim("c", "a", "x", date(2020, 1, 1), np.zeros(5), np.zeros(1))
        evidence = EvidenceSet((EvidenceSnippet("s", np.zeros(5), 1),))
        with pytest.raises(ValueError, match="claim block"):
            forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)


class TestClassificationLoss:
    def test_uniform_probabilities(self):
        rng = np.random.default_rng(2)
        params = toy_params(seed=5)
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = -1.0
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=2)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        n = TWO_DOMAIN_SCHEMA.n_labels(claim.domain)
        assert classification_loss(trace, 0) == pytest.approx(math.log(n))

    def test_certain_prediction_is_zero_loss(self):
        trace = _trace_with_logits(np.array([800.0, 0.0]))
        assert classification_loss(trace, 0) == 0.0

    def test_hand_probabilities(self):
        trace = _trace_with_logits(np.log(np.array([0.7, 0.2, 0.1])))
        assert classification_loss(trace, 1) == pytest.approx(1.609438, abs=1e-6)

    def test_gold_out_of_range(self):
        trace = _trace_with_logits(np.zeros(2))
        with pytest.raises(ValueError):
            classification_loss(trace, 5)


def _trace_with_logits(logits):
    """Forward trace shell for loss-only tests."""
    from timerank import ForwardTrace
    shifted = logits - logits.max()
    probs = np.exp(shifted) / np.exp(shifted).sum()
    k = 1
    return ForwardTrace("a", np.zeros((k, 9)), np.zeros(k), np.zeros(k),
                        np.zeros((k, 2)), np.zeros((k, 3)), np.zeros((k, 3)),
                        np.zeros((k, len(logits))), np.zeros((k, len(logits))),
                        np.asarray(logits, dtype=np.float64), probs)


class TestBackward:
    def test_zero_loss_configurations_give_zero_gradients(self):
        # a certain prediction (softmax saturated to exactly 1) zeroes every
        # cross-entropy gradient, and a single included snippet zeroes the
        # listwise side
        params = hand_set_params()
        params.label_fc_b["a"][:] = np.array([800.0, 0.0])
        params.label_fc_w["a"][:] = 0.0
        params.ranking_w[:] = 0.0
        params.ranking_b[:] = 1.0
        claim = Claim("c", "a", "x", date(2020, 1, 1),
                      np.array([1.0, 2.0]), np.array([5.0]))
        evidence = EvidenceSet((EvidenceSnippet(
            "s", np.array([3.0, 4.0]), 1, timestamp=date(2020, 1, 1)),))
        truth = build_ground_truth(RankingMethod.EVIDENCE_RECENCY, claim, evidence)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        assert trace.probs[0] == 1.0
        grads = backward(trace, 0, params, TWO_DOMAIN_SCHEMA, truth=truth)
        for grad in grads.ce.values():
            assert np.all(grad == 0.0)
        for grad in grads.ranking.values():
            assert np.all(grad == 0.0)
        assert grads.classification_loss == 0.0
        assert grads.ranking_loss == 0.0

    def test_masked_snippets_contribute_zero_score_gradient(self):
        rng = np.random.default_rng(4)
        params = toy_params(seed=6)
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=4)
        undated = EvidenceSet((
            evidence[0],
            EvidenceSnippet("u", rng.normal(size=2), 5, timestamp=None),
            evidence[2],
        ))
        truth = build_ground_truth(RankingMethod.EVIDENCE_RECENCY, claim, undated)
        trace = forward(claim, undated, params, TWO_DOMAIN_SCHEMA)
        gold = TWO_DOMAIN_SCHEMA.local_index(claim.domain, claim.label)
        grads = backward(trace, gold, params, TWO_DOMAIN_SCHEMA, truth=truth)
        assert grads.score[1] == 0.0

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(77)
        schema = DomainSchema.from_labels(
            {"a": ("x", "y", "z"), "b": ("u", "v")})
        checked = 0
        while checked < 10:
            d, d_m = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            params = init_parameters(schema, d, d_m,
                                     seed=int(rng.integers(10 ** 6)), d_l=3)
            claim, evidence = random_instance(rng, schema, d, d_m,
                                              k=int(rng.integers(2, 6)))
            trace = forward(claim, evidence, params, schema)
            # stay away from activation kinks so finite differences are valid
            if np.min(np.abs(trace.rank_pre)) < 1e-3 or \
                    np.min(np.abs(trace.label_pre)) < 1e-3:
                continue
            truth = build_ground_truth(RankingMethod.EVIDENCE_RECENCY,
                                       claim, evidence)
            gold = schema.local_index(claim.domain, claim.label)
            grads = backward(trace, gold, params, schema, truth=truth)

            def ce_loss():
                return classification_loss(
                    forward(claim, evidence, params, schema), gold)

            from timerank import ScoredRanking, listmle_loss

            def rank_loss():
                t = forward(claim, evidence, params, schema)
                return listmle_loss([ScoredRanking(t.rank_scores, truth)])

            for name, array in params.named().items():
                numeric = numerical_gradient(ce_loss, array)
                analytic = grads.ce.get(name, np.zeros_like(array))
                assert relative_error(analytic, numeric) < 1e-4, name
            for name in ("ranking_w", "ranking_b"):
                numeric = numerical_gradient(rank_loss, params.named()[name])
                assert relative_error(grads.ranking[name], numeric) < 1e-4, name
            checked += 1

    def test_loss_weights_scale_gradients(self):
        rng = np.random.default_rng(8)
        params = toy_params(seed=7)
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=3)
        truth = build_ground_truth(RankingMethod.EVIDENCE_RECENCY, claim, evidence)
        trace = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA)
        gold = TWO_DOMAIN_SCHEMA.local_index(claim.domain, claim.label)
        plain = backward(trace, gold, params, TWO_DOMAIN_SCHEMA, truth=truth)
        scaled = backward(trace, gold, params, TWO_DOMAIN_SCHEMA, truth=truth,
                          class_weight=2.0, ranking_weight=0.5)
        for name in plain.ce:
            assert scaled.ce[name] == pytest.approx(2.0 * plain.ce[name])
        for name in plain.ranking:
            assert scaled.ranking[name] == pytest.approx(0.5 * plain.ranking[name])


class TestDomainMaskIsolation:
    def test_foreign_label_embedding_never_changes_probabilities(self):
        rng = np.random.default_rng(12)
        params = toy_params(seed=9)
        claim, evidence = random_instance(rng, TWO_DOMAIN_SCHEMA, 2, 1, k=3)
        # force the claim into domain "a"; global index 2 belongs to "b"
        claim = Claim("c", "a", "x", claim.timestamp, claim.claim_vector,
                      claim.metadata_vector)
        before = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA).probs
        params.label_embeddings[2] += 100.0
        after = forward(claim, evidence, params, TWO_DOMAIN_SCHEMA).probs
        assert np.array_equal(before, after)


class TestParameterPartition:
    def test_partition_is_disjoint_and_exhaustive(self):
        params = toy_params()
        classification = set(params.classification_named())
        ranking = set(params.ranking_named())
        assert classification.isdisjoint(ranking)
        assert classification | ranking == set(params.named())


class TestInitParameters:
    def test_deterministic_per_seed(self):
        a = init_parameters(TWO_DOMAIN_SCHEMA, 4, 2, seed=42)
        b = init_parameters(TWO_DOMAIN_SCHEMA, 4, 2, seed=42)
        for name in a.named():
            assert np.array_equal(a.named()[name], b.named()[name])
        c = init_parameters(TWO_DOMAIN_SCHEMA, 4, 2, seed=43)
        assert not np.array_equal(a.label_embeddings, c.label_embeddings)

    def test_entries_respect_their_xavier_bounds(self):
        params = init_parameters(TWO_DOMAIN_SCHEMA, 4, 2, seed=1, d_l=6)
        t = TWO_DOMAIN_SCHEMA.total_labels
        d_f = params.fused_dim
        bounds = {
            "label_embeddings": math.sqrt(6.0 / (6 + t)),
            "fusion_projection": math.sqrt(6.0 / (d_f + 6)),
            "label_fc_w/a": math.sqrt(6.0 / (t + 2)),
            "label_fc_w/b": math.sqrt(6.0 / (t + 1)),
            "ranking_w": math.sqrt(6.0 / (d_f + 1)),
        }
        named = params.named()
        for name, bound in bounds.items():
            assert np.all(np.abs(named[name]) <= bound), name

    def test_biases_start_at_zero(self):
        params = init_parameters(TWO_DOMAIN_SCHEMA, 4, 2, seed=1)
        assert np.all(params.label_fc_b["a"] == 0.0)
        assert np.all(params.ranking_b == 0.0)

    def test_empirical_mean_is_near_zero(self):
        schema = DomainSchema.from_labels({"a": tuple(f"l{i}" for i in range(5))})
        params = init_parameters(schema, d=30, d_m=4, seed=3, d_l=100)
        draws = params.fusion_projection.ravel()  # 100 x 124 entries
        assert draws.size >= 10 ** 4
        bound = math.sqrt(6.0 / (params.fused_dim + 100))
        standard_error = bound / math.sqrt(3 * draws.size)
        assert abs(draws.mean()) < 3 * standard_error


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path):
        params = init_parameters(TWO_DOMAIN_SCHEMA, 5, 3, seed=11)
        path = tmp_path / "model.json"
        save_checkpoint(path, params, TWO_DOMAIN_SCHEMA, seed=11)
        loaded, schema, seed = load_checkpoint(path)
        assert seed == 11
        assert schema.domains == TWO_DOMAIN_SCHEMA.domains
        assert schema.labels == TWO_DOMAIN_SCHEMA.labels
        for name, array in params.named().items():
            other = loaded.named()[name]
            assert array.shape == other.shape
            assert array.tobytes() == other.tobytes()

    def test_save_is_deterministic(self, tmp_path):
        params = init_parameters(TWO_DOMAIN_SCHEMA, 5, 3, seed=11)
        save_checkpoint(tmp_path / "a.json", params, TWO_DOMAIN_SCHEMA, seed=11)
        save_checkpoint(tmp_path / "b.json", params, TWO_DOMAIN_SCHEMA, seed=11)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format_version": 99}))
        with pytest.raises(ValueError, match="version"):
            load_checkpoint(path)
