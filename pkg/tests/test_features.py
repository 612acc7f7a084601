import math

import numpy as np
import pytest

from triagetext.corpus import Post
from triagetext.errors import EmbeddingError, FeatureError
from triagetext.features import (
    ABLATION_PRESETS,
    PRESET_NAMES,
    EmbeddingTable,
    FeaturePipeline,
    crisis_heuristics,
    default_heuristic_bundle,
    embed_post,
    fit_scaler,
    fit_tfidf,
    lexicon_ratio_scorer,
    load_embeddings,
    pattern_counts,
    preset_config,
    register_sentiment_scorer,
    sentiment_score,
    surface_stats,
    tfidf_vector,
)
from triagetext.features import ADVISOR_PHRASES, HELPLINE_PHRASES, SELF_HARM_PHRASES
from triagetext.textproc import tokenize

from conftest import make_post

TWO_DOC_CORPUS = [["sad", "sad", "day"], ["happy", "day"]]


class TestTfidf:
    def test_idf_values(self):
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 1))
        vocab = model.vocabulary
        assert set(vocab) == {"sad", "day", "happy"}
        assert model.idf[vocab["day"]] == pytest.approx(1.0, abs=1e-12)
        expected_sad = math.log(3 / 2) + 1.0
        assert model.idf[vocab["sad"]] == pytest.approx(expected_sad, abs=1e-12)
        assert model.idf[vocab["happy"]] == pytest.approx(expected_sad, abs=1e-12)

    def test_vector_normalization(self):
        # raw: sad 2*1.4055=2.811, day 1*1.0; norm 2.9836
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 1))
        vec = tfidf_vector(["sad", "sad", "day"], model)
        by_term = {
            term: vec[idx] for term, idx in model.vocabulary.items() if idx in vec
        }
        assert by_term["sad"] == pytest.approx(0.9421556246632359, abs=1e-6)
        assert by_term["day"] == pytest.approx(0.33517574332792605, abs=1e-6)

    def test_second_document_vector(self):
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 1))
        vec = tfidf_vector(["happy", "day"], model)
        by_term = {
            term: vec[idx] for term, idx in model.vocabulary.items() if idx in vec
        }
        assert by_term["happy"] == pytest.approx(0.8148024746671689, abs=1e-6)
        assert by_term["day"] == pytest.approx(0.5797386715376657, abs=1e-6)

    def test_max_features_tie_breaks_lexicographically(self):
        # sad and day both have corpus frequency 2; "day" sorts first
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=1, ngram_range=(1, 1))
        assert set(model.vocabulary) == {"day"}

    def test_df_equals_n(self):
        model = fit_tfidf([["a", "a", "a"]], max_features=5, ngram_range=(1, 1))
        assert model.idf[model.vocabulary["a"]] == pytest.approx(1.0, abs=1e-12)

    def test_oov_gives_zero_block(self):
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 1))
        assert tfidf_vector(["unknown", "words"], model) == {}

    def test_single_known_term_unit_norm(self):
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 1))
        vec = tfidf_vector(["day"], model)
        assert list(vec.values()) == [pytest.approx(1.0)]

    def test_bigrams_in_vocabulary(self):
        model = fit_tfidf([["i", "give", "up"]], max_features=10, ngram_range=(1, 2))
        assert "give up" in model.vocabulary
        assert "i" in model.vocabulary

    def test_norm_is_zero_or_one(self):
        model = fit_tfidf(TWO_DOC_CORPUS, max_features=10, ngram_range=(1, 2))
        for tokens in [["sad"], ["sad", "day", "happy"], ["zzz"], []]:
            vec = tfidf_vector(tokens, model)
            norm = math.sqrt(sum(v * v for v in vec.values()))
            assert norm == pytest.approx(0.0) or norm == pytest.approx(1.0)

    def test_empty_corpus_rejected(self):
        with pytest.raises(FeatureError):
            fit_tfidf([], max_features=5)

    def test_bad_max_features(self):
        with pytest.raises(FeatureError):
            fit_tfidf(TWO_DOC_CORPUS, max_features=0)


class TestSurface:
    def test_pronouns_and_word_length(self):
        stats = surface_stats(tokenize("I like it"))
        assert stats.pronoun_counts["i"] == 1
        assert stats.pronoun_counts["it"] == 1
        assert sum(stats.pronoun_counts.values()) == 2
        assert stats.mean_word_length == pytest.approx(7 / 3)
        assert stats.web_links == 0

    def test_twelve_pronouns_tracked(self):
        stats = surface_stats([])
        assert set(stats.pronoun_counts) == {
            "i", "me", "you", "he", "him", "she", "her", "it", "we", "us", "they", "them",
        }

    def test_empty_post(self):
        stats = surface_stats([])
        assert stats.mean_word_length == 0.0
        assert stats.web_links == 0

    def test_web_links_counted(self):
        stats = surface_stats(tokenize("see www.reachout.com and www.moodgym.anu.edu.au"))
        assert stats.web_links == 2

    def test_punctuation_excluded_from_word_length(self):
        stats = surface_stats(tokenize("hi there!!"))
        # tokens hi(2), there(5), !, ! -> punctuation excluded
        assert stats.mean_word_length == pytest.approx(3.5)


class TestPatterns:
    def test_self_harm_example(self):
        assert pattern_counts("I want to die, nothing helps", "self_harm") == 1

    def test_helpline_phone_number(self):
        assert pattern_counts("call lifeline on 13 11 14", "helplines") == 2

    def test_advisors(self):
        assert pattern_counts("saw my gp and my counsellor", "advisors") == 2

    def test_longest_match_consumes_span(self):
        # "i want to die" contains "want to die"; only the long one counts
        text = "i want to die"
        assert pattern_counts(text, "self_harm") == 1

    def test_every_phrase_detected_alone(self):
        for set_name, phrases in [
            ("helplines", HELPLINE_PHRASES),
            ("self_harm", SELF_HARM_PHRASES),
            ("advisors", ADVISOR_PHRASES),
        ]:
            for phrase in phrases:
                assert pattern_counts(phrase, set_name) >= 1, (set_name, phrase)

    def test_case_insensitive(self):
        assert pattern_counts("CALL LIFELINE", "helplines") == 1

    def test_no_match(self):
        assert pattern_counts("a perfectly pleasant day", "self_harm") == 0

    def test_unknown_set(self):
        with pytest.raises(FeatureError):
            pattern_counts("text", "typo_set")


class TestEmbeddings:
    @pytest.fixture()
    def ab_table(self):
        return EmbeddingTable(
            vectors={"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])},
            dim=2,
            digest="test",
        )

    def test_post_mean(self, ab_table):
        post_vec, last_vec = embed_post("a b", ab_table)
        assert post_vec == pytest.approx([0.5, 0.5])
        assert last_vec == pytest.approx([0.5, 0.5])

    def test_last_sentence(self, ab_table):
        post_vec, last_vec = embed_post("a b. b", ab_table)
        assert post_vec == pytest.approx([1 / 3, 2 / 3])
        assert last_vec == pytest.approx([0.0, 1.0])

    def test_oov_post(self, ab_table):
        post_vec, last_vec = embed_post("zzz", ab_table)
        assert post_vec == pytest.approx([0.0, 0.0])
        assert last_vec == pytest.approx([0.0, 0.0])

    def test_loader(self, tiny_embeddings):
        assert tiny_embeddings.dim == 4
        assert len(tiny_embeddings.vectors) == 10
        assert tiny_embeddings.vectors["happy"] == pytest.approx([0.9, 0.1, 0.0, 0.2])
        assert tiny_embeddings.digest

    def test_loader_dimension_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\ngood 1 2 3\nbad 1 2\n", encoding="utf-8")
        with pytest.raises(EmbeddingError) as err:
            load_embeddings(path)
        assert "line 3" in str(err.value)

    def test_loader_count_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("3 2\nonly 1 2\n", encoding="utf-8")
        with pytest.raises(EmbeddingError):
            load_embeddings(path)

    def test_loader_missing_file(self, tmp_path):
        with pytest.raises(EmbeddingError):
            load_embeddings(tmp_path / "none.txt")


class TestSentiment:
    def test_ratio(self, bundle):
        scorer = lexicon_ratio_scorer(bundle[0])
        assert scorer(["happy", "glad", "calm", "sad"]) == pytest.approx(0.5)

    def test_neutral_default(self, bundle):
        scorer = lexicon_ratio_scorer(bundle[0])
        assert scorer(["table", "chair"]) == 0.0

    def test_negation_shifts_polarity(self, bundle):
        scorer = lexicon_ratio_scorer(bundle[0])
        assert scorer(tokenize("i don't like it")) == pytest.approx(-1.0)

    def test_range_validation(self):
        with pytest.raises(FeatureError):
            sentiment_score(["x"], lambda toks: 2.0)
        with pytest.raises(FeatureError):
            sentiment_score(["x"], lambda toks: float("nan"))

    def test_custom_scorer_registration(self, bundle):
        register_sentiment_scorer(
            "always-positive", lambda lexicons, name, negation: (lambda toks: 1.0)
        )
        try:
            cfg = preset_config("full", sentiment_scorer="always-positive")
            pipe = FeaturePipeline(cfg, lexicons=bundle)
            pipe.fit_transform([make_post("a", "anything at all", "green")])
            vec = pipe.transform(make_post("b", "gloomy words", None))
            assert vec.dense  # scorer ran without error
        finally:
            from triagetext.features import SENTIMENT_SCORERS

            SENTIMENT_SCORERS.pop("always-positive", None)

    def test_unknown_scorer_name(self, bundle):
        with pytest.raises(FeatureError):
            FeaturePipeline(preset_config("full", sentiment_scorer="nope"), lexicons=bundle)


class TestHeuristics:
    @pytest.fixture()
    def heuristic_bundle(self, bundle):
        return default_heuristic_bundle(lexicon_ratio_scorer(bundle[0]))

    def test_short_post(self, heuristic_bundle):
        out = crisis_heuristics(
            "I'm suffocating. I don't know if I can do this anymore.", heuristic_bundle
        )
        assert out["is_short"] == 1.0

    def test_advice_seeking(self, heuristic_bundle):
        out = crisis_heuristics("Any good tips?", heuristic_bundle)
        assert out["advice_seeking"] == 1.0

    def test_second_person_question(self, heuristic_bundle):
        out = crisis_heuristics("could you look at this?", heuristic_bundle)
        assert out["advice_seeking"] == 1.0

    def test_no_question_mark_no_advice(self, heuristic_bundle):
        out = crisis_heuristics("any tips would be welcome", heuristic_bundle)
        assert out["advice_seeking"] == 0.0

    def test_long_neutral_post(self, heuristic_bundle):
        # 60 content tokens across three sentences: long but not short,
        # and nothing else fires
        sentence = " ".join(["word"] * 20)
        body = f"{sentence}. {sentence}. {sentence}."
        out = crisis_heuristics(body, heuristic_bundle)
        assert out["is_long"] == 1.0
        assert out["is_short"] == 0.0
        for key, value in out.items():
            if key != "is_long":
                assert value == 0.0, (key, value)

    def test_neg_pos_neg_pattern(self, heuristic_bundle):
        body = "Everything felt awful. Then one happy moment. Now it is awful again."
        out = crisis_heuristics(body, heuristic_bundle)
        assert out["neg_pos_neg"] == 1.0

    def test_service_dissatisfaction(self, heuristic_bundle):
        out = crisis_heuristics("my gp was awful and it made things worse", heuristic_bundle)
        assert out["service_dissatisfaction"] == 1.0

    def test_temporal_markers(self, heuristic_bundle):
        out = crisis_heuristics("today was like yesterday", heuristic_bundle)
        assert out["temporal_terms"] == 2.0

    def test_hopelessness_terms(self, heuristic_bundle):
        out = crisis_heuristics("i am fed up and feel tired", heuristic_bundle)
        assert out["hopeless_terms"] >= 2.0


class TestScaler:
    def test_standardizes(self):
        rng = np.random.RandomState(3)
        matrix = rng.randn(50, 4) * [1.0, 5.0, 0.1, 2.0] + [0.0, -3.0, 7.0, 0.5]
        scaler = fit_scaler(matrix)
        out = scaler.transform(matrix)
        assert np.abs(out.mean(axis=0)).max() < 1e-9
        assert np.abs(out.std(axis=0) - 1.0).max() < 1e-6

    def test_constant_column_guarded(self):
        matrix = np.ones((10, 2))
        matrix[:, 1] = np.arange(10)
        scaler = fit_scaler(matrix)
        out = scaler.transform(matrix)
        assert np.all(np.isfinite(out))
        assert out[:, 0] == pytest.approx(np.zeros(10))

    def test_std_floor(self):
        matrix = np.zeros((5, 1))
        scaler = fit_scaler(matrix)
        assert scaler.std[0] == pytest.approx(1e-8)


class TestPipeline:
    def test_preset_names(self):
        assert set(ABLATION_PRESETS) <= set(PRESET_NAMES)
        assert "full" in PRESET_NAMES

    def test_only_lexicons_has_just_lexicon_features(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("only-lexicons"), lexicons=bundle)
        pipe.fit_transform(small_train[:30])
        assert pipe.tfidf_dim == 0
        assert all(name.startswith(("lex:", "lexw:")) for name in pipe.dense_feature_names)
        assert pipe.dim == len(pipe.dense_feature_names)

    def test_dimension_stability(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        X = pipe.fit_transform(small_train[:30])
        assert X.shape == (30, pipe.dim)
        for post in small_train[30:40]:
            vec = pipe.transform(post)
            assert vec.dim == pipe.dim
            assert vec.tfidf_dim == pipe.tfidf_dim

    def test_matrix_matches_transforms(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        pipe.fit_transform(small_train[:25])
        posts = small_train[25:35]
        stacked = pipe.matrix(posts).toarray()
        for row, post in zip(stacked, posts):
            vec = pipe.transform(post)
            dense_start = pipe.tfidf_dim
            rebuilt = np.zeros(pipe.dim)
            for idx, val in vec.tfidf.items():
                rebuilt[idx] = val
            for col, name in enumerate(pipe.dense_feature_names):
                rebuilt[dense_start + col] = vec.dense[name]
            assert row == pytest.approx(rebuilt, abs=1e-12)

    def test_tfidf_block_norm(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        X = pipe.fit_transform(small_train[:40]).toarray()
        norms = np.linalg.norm(X[:, : pipe.tfidf_dim], axis=1)
        assert np.all((np.abs(norms - 1.0) < 1e-9) | (norms < 1e-12))

    def test_scaler_invariant_on_train(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        X = pipe.fit_transform(small_train[:40]).toarray()
        dense = X[:, pipe.tfidf_dim :]
        for col, name in enumerate(pipe.dense_feature_names):
            column = dense[:, col]
            if name.startswith("rank:"):
                assert set(np.unique(column)) <= {0.0, 1.0}
                continue
            if column.std() > 1e-12:
                assert abs(column.mean()) < 1e-9, name
                assert abs(column.std() - 1.0) < 1e-6, name

    def test_unseen_rank_sets_other(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        pipe.fit_transform(small_train[:30])
        vec = pipe.transform(make_post("q", "hello", None, rank="SuperMod"))
        assert vec.dense["rank:OTHER"] == 1.0
        assert all(
            vec.dense[name] == 0.0
            for name in pipe.dense_feature_names
            if name.startswith("rank:") and name != "rank:OTHER"
        )

    def test_enabling_block_preserves_other_values(self, bundle, small_train):
        posts = small_train[:30]
        small = FeaturePipeline(preset_config("only-lexicons"), lexicons=bundle)
        small.fit_transform(posts)
        bigger = FeaturePipeline(
            preset_config("only-lexicons", surface=True), lexicons=bundle
        )
        bigger.fit_transform(posts)
        assert set(small.dense_feature_names) < set(bigger.dense_feature_names)
        for post in posts[:10]:
            a = small.transform(post)
            b = bigger.transform(post)
            for name in small.dense_feature_names:
                assert a.dense[name] == pytest.approx(b.dense[name], abs=1e-12), name

    def test_deterministic_fit(self, bundle, small_train):
        posts = small_train[:30]
        one = FeaturePipeline(preset_config("full"), lexicons=bundle)
        two = FeaturePipeline(preset_config("full"), lexicons=bundle)
        Xa = one.fit_transform(posts)
        Xb = two.fit_transform(posts)
        assert one.fingerprint == two.fingerprint
        assert np.array_equal(Xa.toarray(), Xb.toarray())
        va = one.transform(small_train[31])
        vb = two.transform(small_train[31])
        assert va == vb

    def test_fingerprint_changes_with_config(self, bundle, small_train):
        posts = small_train[:30]
        one = FeaturePipeline(preset_config("full"), lexicons=bundle)
        two = FeaturePipeline(preset_config("tfidf-lexicons"), lexicons=bundle)
        one.fit_transform(posts)
        two.fit_transform(posts)
        assert one.fingerprint != two.fingerprint

    def test_empty_body_post_flows_through(self, bundle, small_train):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        pipe.fit_transform(small_train[:30])
        vec = pipe.transform(make_post("empty", "", None))
        values = list(vec.dense.values())
        assert all(np.isfinite(v) for v in values)
        assert vec.tfidf == {}

    def test_transform_before_fit(self, bundle):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        with pytest.raises(FeatureError):
            pipe.transform(make_post("x", "hello", None))

    def test_lexicons_required_when_enabled(self):
        with pytest.raises(FeatureError):
            FeaturePipeline(preset_config("full"), lexicons=())

    def test_embeddings_required_when_enabled(self, bundle):
        with pytest.raises(FeatureError):
            FeaturePipeline(
                preset_config("full", embeddings=True), lexicons=bundle, embeddings=None
            )

    def test_embeddings_block(self, bundle, tiny_embeddings, small_train):
        pipe = FeaturePipeline(
            preset_config("full", embeddings=True),
            lexicons=bundle,
            embeddings=tiny_embeddings,
        )
        pipe.fit_transform(small_train[:30])
        emb_names = [n for n in pipe.dense_feature_names if n.startswith("emb:")]
        assert len(emb_names) == 2 * tiny_embeddings.dim

    def test_unknown_preset(self):
        with pytest.raises(FeatureError):
            preset_config("mystery")

    def test_empty_fit_corpus(self, bundle):
        pipe = FeaturePipeline(preset_config("full"), lexicons=bundle)
        with pytest.raises(FeatureError):
            pipe.fit_transform([])
