"""Tests for the sliding-window n-gram baseline."""

import numpy as np
import pytest

from pdfax import (Alphabet, ExtractionConfig, NgramModel, Oracle, evaluate,
                   extract, ngram_build, read_samples, worked_example)

ALPHA = Alphabet(("a", "b"))
A, B, END = 0, 1, 2


def tiny_corpus_model(n=2):
    # two terminated samples: aab and aa
    return ngram_build([(A, A, B), (A, A)], n, ALPHA)


# -------------------------------------------------------------- hand counts

def test_bigram_counts_by_hand():
    m = tiny_corpus_model()
    assert m.count((A,)) == 4
    assert m.count((B,)) == 1
    assert m.count((END,)) == 2
    assert m.count((A, A)) == 2
    assert m.count((A, B)) == 1
    assert m.count((B, END)) == 1
    assert m.count((A, END)) == 1
    assert m.count((B, B)) == 0


def test_unigram_distribution():
    m = tiny_corpus_model()
    np.testing.assert_allclose(m.next_dist(()), [4 / 7, 1 / 7, 2 / 7])


def test_conditional_distribution():
    m = tiny_corpus_model()
    np.testing.assert_allclose(m.next_dist((A,)), [0.5, 0.25, 0.25])


def test_point_mass_context():
    m = tiny_corpus_model()
    np.testing.assert_array_equal(m.next_dist((B,)), [0.0, 0.0, 1.0])


def test_context_is_last_n_minus_one_tokens():
    m = tiny_corpus_model(n=2)
    # only the final token matters for a bigram model
    np.testing.assert_array_equal(m.next_dist((B, B, A, B)),
                                  m.next_dist((B,)))


def test_backoff_to_shorter_context():
    m = tiny_corpus_model(n=3)
    # bb never occurs, so the model backs off to context b
    np.testing.assert_array_equal(m.next_dist((B, B)), m.next_dist((B,)))


def test_unigram_model_ignores_context():
    m = tiny_corpus_model(n=1)
    np.testing.assert_array_equal(m.next_dist((A, B)), m.next_dist(()))
    np.testing.assert_allclose(m.next_dist(()), [4 / 7, 1 / 7, 2 / 7])


def test_empty_corpus_is_uniform():
    m = ngram_build([], 2, ALPHA)
    np.testing.assert_allclose(m.next_dist(()), [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(m.next_dist((A,)), [1 / 3, 1 / 3, 1 / 3])


def test_empty_sequences_still_count_stops():
    m = ngram_build([(), ()], 2, ALPHA)
    np.testing.assert_array_equal(m.next_dist(()), [0.0, 0.0, 1.0])


def test_truncated_samples_contribute_no_stop():
    m = ngram_build([((A, B), False)], 2, ALPHA)
    assert m.count((END,)) == 0
    assert m.count((B, END)) == 0
    assert m.count((A, B)) == 1
    np.testing.assert_array_equal(m.next_dist((A,)), [0.0, 1.0, 0.0])
    # b was never continued: backs off to the unigram, which saw no stop
    np.testing.assert_allclose(m.next_dist((B,)), [0.5, 0.5, 0.0])


def test_mixed_sample_forms():
    m = ngram_build([((A,), True), (A,)], 2, ALPHA)
    assert m.count((A, END)) == 2


def test_distributions_sum_to_one():
    m = tiny_corpus_model(n=3)
    for ctx in ((), (A,), (B,), (A, A), (A, B), (B, B)):
        assert m.next_dist(ctx).sum() == pytest.approx(1.0, abs=1e-12)


def test_order_validation():
    with pytest.raises(ValueError):
        NgramModel(ALPHA, 0)


# ------------------------------------------------------- statistical sanity

def test_large_corpus_approaches_a_memoryless_source():
    """Counting converges where it can: for a single-state source every
    context shares one conditional, so the estimates approach it."""
    import pdfax

    target = pdfax.Pdfa(ALPHA, np.zeros((1, 2), dtype=np.int64),
                        np.array([[0.5, 0.3, 0.2]]))
    rng = np.random.default_rng(0)
    small = ngram_build(target.sample_many(rng, 100, 100), 3, ALPHA)
    big = ngram_build(target.sample_many(rng, 20000, 100), 3, ALPHA)

    def gap(model):
        return max(float(np.max(np.abs(model.next_dist(ctx) - [0.5, 0.3, 0.2])))
                   for ctx in ((), (A,), (B, A)))

    assert gap(big) < 0.02
    assert gap(big) < gap(small)


# ------------------------------------------------------- oracle integration

def test_ngram_satisfies_the_oracle_protocol():
    m = tiny_corpus_model()
    assert isinstance(m, Oracle)
    assert m.alphabet() is ALPHA


def test_ngram_can_be_evaluated_and_extracted_from():
    target = worked_example()
    corpus = target.sample_many(np.random.default_rng(1), 4000, 100)
    m = ngram_build(corpus, 3, target.alphabet)
    rep = evaluate(m, target, k=2, n_samples=300, seed=2)
    assert 0.0 <= rep.wer <= 1.0
    assert 0.0 < rep.ndcg <= 1.0

    run = extract(m, ExtractionConfig(eq_samples=100))
    assert run.stop_reason in ("accepted", "row-cap", "suffix-cap")
    assert run.final.is_live()
    assert run.final.alphabet == target.alphabet


# ------------------------------------------------------------- sample files

def test_read_samples_infers_alphabet(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("a b\n\nb\n")
    samples, alphabet = read_samples(path)
    assert alphabet.tokens == ("a", "b")
    assert samples == [(0, 1), (), (1,)]


def test_read_samples_with_explicit_alphabet(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("y x\n")
    samples, alphabet = read_samples(path, Alphabet(("x", "y")))
    assert samples == [(1, 0)]
    assert alphabet.tokens == ("x", "y")


def test_read_samples_rejects_token_free_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("\n\n")
    with pytest.raises(ValueError):
        read_samples(path)
    # ... unless the alphabet is supplied
    samples, _ = read_samples(path, ALPHA)
    assert samples == [(), ()]


def test_read_samples_unknown_token(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("a z\n")
    with pytest.raises(KeyError):
        read_samples(path, ALPHA)


def test_read_samples_roundtrip_from_sampler(tmp_path):
    target = worked_example()
    samples = target.sample_many(np.random.default_rng(5), 50, 60)
    path = tmp_path / "corpus.txt"
    path.write_text("".join(
        " ".join(target.alphabet.decode(toks)) + "\n" for toks, _ in samples))
    loaded, alphabet = read_samples(path, target.alphabet)
    assert loaded == [toks for toks, _ in samples]
    m = ngram_build(loaded, 2, alphabet)
    assert m.count((A,)) > 0
