"""Tests for the core PDFA model: validation, probabilities, sampling,
serialization."""

import json

import numpy as np
import pytest

from pdfax import Alphabet, Pdfa, PdfaFormatError, seal_rows, worked_example


def two_state():
    """q0 --a--> q1 (0.6), q0 --b--> q0 (0.3), stop 0.1;
    q1 loops on a (0.2), b -> q0 (0.5), stop 0.3."""
    return Pdfa(
        Alphabet(["a", "b"]),
        np.array([[1, 0], [1, 0]]),
        np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3]]),
    )


# ---------------------------------------------------------------- alphabet

def test_alphabet_roundtrip():
    A = Alphabet(["x", "y", "z"])
    assert len(A) == 3
    assert A.end == 3
    assert [A.index(t) for t in "xyz"] == [0, 1, 2]
    assert A.index("$") == 3
    assert A.token(3) == "$"
    assert A.decode(A.encode(["y", "x", "$"])) == ["y", "x", "$"]


def test_alphabet_rejects_reserved_and_duplicates():
    with pytest.raises(ValueError):
        Alphabet(["a", "$"])
    with pytest.raises(ValueError):
        Alphabet(["a", "a"])
    with pytest.raises(KeyError):
        Alphabet(["a"]).index("b")


def test_encode_rejects_interior_stop():
    A = Alphabet(["a", "b"])
    with pytest.raises(ValueError):
        A.encode(["a", "$", "b"])


# -------------------------------------------------------------- validation

def test_rejects_malformed_automata():
    A = Alphabet(["a", "b"])
    good_w = np.array([[0.6, 0.3, 0.1]])
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 5]]), good_w)       # target out of range
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0]]), good_w)          # wrong trans shape
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 0]]), np.array([[0.6, 0.4]]))  # missing stop col
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 0]]), np.array([[0.7, 0.4, -0.1]]))
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 0]]), np.array([[0.5, 0.4, 0.2]]))  # sums 1.1
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 0]]), good_w, initial=1)
    with pytest.raises(ValueError):
        Pdfa(A, np.array([[0, 0], [0, 0]]),
             np.vstack([good_w, good_w]), names=["s", "s"])


def test_exact_rows_are_not_renormalized():
    A = Alphabet(["a", "b"])
    p = Pdfa(A, np.array([[1, 0], [1, 0]]),
             np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25]]))
    assert p.weights[0, 0] == 0.5 and p.weights[1, 2] == 0.25


def test_near_one_rows_are_renormalized():
    A = Alphabet(["a"])
    w = np.array([[0.5, 0.5 + 3e-10]])
    p = Pdfa(A, np.array([[0]]), w)
    assert p.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert p.weights[0, 0] < 0.5


# ------------------------------------------------------------ probabilities

def test_walk_and_probabilities_by_hand():
    p = two_state()
    assert p.walk(()) == 0
    assert p.walk((0,)) == 1
    assert p.walk((0, 1)) == 0
    # P(ab$) = 0.6 * 0.5 * 0.1
    assert p.seq_prob((0, 1)) == pytest.approx(0.03, abs=1e-15)
    assert p.prefix_prob((0, 1)) == pytest.approx(0.3, abs=1e-15)
    np.testing.assert_allclose(p.next_dist((0,)), [0.2, 0.5, 0.3])


def test_prefix_prob_telescopes():
    """P^p(u) = sum_sigma P^p(u.sigma) + P(u$): checked on all prefixes of
    length <= 4 of the worked example."""
    p = worked_example()
    n = len(p.alphabet)
    prefixes = [()]
    for _ in range(4):
        prefixes = [u + (s,) for u in prefixes for s in range(n)]
        for u in prefixes:
            parent = u[:-1]
            total = sum(p.prefix_prob(parent + (s,)) for s in range(n))
            total += p.seq_prob(parent)
            assert p.prefix_prob(parent) == pytest.approx(total, abs=1e-12)


def test_seq_prob_sums_to_one():
    """Stopping mass accumulated over per-state running mass tends to 1."""
    p = two_state()
    total = 0.0
    mass = np.zeros(p.n_states)
    mass[p.initial] = 1.0
    for _ in range(200):
        total += float(mass @ p.weights[:, 2])
        nxt = np.zeros_like(mass)
        for q in range(p.n_states):
            for s in (0, 1):
                nxt[p.trans[q, s]] += mass[q] * p.weights[q, s]
        mass = nxt
    assert total == pytest.approx(1.0, abs=1e-9)


# ----------------------------------------------------------------- sampling

def test_sample_matches_batch_for_first_sequence():
    p = worked_example()
    one = p.sample(np.random.default_rng(12), max_len=50)
    batch = p.sample_many(np.random.default_rng(12), 1, max_len=50)
    assert batch[0] == one


def test_sample_respects_max_len():
    p = two_state()
    seq, terminated = p.sample(np.random.default_rng(0), max_len=3)
    assert len(seq) <= 3
    if len(seq) == 3:
        assert not terminated


def test_sample_many_frequencies():
    p = worked_example()
    seqs = p.sample_many(np.random.default_rng(5), 20000, max_len=100)
    first = np.array([s[0][0] if s[0] else 2 for s in seqs])
    # root distribution is (a: 0.5, b: 0.4, $: 0.1)
    assert abs((first == 0).mean() - 0.5) < 0.02
    assert abs((first == 1).mean() - 0.4) < 0.02
    assert abs((first == 2).mean() - 0.1) < 0.02


# ----------------------------------------------------------------- liveness

def test_is_live():
    assert two_state().is_live()
    A = Alphabet(["a"])
    sink = Pdfa(A, np.array([[1], [1]]),
                np.array([[0.5, 0.5], [1.0, 0.0]]))
    assert not sink.is_live()
    # a state with no stop mass is fine if it can reach one that stops
    relay = Pdfa(A, np.array([[1], [1]]),
                 np.array([[1.0, 0.0], [0.5, 0.5]]))
    assert relay.is_live()


# ------------------------------------------------------------ serialization

def test_save_load_roundtrip(tmp_path):
    p = worked_example()
    path = tmp_path / "m.pdfa"
    p.save(path)
    q = Pdfa.load(path)
    assert q.alphabet == p.alphabet
    assert q.names == p.names
    assert q.initial == p.initial
    np.testing.assert_array_equal(q.trans, p.trans)
    np.testing.assert_array_equal(q.weights, p.weights)


def test_load_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.pdfa"
    p.write_text("{not json")
    with pytest.raises(PdfaFormatError):
        Pdfa.load(p)

    obj = worked_example().to_json_obj()
    del obj["initial"]
    with pytest.raises(PdfaFormatError, match="initial"):
        Pdfa.from_json_obj(obj)

    obj = worked_example().to_json_obj()
    obj["states"]["q0"]["next"]["a"] = "nowhere"
    with pytest.raises(PdfaFormatError, match="nowhere"):
        Pdfa.from_json_obj(obj)

    obj = worked_example().to_json_obj()
    del obj["states"]["q1"]["weights"]["b"]
    with pytest.raises(PdfaFormatError):
        Pdfa.from_json_obj(obj)

    obj = worked_example().to_json_obj()
    obj["initial"] = "ghost"
    with pytest.raises(PdfaFormatError):
        Pdfa.from_json_obj(obj)


def test_json_preserves_exact_floats(tmp_path):
    from pdfax import uhl
    path = tmp_path / "u2.pdfa"
    u = uhl(2)
    u.save(path)
    assert Pdfa.load(path).weights[0, -1] == u.weights[0, -1]
    # file is valid json with one object per state
    obj = json.loads(path.read_text())
    assert set(obj) == {"alphabet", "initial", "states"}


# -------------------------------------------------------------------- DOT

def test_to_dot_counts():
    from pdfax import tomita_weighted
    dot = tomita_weighted(1).to_dot()
    assert dot.count("->") == 4
    assert dot.count("label=") == 6  # 2 node labels + 4 edge labels
    assert dot.startswith("digraph")


# -------------------------------------------------------------- seal_rows

def test_seal_rows_fixes_float_drift():
    w = seal_rows([[0.591, 0.091, 0.091, 0.091, 0.091, 0.045]])
    assert w.sum() == 1.0
    assert w[0, -1] == 0.04500000000000015


def test_seal_rows_keeps_exact_rows_bitwise():
    row = [0.6, 0.32, 0.08000000000000007]
    w = seal_rows([row])
    assert list(w[0]) == row
    assert w.sum() == 1.0


def test_seal_rows_rejects_overfull_rows():
    with pytest.raises(ValueError):
        seal_rows([[0.8, 0.9, 0.05]])
