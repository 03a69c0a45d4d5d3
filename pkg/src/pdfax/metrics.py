"""Model-vs-model evaluation.

`wer` and `ndcg` compare a candidate model against a reference by sampling
the reference; both accept anything exposing alphabet()/next_dist() (or a
Pdfa directly, which enables a much faster state-walk implementation with
identical results).  `exact_divergence` is the test-grade replacement for
sampling: an exhaustive product search between two PDFAs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import Alphabet, Pdfa


@dataclass
class MetricReport:
    wer: float
    ndcg: float
    ndcg_k: int
    n_samples: int
    n_prefixes: int
    ndcg_skipped: int
    seed: int

    def to_text(self) -> str:
        return ("wer=%.6f ndcg_%d=%.6f (samples=%d, prefixes=%d, "
                "skipped=%d, seed=%d)\n"
                % (self.wer, self.ndcg_k, self.ndcg, self.n_samples,
                   self.n_prefixes, self.ndcg_skipped, self.seed))


def _alphabet_of(model) -> Alphabet:
    return model.alphabet if isinstance(model, Pdfa) else model.alphabet()


def _check_alphabets(a, b) -> Alphabet:
    aa, ab = _alphabet_of(a), _alphabet_of(b)
    if aa != ab:
        raise ValueError("models use different alphabets: %r vs %r"
                         % (aa.tokens, ab.tokens))
    return ab


def _draw_samples(b, rng, n_samples: int, max_len: int):
    """Token matrix + lengths for n_samples draws from the reference."""
    if isinstance(b, Pdfa):
        raw = b.sample_many(rng, n_samples, max_len)
    else:
        from .extract import sample_sequence
        alphabet = _alphabet_of(b)
        raw = [sample_sequence(b.next_dist, alphabet, rng, max_len)
               for _ in range(n_samples)]
    lengths = np.array([len(w) for w, _ in raw], dtype=np.int64)
    toks = np.zeros((len(raw), max(1, int(lengths.max(initial=0)))),
                    dtype=np.int64)
    for i, (w, _) in enumerate(raw):
        toks[i, :len(w)] = w
    return toks, lengths


def wer(a, b, n_samples: int = 2000, seed: int = 0,
        max_len: int = 200) -> float:
    """Fraction of next-token predictions on which the models disagree.

    Sequences are drawn from b (the reference); at every prefix position of
    every sample -- from the empty prefix through the full sample -- the
    argmax of each model's next-step distribution is compared.  Argmax ties
    go to the lowest token index.
    """
    _check_alphabets(a, b)
    rng = np.random.default_rng(seed)
    toks, lengths = _draw_samples(b, rng, n_samples, max_len)
    if isinstance(a, Pdfa) and isinstance(b, Pdfa):
        sa, sb, filled = _kernels.pair_prefix_states(
            a.trans, b.trans, a.initial, b.initial, toks, lengths)
        am_a = np.argmax(a.weights, axis=1)
        am_b = np.argmax(b.weights, axis=1)
        mism = int(np.count_nonzero(am_a[sa[:filled]] != am_b[sb[:filled]]))
        return mism / filled
    fa, fb = a.next_dist, b.next_dist
    mism = 0
    total = 0
    for i in range(len(lengths)):
        w = tuple(int(x) for x in toks[i, :lengths[i]])
        for k in range(len(w) + 1):
            u = w[:k]
            if int(np.argmax(fa(u))) != int(np.argmax(fb(u))):
                mism += 1
            total += 1
    return mism / total


def _ranking(dist, k: int) -> np.ndarray:
    """Indices of the k most probable next steps, ties by token index."""
    return np.argsort(-np.asarray(dist), kind="stable")[:k]


_DISCOUNTS_CACHE: dict[int, np.ndarray] = {}


def _discounts(k: int) -> np.ndarray:
    d = _DISCOUNTS_CACHE.get(k)
    if d is None:
        d = 1.0 / np.log2(np.arange(k) + 2.0)
        _DISCOUNTS_CACHE[k] = d
    return d


def ndcg_prefix_score(dist_a, dist_b, k: int) -> float:
    """Discounted-gain ratio of a's ranking against b's own ranking, with
    b's probabilities as the gains.  Returns nan if b's top-k mass is 0."""
    disc = _discounts(k)
    dist_b = np.asarray(dist_b)
    num = float(dist_b[_ranking(dist_a, k)] @ disc)
    den = float(dist_b[_ranking(dist_b, k)] @ disc)
    if den == 0.0:
        return float("nan")
    return num / den


def ndcg(a, b, k: int = 2, n_prefixes: int = 2000, seed: int = 0,
         max_len: int = 200, _detail: list | None = None) -> float:
    """Mean ranking-quality score of a against reference b.

    Samples b and takes every prefix of every sample (empty through full)
    until exactly n_prefixes are collected.  Each prefix scores the
    discounted gain of a's top-k next steps under b's probabilities,
    normalized by b's own best ranking.  Prefixes where b's top-k mass is
    zero are skipped; the skip count is appended to `_detail` if given.
    """
    alphabet = _check_alphabets(a, b)
    if not 1 <= k <= len(alphabet) + 1:
        raise ValueError("k must be in [1, %d]" % (len(alphabet) + 1))
    rng = np.random.default_rng(seed)
    scores_sum = 0.0
    scored = 0
    skipped = 0
    collected = 0
    if isinstance(a, Pdfa) and isinstance(b, Pdfa):
        disc = _discounts(k)
        # Per-state-pair score table; prefix scores are table lookups.
        rank_a = np.argsort(-a.weights, axis=1, kind="stable")[:, :k]
        rank_b = np.argsort(-b.weights, axis=1, kind="stable")[:, :k]
        # same matmul primitive as the numerator so identical models score
        # exactly 1.0 at every k
        den = np.take_along_axis(b.weights, rank_b, axis=1) @ disc
        while collected < n_prefixes:
            batch = max(64, (n_prefixes - collected) // (max_len + 1) + 1)
            toks, lengths = _draw_samples(b, rng, batch, max_len)
            sa, sb, filled = _kernels.pair_prefix_states(
                a.trans, b.trans, a.initial, b.initial, toks, lengths,
                n_prefixes - collected)
            gains = b.weights[sb[:filled][:, None], rank_a[sa[:filled]]]
            num = gains @ disc
            d = den[sb[:filled]]
            ok = d > 0
            scores_sum += float((num[ok] / d[ok]).sum())
            scored += int(ok.sum())
            skipped += int(filled - ok.sum())
            collected += filled
    else:
        fa, fb = a.next_dist, b.next_dist
        from .extract import sample_sequence
        while collected < n_prefixes:
            w, _ = sample_sequence(fb, alphabet, rng, max_len)
            for j in range(len(w) + 1):
                if collected >= n_prefixes:
                    break
                u = w[:j]
                s = ndcg_prefix_score(fa(u), fb(u), k)
                if s != s:  # nan
                    skipped += 1
                else:
                    scores_sum += s
                    scored += 1
                collected += 1
    if _detail is not None:
        _detail.append(skipped)
    return scores_sum / scored if scored else 0.0


def evaluate(a, b, k: int = 2, n_samples: int = 2000, seed: int = 0,
             max_len: int = 200) -> MetricReport:
    """Bundle wer and ndcg into one report (same seed for both draws)."""
    detail: list = []
    return MetricReport(
        wer=wer(a, b, n_samples=n_samples, seed=seed, max_len=max_len),
        ndcg=ndcg(a, b, k=k, n_prefixes=n_samples, seed=seed,
                  max_len=max_len, _detail=detail),
        ndcg_k=k,
        n_samples=n_samples,
        n_prefixes=n_samples,
        ndcg_skipped=detail[0],
        seed=seed,
    )


def exact_divergence(a: Pdfa, b: Pdfa, t: float):
    """Shortest sequence after which the two PDFAs' next-step distributions
    differ by more than t in some component, or None if no reachable pair
    of states disagrees.  Breadth-first over the product automaton."""
    if a.alphabet != b.alphabet:
        raise ValueError("models use different alphabets")
    n = len(a.alphabet)
    start = (a.initial, b.initial)
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (qa, qb), w = queue.popleft()
        if np.max(np.abs(a.weights[qa] - b.weights[qb])) > t:
            return w
        for s in range(n):
            nxt = (int(a.trans[qa, s]), int(b.trans[qb, s]))
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, w + (s,)))
    return None


@dataclass
class ConsistencyViolation:
    sequence: tuple
    prefix: tuple
    token: int
    gap: float


def t_consistency_audit(a, b, sequences, t: float):
    """Check that a and b assign last-step probabilities within t of each
    other along every non-empty prefix of every given sequence.  Returns
    None on pass, else the first violation found."""
    fa, fb = a.next_dist, b.next_dist
    for w in sequences:
        w = tuple(w)
        for k in range(1, len(w) + 1):
            u = w[:k]
            pa = float(fa(u[:-1])[u[-1]])
            pb = float(fb(u[:-1])[u[-1]])
            gap = abs(pa - pb)
            if gap > t:
                return ConsistencyViolation(w, u, u[-1], gap)
    return None
