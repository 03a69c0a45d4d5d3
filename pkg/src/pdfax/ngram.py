"""Sliding-window n-gram baseline.

Counts every window of length 1..n over a sample corpus (the stop marker
participates as a final pseudo-token) and answers next-step queries with
maximum-likelihood estimates conditioned on the last n-1 tokens, backing
off to shorter contexts when a context was never continued.  A context's
total is the sum of its continuation counts, so windows cut short by
sample truncation never skew the estimates.

Implements the same oracle surface as everything else, so an n-gram model
can be evaluated -- or even extracted from -- like any other target.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import Alphabet


class NgramModel:
    def __init__(self, alphabet: Alphabet, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self._alphabet = alphabet
        self.n = n
        # counts[s] = occurrences of window s (1 <= len(s) <= n);
        # continuations[c] = vector of counts of c + (step,) per next step.
        self.counts: dict[tuple[int, ...], int] = {}
        self._continuations: dict[tuple[int, ...], np.ndarray] = {}

    def alphabet(self) -> Alphabet:
        return self._alphabet

    def count(self, seq) -> int:
        return self.counts.get(tuple(seq), 0)

    def next_dist(self, prefix) -> np.ndarray:
        end = self._alphabet.end
        ctx = tuple(prefix)[max(0, len(prefix) - (self.n - 1)):]
        while True:
            cont = self._continuations.get(ctx)
            if cont is not None:
                return cont / cont.sum()
            if not ctx:
                return np.full(end + 1, 1.0 / (end + 1))
            ctx = ctx[1:]

    def _ingest(self, windows: np.ndarray, length: int):
        if windows.size == 0:
            return
        codes, counts = np.unique(windows, axis=0, return_counts=True)
        for row, c in zip(codes, counts):
            key = tuple(int(x) for x in row)
            self.counts[key] = self.counts.get(key, 0) + int(c)
            if length > 1:
                ctx, step = key[:-1], key[-1]
                cont = self._continuations.get(ctx)
                if cont is None:
                    cont = np.zeros(len(self._alphabet) + 1)
                    self._continuations[ctx] = cont
                cont[step] += int(c)
            else:
                cont = self._continuations.get(())
                if cont is None:
                    cont = np.zeros(len(self._alphabet) + 1)
                    self._continuations[()] = cont
                cont[key[0]] += int(c)


def ngram_build(samples, n: int, alphabet: Alphabet) -> NgramModel:
    """Count all windows of length 1..n in the corpus.

    Samples are (tokens, terminated) pairs or plain token sequences
    (treated as terminated).  Terminated samples contribute windows that
    may end in the stop marker; a separator sentinel keeps windows from
    spanning sample boundaries or leaking past truncation points.
    """
    model = NgramModel(alphabet, n)
    end = alphabet.end
    sep = end + 1
    flat = []
    for item in samples:
        if isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], bool):
            tokens, terminated = item
        else:
            tokens, terminated = item, True
        flat.extend(int(x) for x in tokens)
        flat.append(end if terminated else sep)
        flat.append(sep)
    arr = np.asarray(flat, dtype=np.int64)
    for length in range(1, n + 1):
        if len(arr) < length:
            break
        win = sliding_window_view(arr, length)
        # No separators anywhere; the stop marker only in last position.
        good = (win != sep).all(axis=1)
        if length > 1:
            good &= (win[:, :-1] != end).all(axis=1)
        model._ingest(win[good], length)
    return model


def read_samples(path, alphabet: Alphabet | None = None):
    """Load a sample file: one sequence per line, tokens separated by
    spaces, termination implicit.  Returns (samples, alphabet); when no
    alphabet is given one is built from the tokens in sorted order."""
    lines = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            lines.append(line.split() if line else [])
    if alphabet is None:
        tokens = sorted({t for line in lines for t in line})
        if not tokens:
            raise ValueError("sample file %s has no tokens" % (path,))
        alphabet = Alphabet(tokens)
    samples = [tuple(alphabet.index(t) for t in line) for line in lines]
    return samples, alphabet
