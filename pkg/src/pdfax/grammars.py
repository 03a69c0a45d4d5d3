"""Synthetic PDFA families used as extraction targets and test fixtures.

All constructors return live PDFAs whose weight rows sum to exactly 1.0 in
float64 (see `seal_rows`), so constructing them never renormalizes and the
stored literals survive bit-for-bit.  Several fixtures place weight gaps on
exact tolerance boundaries on purpose; perturbing the literals would change
which rows count as close.
"""

from __future__ import annotations

import numpy as np

from .model import Alphabet, Pdfa, seal_rows

# Membership tables for the seven classic binary-string languages, given as
# (n_states, accepting frozenset, transition rows (on0, on1)), start state 0.
_TOMITA_DFAS = {
    # 1*
    1: (2, {0}, [(1, 0), (1, 1)]),
    # (10)*
    2: (3, {0}, [(2, 1), (0, 2), (2, 2)]),
    # no odd-length 0-block after an odd-length 1-block
    3: (5, {0, 1, 3}, [(0, 1), (2, 0), (3, 4), (2, 1), (4, 4)]),
    # no substring 000
    4: (4, {0, 1, 2}, [(1, 0), (2, 0), (3, 0), (3, 3)]),
    # even number of 0s and even number of 1s
    5: (4, {0}, [(1, 2), (0, 3), (3, 0), (2, 1)]),
    # (#0 - #1) divisible by 3
    6: (3, {0}, [(1, 2), (2, 0), (0, 1)]),
    # 0*1*0*1*
    7: (5, {0, 1, 2, 3}, [(0, 1), (2, 1), (2, 3), (4, 3), (4, 4)]),
}

_ACCEPT_ROW = (0.665, 0.285, 0.05)
_REJECT_ROW = (0.285, 0.665, 0.05)


def tomita_weighted(k: int) -> Pdfa:
    """Weighted variant of the k-th classic binary-string language.

    Every state stops with probability 0.05; accepting states route the
    remaining mass 0.7 / 0.3 towards "0", rejecting states the reverse.
    """
    if k not in _TOMITA_DFAS:
        raise ValueError("tomita index must be 1..7, got %r" % (k,))
    n, accepting, rows = _TOMITA_DFAS[k]
    trans = np.array(rows, dtype=np.int64)
    weights = seal_rows([_ACCEPT_ROW if q in accepting else _REJECT_ROW
                         for q in range(n)])
    return Pdfa(Alphabet(("0", "1")), trans, weights)


def uhl(k: int) -> Pdfa:
    """Three small machines that are hard for low-order n-gram models:
    long input-independent cycles and long-range parity.
    """
    if k == 1:
        # Nine-state loop; both tokens advance the loop, so no bounded
        # context reveals the position.  Three states flip the preference.
        n = 9
        trans = np.array([[(q + 1) % n, (q + 1) % n] for q in range(n)],
                         dtype=np.int64)
        weights = seal_rows([
            (0.20, 0.75, 0.05) if q in (1, 4, 8) else (0.75, 0.20, 0.05)
            for q in range(n)
        ])
        return Pdfa(Alphabet(("0", "1")), trans, weights)
    if k == 2:
        # Five-state loop over a five-token alphabet; state i prefers
        # token i.
        n = 5
        trans = np.array([[(q + 1) % n] * n for q in range(n)],
                         dtype=np.int64)
        rows = []
        for q in range(n):
            row = [0.091] * n + [0.045]
            row[q] = 0.591
            rows.append(row)
        return Pdfa(Alphabet(tuple(str(i) for i in range(n))), trans,
                    seal_rows(rows))
    if k == 3:
        # Two independent parity bits: token "0" flips the first, "1" the
        # second.  Only the both-odd state reverses the preference.
        states = [(0, 0), (0, 1), (1, 0), (1, 1)]
        idx = {s: i for i, s in enumerate(states)}
        trans = np.array([[idx[(1 - p0, p1)], idx[(p0, 1 - p1)]]
                          for (p0, p1) in states], dtype=np.int64)
        weights = seal_rows([
            (0.425, 0.525, 0.05) if (p0 and p1) else (0.525, 0.425, 0.05)
            for (p0, p1) in states
        ])
        return Pdfa(Alphabet(("0", "1")), trans, weights)
    raise ValueError("uhl index must be 1..3, got %r" % (k,))


def worked_example() -> Pdfa:
    """Six-state machine over {a, b} used as the reference target in the
    unit and acceptance tests for the full extraction loop.

    Weight gaps are chosen to sit strictly inside / outside a 0.1 tolerance
    under float64 (e.g. 0.7-0.6 <= 0.1 but 0.4-0.32 < 0.1 < 0.4-0.25), which
    the zero-sampling extraction test depends on.
    """
    trans = np.array([
        [1, 4],   # s0
        [2, 4],   # s1
        [3, 3],   # s2
        [5, 5],   # s3
        [2, 1],   # s4
        [5, 5],   # s5
    ], dtype=np.int64)
    weights = seal_rows([
        (0.5, 0.4, 0.1),
        (0.7, 0.25, 0.05),
        (0.5, 0.4, 0.1),
        (0.5, 0.4, 0.1),
        (0.5, 0.4, 0.1),
        (0.6, 0.32, 0.08),
    ])
    return Pdfa(Alphabet(("a", "b")), trans, weights)


def random_pdfa(rng, n_states: int, n_tokens: int, min_stop: float = 0.01) -> Pdfa:
    """Random live PDFA: uniform transition targets, Dirichlet weight rows
    with the stop entry floored at `min_stop` so every state is live."""
    if n_states < 1 or n_tokens < 1:
        raise ValueError("need at least one state and one token")
    trans = rng.integers(0, n_states, size=(n_states, n_tokens))
    weights = rng.dirichlet(np.ones(n_tokens + 1), size=n_states)
    low = weights[:, -1] < min_stop
    if low.any():
        weights[low, -1] += min_stop
        weights /= weights.sum(axis=1, keepdims=True)
    alphabet = Alphabet(tuple("t%d" % i for i in range(n_tokens)))
    return Pdfa(alphabet, trans, weights)


_GRAMMAR_PREFIX = "grammar://"


def from_identifier(name: str) -> Pdfa:
    """Resolve identifiers like grammar://tomita/3, grammar://uhl/1,
    grammar://appb."""
    if not name.startswith(_GRAMMAR_PREFIX):
        raise ValueError("not a grammar identifier: %r" % name)
    rest = name[len(_GRAMMAR_PREFIX):]
    if rest == "appb":
        return worked_example()
    family, _, num = rest.partition("/")
    try:
        k = int(num)
    except ValueError:
        raise ValueError("bad grammar identifier: %r" % name)
    if family == "tomita":
        return tomita_weighted(k)
    if family == "uhl":
        return uhl(k)
    raise ValueError("unknown grammar family: %r" % name)
