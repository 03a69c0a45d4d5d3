"""Tolerance-based observation table for active PDFA learning.

Rows are prefixes, columns are suffixes (ending in a token or the stop
marker), and each cell holds the probability of the suffix's *last* step
after reading everything before it.  Two prefixes are treated as
behaviourally equal when their rows differ by at most a tolerance t in
every column -- a relation that is deliberately not transitive.

Expansion works through a priority queue of candidate prefixes ordered by
prefix weight, adding rows that match nothing yet, checking consistency of
existing rows against their tolerance-neighbours, and growing the suffix
set with separating suffixes when consistency fails.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .oracle import PrefixWeights


@dataclass
class TableConfig:
    tolerance: float = 0.1
    eps_p: float = 0.01        # last-token probability floor for new rows
    eps_s: float = 0.01        # conditional-probability floor for new suffixes
    max_p: int = 5000
    max_s: int = 100
    time_budget: float | None = None   # seconds, wall clock
    arbitrary_cluster_match: bool = False

    def validate(self):
        for name in ("tolerance", "eps_p", "eps_s"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError("%s must be in [0,1], got %r" % (name, v))
        if self.max_p < 1 or self.max_s < 1:
            raise ValueError("max_p and max_s must be at least 1")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


def t_equal(v1, v2, t: float) -> bool:
    """True iff the vectors differ by at most t in every component."""
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    if v1.shape != v2.shape:
        raise ValueError("vector length mismatch: %r vs %r"
                         % (v1.shape, v2.shape))
    return bool(np.max(np.abs(v1 - v2), initial=0.0) <= t)


class RowIndex:
    """Grid index over row vectors for near-neighbour candidate lookup.

    One tree level per column; values are bucketed into intervals of width
    2t.  Queries scan the buckets overlapping [v-t, v+t] widened by one
    bucket on each side, so the result is a superset of all rows within
    tolerance t (exactness is re-checked by the caller).  With t=0 the
    buckets degenerate to exact values.
    """

    def __init__(self, t: float, n_cols: int):
        self.t = t
        self.n_cols = n_cols
        self.root: dict = {}
        self.size = 0

    def _cell(self, v: float):
        if self.t == 0:
            return v
        return math.floor(v / (2.0 * self.t))

    def add(self, vector, payload):
        node = self.root
        for j in range(self.n_cols - 1):
            node = node.setdefault(self._cell(vector[j]), {})
        node.setdefault(self._cell(vector[-1]), []).append(payload)
        self.size += 1

    def query(self, vector) -> list:
        """Payloads of all rows possibly within t of `vector` (superset)."""
        if self.n_cols == 0:
            return []
        out = []
        stack = [(self.root, 0)]
        while stack:
            node, level = stack.pop()
            v = vector[level]
            if self.t == 0:
                cells = (v,)
            else:
                w = 2.0 * self.t
                lo = math.floor((v - self.t) / w) - 1
                hi = math.floor((v + self.t) / w) + 1
                cells = range(lo, hi + 1)
            last = level == self.n_cols - 1
            for c in cells:
                child = node.get(c)
                if child is None:
                    continue
                if last:
                    out.extend(child)
                else:
                    stack.append((child, level + 1))
        return out


class ObservationTable:
    """Where all learning state lives; see the module docstring.

    Prefixes and suffixes are tuples of token indices (suffixes may end in
    the stop index).  Rows of prefixes in P are stored; rows of other
    sequences are computed on demand and cached until the column set grows.
    """

    def __init__(self, weights: PrefixWeights, cfg: TableConfig):
        cfg.validate()
        self.weights = weights
        self.cfg = cfg
        self.alphabet = weights.alphabet
        n = len(self.alphabet)
        self.suffixes: list[tuple[int, ...]] = [(s,) for s in range(n + 1)]
        self.prefixes: list[tuple[int, ...]] = []
        self.p_index: dict[tuple[int, ...], int] = {}
        self.rows: dict[tuple[int, ...], np.ndarray] = {}
        self._row_cache: dict[tuple[int, ...], np.ndarray] = {}
        self.index = RowIndex(cfg.tolerance, len(self.suffixes))
        self.queue: list = []
        self.suffix_cap_hit = len(self.suffixes) >= cfg.max_s
        self.row_cap_hit = False
        self._add_row(())
        self.reseed()

    # -- bookkeeping ---------------------------------------------------------

    @property
    def consistency_enabled(self) -> bool:
        return len(self.suffixes) < self.cfg.max_s

    def seq_row(self, seq) -> np.ndarray:
        """Observation row of an arbitrary sequence (not only P members)."""
        seq = tuple(seq)
        row = self._row_cache.get(seq)
        if row is None:
            row = self.weights.row_vector(seq, self.suffixes)
            row.setflags(write=False)
            self._row_cache[seq] = row
        return row

    def _add_row(self, p):
        self.prefixes.append(p)
        self.p_index[p] = len(self.prefixes) - 1
        row = self.seq_row(p)
        self.rows[p] = row
        self.index.add(row, p)

    def _push(self, p):
        heapq.heappush(self.queue,
                       (-self.weights.prefix_prob(p), len(p), p))

    def reseed(self):
        """Reset the work queue to exactly the current rows."""
        self.queue = [(-self.weights.prefix_prob(p), len(p), p)
                      for p in self.prefixes]
        heapq.heapify(self.queue)

    def close_rows(self, vector) -> list[tuple[int, ...]]:
        """Prefixes in P whose rows are within tolerance of `vector`,
        in insertion order."""
        cands = {p for p in self.index.query(vector)
                 if t_equal(self.rows[p], vector, self.cfg.tolerance)}
        return sorted(cands, key=self.p_index.__getitem__)

    # -- expansion -----------------------------------------------------------

    def expand(self, deadline: float | None = None) -> str:
        """Drain the queue; returns 'closed', 'row-cap' or 'time'.

        'row-cap' means at least one row addition was blocked by max_p;
        the queue is still drained so all remaining cells get filled.
        """
        row_capped = False
        while self.queue:
            if deadline is not None and time.monotonic() > deadline:
                return "time"
            _, _, p = heapq.heappop(self.queue)
            if p in self.p_index:
                if self.consistency_enabled:
                    suffix = self._separating_suffix(p)
                    if suffix is not None:
                        self.add_suffix(suffix)
                        self.reseed()
                        continue
                for s in range(len(self.alphabet)):
                    self._push(p + (s,))
                continue
            if p and self.weights.last_token_prob(p) < self.cfg.eps_p:
                continue
            vec = self.seq_row(p)
            if self.close_rows(vec):
                continue
            if len(self.prefixes) >= self.cfg.max_p:
                self.row_cap_hit = row_capped = True
                continue
            self._add_row(p)
            for s in range(len(self.alphabet)):
                self._push(p + (s,))
        return "row-cap" if row_capped else "closed"

    def _separating_suffix(self, p):
        """Check p against all its tolerance-neighbours; on a consistency
        violation pick the new suffix, or None if consistent (or every
        candidate falls below eps_s).
        """
        t = self.cfg.tolerance
        partners = [q for q in self.close_rows(self.rows[p]) if q != p]
        if not partners:
            return None
        best: dict[tuple[int, ...], float] = {}
        violated = False
        for q in partners:
            for s in range(len(self.alphabet)):
                dp = self.seq_row(p + (s,))
                dq = self.seq_row(q + (s,))
                bad = np.nonzero(np.abs(dp - dq) > t)[0]
                if bad.size == 0:
                    continue
                violated = True
                for j in bad:
                    cand = (s,) + self.suffixes[j]
                    score = min(self._conditional(p, cand),
                                self._conditional(q, cand))
                    if score >= self.cfg.eps_s:
                        prev = best.get(cand)
                        if prev is None or score > prev:
                            best[cand] = score
        if not violated or not best:
            return None
        # Highest score wins; ties go to the shortlex-least suffix.
        return min(best, key=lambda c: (-best[c], len(c), c))

    def _conditional(self, p, suffix) -> float:
        pw = self.weights.prefix_prob(p)
        if pw == 0.0:
            return 0.0
        return self.weights.prefix_prob(p + suffix) / pw

    def add_suffix(self, suffix):
        suffix = tuple(suffix)
        if suffix in self.suffixes:
            raise ValueError("suffix %r already present" % (suffix,))
        self.suffixes.append(suffix)
        if len(self.suffixes) >= self.cfg.max_s:
            self.suffix_cap_hit = True
        self._row_cache = {}
        self.rows = {}
        self.index = RowIndex(self.cfg.tolerance, len(self.suffixes))
        for p in self.prefixes:
            row = self.seq_row(p)
            self.rows[p] = row
            self.index.add(row, p)

    def add_counterexample(self, w):
        """Add every prefix of w minus its last step as a row (bypassing the
        eps_p filter and the row cap) and reseed the queue.  The divergence
        evidence must grow P."""
        u = tuple(w)[:-1]
        grew = False
        for k in range(len(u) + 1):
            p = u[:k]
            if p not in self.p_index:
                self._add_row(p)
                grew = True
        if not grew:
            raise RuntimeError(
                "counterexample %r added no new rows; the hypothesis should "
                "already agree with the table here" % (w,))
        self.reseed()

    # -- debugging -----------------------------------------------------------

    def dump(self) -> str:
        """Aligned text rendering of P, S and the matrix."""
        def name(seq):
            return "".join(self.alphabet.token(i) for i in seq) or "''"

        header = ["P \\ S"] + [name(s) for s in self.suffixes]
        lines = [header]
        for p in self.prefixes:
            lines.append([name(p)] + ["%.6g" % v for v in self.rows[p]])
        widths = [max(len(row[j]) for row in lines)
                  for j in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in lines) + "\n"
