"""Probabilistic deterministic finite automata (PDFAs).

A PDFA couples a deterministic transition function over a finite token
alphabet with one distribution per state over "emit this token and move" /
"stop here".  Sequences are represented as tuples of token *indices*; the
reserved stop marker ``$`` gets the index ``len(alphabet)`` and may only
appear as the last element of a sequence.
"""

from __future__ import annotations

import json

import numpy as np

END = "$"

# A weight row may miss an exact sum of 1 by float dust; anything worse than
# this is treated as a genuinely broken distribution.
DIST_TOL = 1e-9


class Alphabet:
    """Immutable ordered token inventory. '$' is reserved for stopping."""

    __slots__ = ("tokens", "_index")

    def __init__(self, tokens):
        tokens = tuple(str(t) for t in tokens)
        if not tokens:
            raise ValueError("alphabet must contain at least one token")
        if len(set(tokens)) != len(tokens):
            raise ValueError("alphabet tokens must be unique")
        if END in tokens:
            raise ValueError("'%s' is reserved for the stop marker" % END)
        self.tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(range(len(self.tokens)))

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.tokens == other.tokens

    def __hash__(self):
        return hash(self.tokens)

    def __repr__(self):
        return "Alphabet(%r)" % (self.tokens,)

    @property
    def end(self) -> int:
        """Index used for the stop marker."""
        return len(self.tokens)

    def index(self, token: str) -> int:
        if token == END:
            return self.end
        try:
            return self._index[token]
        except KeyError:
            raise KeyError("token %r not in alphabet %r" % (token, self.tokens))

    def token(self, i: int) -> str:
        return END if i == self.end else self.tokens[i]

    def encode(self, tokens) -> tuple[int, ...]:
        """Token strings -> index tuple. '$' allowed only in last position."""
        seq = tuple(self.index(t) for t in tokens)
        check_seq(seq, self.end)
        return seq

    def decode(self, seq) -> list[str]:
        return [self.token(i) for i in seq]


def check_seq(seq, end_index):
    """Validate a token-index sequence: '$' only as the final element."""
    for k, i in enumerate(seq):
        if not 0 <= i <= end_index:
            raise ValueError("token index %r out of range" % (i,))
        if i == end_index and k != len(seq) - 1:
            raise ValueError("stop marker only allowed at the end of a sequence")


class Pdfa:
    """A probabilistic deterministic finite automaton.

    trans[q, s]   -- successor state of q on token s (always defined)
    weights[q, s] -- probability of emitting s at q, for s in alphabet,
                     plus the stopping probability in the last column.

    Each weight row must sum to 1 within ``DIST_TOL``; rows are renormalized
    exactly once here.  Rows that already sum to exactly 1.0 are left
    bit-identical, which matters for fixtures sitting on tolerance boundaries.
    """

    def __init__(self, alphabet: Alphabet, trans, weights, initial: int = 0,
                 names=None):
        self.alphabet = alphabet
        n = len(alphabet)
        trans = np.asarray(trans, dtype=np.int64)
        weights = np.array(weights, dtype=np.float64)
        if trans.ndim != 2 or trans.shape[1] != n:
            raise ValueError("trans must have shape (n_states, %d)" % n)
        n_states = trans.shape[0]
        if weights.shape != (n_states, n + 1):
            raise ValueError("weights must have shape (n_states, %d)" % (n + 1))
        if n_states == 0:
            raise ValueError("need at least one state")
        if not 0 <= initial < n_states:
            raise ValueError("initial state out of range")
        if trans.min() < 0 or trans.max() >= n_states:
            raise ValueError("transition target out of range")
        if weights.min() < -0.0:
            raise ValueError("negative weight")
        sums = weights.sum(axis=1)
        bad = np.abs(sums - 1.0) > DIST_TOL
        if bad.any():
            q = int(np.argmax(bad))
            raise ValueError(
                "weight row of state %d sums to %.12g, not 1" % (q, sums[q]))
        weights = weights / sums[:, None]
        self.trans = trans
        self.weights = weights
        self.initial = int(initial)
        if names is None:
            names = tuple("q%d" % i for i in range(n_states))
        else:
            names = tuple(str(x) for x in names)
            if len(names) != n_states or len(set(names)) != n_states:
                raise ValueError("names must be unique, one per state")
        self.names = names

    @property
    def n_states(self) -> int:
        return self.trans.shape[0]

    def __repr__(self):
        return "Pdfa(%d states over %r)" % (self.n_states, self.alphabet.tokens)

    # -- behaviour ---------------------------------------------------------

    def walk(self, seq, start=None) -> int:
        """State reached from `start` (default: initial) on a token sequence."""
        q = self.initial if start is None else start
        for s in seq:
            q = int(self.trans[q, s])
        return q

    def next_dist(self, prefix) -> np.ndarray:
        """Next-token distribution (incl. stop) after reading `prefix`."""
        return self.weights[self.walk(prefix)]

    def seq_prob(self, seq) -> float:
        """Probability of emitting exactly `seq` and then stopping."""
        p = self.prefix_prob(seq)
        return p * float(self.weights[self.walk(seq), self.alphabet.end])

    def prefix_prob(self, seq) -> float:
        """Probability that a sample starts with `seq`."""
        q = self.initial
        p = 1.0
        for s in seq:
            p *= float(self.weights[q, s])
            q = int(self.trans[q, s])
        return p

    def sample(self, rng, max_len: int):
        """One sample: (token index tuple, terminated flag).  Tokens come
        from inverse-cdf draws, one uniform per step, matching the batch
        kernels bit for bit."""
        q = self.initial
        out = []
        end = self.alphabet.end
        cum = np.cumsum(self.weights, axis=1)
        for _ in range(max_len):
            s = min(int(np.searchsorted(cum[q], rng.random(), side="right")),
                    end)
            if s == end:
                return tuple(out), True
            out.append(s)
            q = int(self.trans[q, s])
        return tuple(out), False

    def sample_many(self, rng, count: int, max_len: int):
        """Batch sampling via the kernel backend; same output layout as
        repeated sample() but drawn from uniforms in (sequence, step) order."""
        from . import _kernels

        cum = np.cumsum(self.weights, axis=1)
        out = []
        chunk = 65536
        done = 0
        while done < count:
            k = min(chunk, count - done)
            u = rng.random((k, max_len + 1))
            toks, lengths, term = _kernels.draw_tokens(
                self.trans, cum, self.initial, u, max_len)
            for i in range(k):
                out.append((tuple(int(x) for x in toks[i, :lengths[i]]),
                            bool(term[i])))
            done += k
        return out

    def is_live(self) -> bool:
        """True if every state can reach positive stopping probability via
        positive-weight transitions."""
        end = self.alphabet.end
        alive = {q for q in range(self.n_states) if self.weights[q, end] > 0}
        changed = True
        while changed:
            changed = False
            for q in range(self.n_states):
                if q in alive:
                    continue
                for s in range(end):
                    if self.weights[q, s] > 0 and int(self.trans[q, s]) in alive:
                        alive.add(q)
                        changed = True
                        break
        return len(alive) == self.n_states

    # -- serialization -----------------------------------------------------

    def to_json_obj(self) -> dict:
        states = {}
        for q in range(self.n_states):
            nxt = {self.alphabet.tokens[s]: self.names[int(self.trans[q, s])]
                   for s in range(len(self.alphabet))}
            w = {self.alphabet.tokens[s]: float(self.weights[q, s])
                 for s in range(len(self.alphabet))}
            w[END] = float(self.weights[q, self.alphabet.end])
            states[self.names[q]] = {"next": nxt, "weights": w}
        return {
            "alphabet": list(self.alphabet.tokens),
            "initial": self.names[self.initial],
            "states": states,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_obj(), f, indent=2)
            f.write("\n")

    @classmethod
    def from_json_obj(cls, obj) -> "Pdfa":
        def fail(msg):
            raise PdfaFormatError(msg)

        if not isinstance(obj, dict):
            fail("top level must be an object")
        for key in ("alphabet", "initial", "states"):
            if key not in obj:
                fail("missing top-level field %r" % key)
        alphabet = Alphabet(obj["alphabet"])
        states = obj["states"]
        if not isinstance(states, dict) or not states:
            fail("'states' must be a non-empty object")
        names = list(states.keys())
        idx = {name: i for i, name in enumerate(names)}
        if obj["initial"] not in idx:
            fail("initial state %r not defined" % obj["initial"])
        n = len(alphabet)
        trans = np.zeros((len(names), n), dtype=np.int64)
        weights = np.zeros((len(names), n + 1))
        for name, st in states.items():
            if not isinstance(st, dict):
                fail("state %r must be an object" % name)
            nxt = st.get("next")
            w = st.get("weights")
            if not isinstance(nxt, dict) or not isinstance(w, dict):
                fail("state %r needs 'next' and 'weights' maps" % name)
            for s, tok in enumerate(alphabet.tokens):
                if tok not in nxt:
                    fail("state %r: missing transition for token %r" % (name, tok))
                if nxt[tok] not in idx:
                    fail("state %r: unknown successor %r" % (name, nxt[tok]))
                trans[idx[name], s] = idx[nxt[tok]]
            for s, tok in enumerate(alphabet.tokens):
                if tok not in w:
                    fail("state %r: missing weight for token %r" % (name, tok))
                weights[idx[name], s] = float(w[tok])
            if END not in w:
                fail("state %r: missing weight for %r" % (name, END))
            weights[idx[name], n] = float(w[END])
            extra = set(w) - set(alphabet.tokens) - {END}
            if extra:
                fail("state %r: weights for unknown tokens %r" % (name, sorted(extra)))
        try:
            return cls(alphabet, trans, weights, initial=idx[obj["initial"]],
                       names=names)
        except ValueError as e:
            fail(str(e))

    @classmethod
    def load(cls, path) -> "Pdfa":
        with open(path, "r", encoding="utf-8") as f:
            try:
                obj = json.load(f)
            except json.JSONDecodeError as e:
                raise PdfaFormatError("%s: %s" % (path, e))
        return cls.from_json_obj(obj)

    def to_dot(self) -> str:
        """One node per state (labeled id + stop weight), one labeled edge
        per (state, token)."""
        end = self.alphabet.end
        lines = ["digraph pdfa {", "  rankdir=LR;"]
        for q in range(self.n_states):
            lines.append('  "%s" [label="%s\\n$=%g"];'
                         % (self.names[q], self.names[q], self.weights[q, end]))
        for q in range(self.n_states):
            for s in range(end):
                lines.append('  "%s" -> "%s" [label="%s / %g"];'
                             % (self.names[q], self.names[int(self.trans[q, s])],
                                self.alphabet.tokens[s], self.weights[q, s]))
        lines.append("}")
        return "\n".join(lines) + "\n"


class PdfaFormatError(ValueError):
    """Raised when a PDFA file or json object does not follow the format."""


def seal_rows(weights):
    """Nudge each row's stop entry so the float64 row sum is exactly 1.0.

    Used by fixture constructors whose comparisons sit on exact tolerance
    boundaries: renormalization by a sum one ulp away from 1 would shift
    stored values and silently flip boundary comparisons.
    """
    w = np.array(weights, dtype=np.float64)
    for row in w:
        if row.sum() != 1.0:
            row[-1] = 1.0 - row[:-1].sum()
        if row.sum() != 1.0 or row[-1] < 0:  # pragma: no cover - defensive
            raise ValueError("cannot seal weight row %r" % (list(row),))
    return w
