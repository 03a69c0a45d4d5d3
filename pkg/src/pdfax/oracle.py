"""Next-token oracles: the query surface the learner sees.

An oracle answers exactly one question -- "given this prefix of token
indices, what is the distribution over the next token or stop?" -- which is
the interface exposed by language models.  Everything the learner computes
(prefix weights, observation rows) is derived from that single primitive
here, so the learner itself never touches model internals.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from typing import Protocol, runtime_checkable

import numpy as np

from .model import Alphabet, Pdfa


@runtime_checkable
class Oracle(Protocol):
    def alphabet(self) -> Alphabet: ...

    def next_dist(self, prefix: tuple[int, ...]) -> np.ndarray:
        """Distribution over alphabet tokens plus stop, as an array of
        length len(alphabet)+1 summing to 1."""
        ...


class PdfaOracle:
    """Wraps a PDFA as an oracle (the ground-truth case in tests)."""

    def __init__(self, pdfa: Pdfa):
        self._pdfa = pdfa

    def alphabet(self) -> Alphabet:
        return self._pdfa.alphabet

    def next_dist(self, prefix):
        return self._pdfa.next_dist(prefix)


class FnOracle:
    """Adapts a plain function prefix -> distribution."""

    def __init__(self, alphabet: Alphabet, fn):
        self._alphabet = alphabet
        self._fn = fn

    def alphabet(self) -> Alphabet:
        return self._alphabet

    def next_dist(self, prefix):
        return np.asarray(self._fn(prefix), dtype=np.float64)


class CachedOracle:
    """Memoizes next_dist and counts traffic.

    n_queries counts every next_dist call, n_misses only the ones that
    reached the underlying oracle.
    """

    def __init__(self, inner: Oracle):
        self._inner = inner
        self._cache: dict[tuple[int, ...], np.ndarray] = {}
        self.n_queries = 0
        self.n_misses = 0

    def alphabet(self) -> Alphabet:
        return self._inner.alphabet()

    def next_dist(self, prefix):
        prefix = tuple(prefix)
        self.n_queries += 1
        hit = self._cache.get(prefix)
        if hit is None:
            self.n_misses += 1
            hit = np.asarray(self._inner.next_dist(prefix), dtype=np.float64)
            hit.setflags(write=False)
            self._cache[prefix] = hit
        return hit


class PrefixWeights:
    """Derived quantities the learner works with, computed by telescoping
    oracle answers along prefixes and memoized.

    prefix_prob(p)       product of per-step next-token probabilities of p
                         (1 for the empty prefix); a trailing stop index
                         contributes the stop probability of the last step.
    last_token_prob(w)   probability of just the final step of non-empty w.
    row_vector(p, suffixes)  observation row: last_token_prob(p + s) per s.
    """

    def __init__(self, oracle: Oracle):
        self.oracle = oracle if isinstance(oracle, CachedOracle) else CachedOracle(oracle)
        self._alphabet = self.oracle.alphabet()
        self._prefix_prob: dict[tuple[int, ...], float] = {(): 1.0}

    @property
    def alphabet(self) -> Alphabet:
        return self._alphabet

    def next_dist(self, prefix) -> np.ndarray:
        return self.oracle.next_dist(tuple(prefix))

    def prefix_prob(self, seq) -> float:
        seq = tuple(seq)
        known = self._prefix_prob.get(seq)
        if known is not None:
            return known
        # Walk back to the longest memoized ancestor, then forward again.
        stack = []
        cur = seq
        while cur not in self._prefix_prob:
            stack.append(cur)
            cur = cur[:-1]
        p = self._prefix_prob[cur]
        while stack:
            cur = stack.pop()
            p *= float(self.next_dist(cur[:-1])[cur[-1]])
            self._prefix_prob[cur] = p
        return p

    def last_token_prob(self, seq) -> float:
        seq = tuple(seq)
        if not seq:
            raise ValueError("last_token_prob needs a non-empty sequence")
        return float(self.next_dist(seq[:-1])[seq[-1]])

    def row_vector(self, prefix, suffixes) -> np.ndarray:
        prefix = tuple(prefix)
        return np.array([self.last_token_prob(prefix + tuple(s)) for s in suffixes],
                        dtype=np.float64)


class BridgeError(RuntimeError):
    """Raised when an external oracle process violates the wire protocol
    or dies."""


class ExternalOracle:
    """Client for an oracle served by a child process.

    Protocol: JSON objects, one per line, over the child's stdin/stdout.
    Requests carry an id, an op ("alphabet" or "next_dist"), and for
    next_dist a prefix given as token strings.  Responses echo the id and
    carry either the field for that op or an "error" string.
    """

    def __init__(self, cmd, renorm_tol: float = 1e-6):
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        self._cmd = list(cmd)
        self._renorm_tol = renorm_tol
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                self._cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as e:
            raise BridgeError("cannot start oracle process %r: %s"
                              % (self._cmd, e))
        self._alphabet = Alphabet(self._call("alphabet")["alphabet"])

    def _call(self, op, **fields):
        self._next_id += 1
        req = {"id": self._next_id, "op": op}
        req.update(fields)
        try:
            self._proc.stdin.write(json.dumps(req) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise BridgeError("oracle process pipe failed: %s" % e)
        if not line:
            raise BridgeError("oracle process closed its output"
                              " (exit code %r)" % self._proc.poll())
        try:
            resp = json.loads(line)
        except json.JSONDecodeError:
            raise BridgeError("oracle sent a non-JSON line: %r" % line[:200])
        if not isinstance(resp, dict):
            raise BridgeError("oracle response is not an object: %r" % resp)
        if resp.get("error") is not None:
            raise BridgeError("oracle error: %s" % resp["error"])
        if resp.get("id") != req["id"]:
            raise BridgeError("oracle response id %r does not match request %r"
                              % (resp.get("id"), req["id"]))
        return resp

    def alphabet(self) -> Alphabet:
        return self._alphabet

    def next_dist(self, prefix):
        tokens = self._alphabet.decode(prefix)
        resp = self._call("next_dist", prefix=tokens)
        dist = resp.get("dist")
        if not isinstance(dist, dict):
            raise BridgeError("next_dist response lacks a 'dist' map")
        expected = set(self._alphabet.tokens) | {"$"}
        if set(dist) != expected:
            raise BridgeError("dist keys %r do not cover the alphabet plus $"
                              % sorted(dist))
        out = np.empty(len(self._alphabet) + 1)
        for tok, v in dist.items():
            out[self._alphabet.index(tok)] = float(v)
        total = out.sum()
        if not np.isfinite(total) or abs(total - 1.0) > self._renorm_tol or out.min() < 0:
            raise BridgeError("dist does not sum to 1 within %g (sum=%r)"
                              % (self._renorm_tol, total))
        return out / total

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
