"""The outer learning loop: expand the table, build a hypothesis, look for
a counterexample, repeat.  Handles anytime stopping under row/suffix/time/
round limits and produces a structured run report.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import build_pdfa, cluster_table
from .metrics import exact_divergence
from .model import Alphabet, Pdfa
from .oracle import Oracle, PrefixWeights
from .table import ObservationTable, TableConfig


@dataclass
class ExtractionConfig:
    table: TableConfig = field(default_factory=TableConfig)
    eq_samples: int = 500
    eq_max_len: int | None = None   # None: calibrate from target samples
    seed: int = 0
    max_rounds: int | None = None
    keep_trace: bool = False        # record clustering stages per round

    def validate(self):
        self.table.validate()
        if self.eq_samples < 1:
            raise ValueError("eq_samples must be at least 1")


@dataclass
class RoundInfo:
    size: int                       # hypothesis states this round
    counterexample: tuple[str, ...] | None
    n_queries: int                  # oracle calls issued during the round
    n_misses: int                   # ... of which reached the oracle
    wall_time: float


@dataclass
class ExtractionReport:
    final: Pdfa
    rounds: list[RoundInfo]
    stop_reason: str                # accepted | row-cap | suffix-cap | time
                                    # | round-cap | error
    p_snapshot: list[tuple[str, ...]]
    s_snapshot: list[tuple[str, ...]]
    config: ExtractionConfig
    error_message: str | None = None
    trace: list[dict] | None = None

    def to_text(self, include_times: bool = True) -> str:
        c = self.config
        lines = [
            "extraction report",
            "  tolerance=%g eps_p=%g eps_s=%g max_p=%d max_s=%d"
            % (c.table.tolerance, c.table.eps_p, c.table.eps_s,
               c.table.max_p, c.table.max_s),
            "  eq_samples=%d seed=%d" % (c.eq_samples, c.seed),
            "  stop: %s" % self.stop_reason,
            "  states: %d  rows: %d  suffixes: %d"
            % (self.final.n_states, len(self.p_snapshot),
               len(self.s_snapshot)),
        ]
        if self.error_message:
            lines.append("  error: %s" % self.error_message)
        for i, r in enumerate(self.rounds, 1):
            cex = " ".join(r.counterexample) if r.counterexample else "-"
            entry = ("  round %d: states=%d queries=%d misses=%d cex=%s"
                     % (i, r.size, r.n_queries, r.n_misses, cex))
            if include_times:
                entry += " time=%.3fs" % r.wall_time
            lines.append(entry)
        return "\n".join(lines) + "\n"


class _Timeout(Exception):
    pass


def sample_next(rng, dist) -> int:
    """Draw a token index from a next-step distribution; the inverse-cdf
    convention matches the batch sampling kernels bit for bit."""
    cum = np.cumsum(dist)
    j = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(j, len(dist) - 1)


def sample_sequence(next_dist, alphabet: Alphabet, rng, max_len: int):
    """Sample (tokens, terminated) from any next_dist function."""
    end = alphabet.end
    out = []
    for _ in range(max_len):
        s = sample_next(rng, next_dist(tuple(out)))
        if s == end:
            return tuple(out), True
        out.append(s)
    return tuple(out), False


def sampling_equivalence(weights: PrefixWeights, hyp: Pdfa,
                         cfg: ExtractionConfig, round_index: int,
                         deadline: float | None = None):
    """Search for a sequence on which target and hypothesis next-step
    distributions drift beyond tolerance.

    Draws samples alternately from the target and the hypothesis and
    compares the two distributions at every prefix of every sample.
    Returns the first divergence as prefix+token, or None.  Fully
    determined by (cfg.seed, round_index).
    """
    t = cfg.table.tolerance
    rng = np.random.default_rng((cfg.seed, round_index))
    alphabet = weights.alphabet
    max_len = cfg.eq_max_len
    if max_len is None:
        lens = [len(sample_sequence(weights.next_dist, alphabet, rng, 10000)[0])
                for _ in range(100)]
        max_len = max(1, math.ceil(4 * sum(lens) / len(lens)))
    for i in range(cfg.eq_samples):
        if deadline is not None and time.monotonic() > deadline:
            raise _Timeout()
        if i % 2 == 0:
            w, _ = sample_sequence(weights.next_dist, alphabet, rng, max_len)
        else:
            w, _ = hyp.sample(rng, max_len)
        for k in range(len(w) + 1):
            u = w[:k]
            gap = np.abs(weights.next_dist(u) - hyp.next_dist(u))
            bad = np.nonzero(gap > t)[0]
            if bad.size:
                return u + (int(bad[0]),)
    return None


def exact_equivalence_for(target: Pdfa):
    """Equivalence routine for tests where the target is itself a known
    PDFA: product search instead of sampling, so acceptance is a proof."""

    def eq(weights, hyp, cfg, round_index, deadline=None):
        t = cfg.table.tolerance
        witness = exact_divergence(hyp, target, t)
        if witness is None:
            return None
        u = witness
        gap = np.abs(target.next_dist(u) - hyp.next_dist(u))
        bad = np.nonzero(gap > t)[0]
        return u + (int(bad[0]),)

    return eq


def scripted_equivalence(counterexamples):
    """Returns the given counterexamples in order, then accepts."""
    queue = list(counterexamples)

    def eq(weights, hyp, cfg, round_index, deadline=None):
        if queue:
            return tuple(queue.pop(0))
        return None

    return eq


def extract(oracle: Oracle, cfg: ExtractionConfig | None = None,
            equivalence=None) -> ExtractionReport:
    """Learn a PDFA from a next-token oracle.

    `equivalence` may override the sampling counterexample search; it is
    called as f(weights, hypothesis, cfg, round_index, deadline) and must
    return None to accept or a token-index sequence whose last step
    diverges.  Oracle failures yield a partial report rather than raising.
    """
    cfg = cfg or ExtractionConfig()
    cfg.validate()
    eq = equivalence or sampling_equivalence
    weights = PrefixWeights(oracle)
    alphabet = weights.alphabet
    tbl: ObservationTable | None = None
    deadline = None
    if cfg.table.time_budget is not None:
        deadline = time.monotonic() + cfg.table.time_budget

    rounds: list[RoundInfo] = []
    trace: list[dict] | None = [] if cfg.keep_trace else None
    final: Pdfa | None = None
    stop = None
    error_message = None
    round_index = 0

    def decode_all(seqs):
        return [tuple(alphabet.decode(s)) for s in seqs]

    while stop is None:
        round_index += 1
        t0 = time.monotonic()
        q0, m0 = weights.oracle.n_queries, weights.oracle.n_misses
        cex = None
        try:
            if tbl is None:
                tbl = ObservationTable(weights, cfg.table)
            outcome = tbl.expand(deadline)
            cl, stages = cluster_table(tbl)
            final = build_pdfa(cl, tbl)
            if trace is not None:
                trace.append({
                    "prefixes": decode_all(tbl.prefixes),
                    "suffixes": decode_all(tbl.suffixes),
                    "stages": stages,
                })
            if outcome == "time":
                stop = "time"
            elif outcome == "row-cap":
                stop = "row-cap"
            elif deadline is not None and time.monotonic() > deadline:
                stop = "time"
            else:
                cex = eq(weights, final, cfg, round_index, deadline)
                if cex is None:
                    stop = "suffix-cap" if tbl.suffix_cap_hit else "accepted"
                elif (cfg.max_rounds is not None
                      and round_index >= cfg.max_rounds):
                    stop = "round-cap"
                else:
                    tbl.add_counterexample(cex)
        except _Timeout:
            stop = "time"
        except AssertionError:
            raise
        except Exception as e:  # oracle failure: report what we have
            stop = "error"
            error_message = "%s: %s" % (type(e).__name__, e)
            if final is None:
                try:
                    cl, _ = cluster_table(tbl)
                    final = build_pdfa(cl, tbl)
                except Exception:
                    final = _fallback_pdfa(weights)
        rounds.append(RoundInfo(
            size=final.n_states,
            counterexample=(tuple(alphabet.decode(cex)) if cex is not None
                            else None),
            n_queries=weights.oracle.n_queries - q0,
            n_misses=weights.oracle.n_misses - m0,
            wall_time=time.monotonic() - t0,
        ))

    return ExtractionReport(
        final=final,
        rounds=rounds,
        stop_reason=stop,
        p_snapshot=decode_all(tbl.prefixes) if tbl is not None else [],
        s_snapshot=decode_all(tbl.suffixes) if tbl is not None else [],
        config=cfg,
        error_message=error_message,
        trace=trace,
    )


def _fallback_pdfa(weights: PrefixWeights) -> Pdfa:
    """Single-state stand-in built from whatever the cache knows about the
    empty prefix; used only when the oracle died before a first build."""
    n = len(weights.alphabet)
    try:
        row = np.asarray(weights.next_dist(()), dtype=np.float64)
    except Exception:
        row = np.full(n + 1, 1.0 / (n + 1))
    row = np.clip(row, 0.0, None)
    total = row.sum()
    row = row / total if total > 0 else np.full(n + 1, 1.0 / (n + 1))
    return Pdfa(weights.alphabet, np.zeros((1, n), dtype=np.int64),
                row[None, :])


def choose_tolerance_hint(runs: list[tuple[float, int]]) -> str:
    """Advise on the tolerance given (tolerance, final state count) pairs
    from previous extraction runs.  A run that collapsed to a single state
    signals an over-wide tolerance."""
    if not runs:
        return "no runs to analyze"
    collapsed = [t for t, size in runs if size == 1]
    informative = [(t, size) for t, size in runs if size > 1]
    if not collapsed:
        return "no adjustment suggested"
    if informative:
        t_ok, size = max(informative)
        return ("tolerance %g is adequate (%d states); %g collapsed to a "
                "single state" % (t_ok, size, min(collapsed)))
    t_bad = min(collapsed)
    return ("tolerance %g collapsed the model to a single state; try a "
            "smaller tolerance, e.g. %g" % (t_bad, t_bad / 2))
