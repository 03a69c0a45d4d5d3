"""Command-line entry point.

Targets are named by URI-ish strings, resolved by `open_target`:

    grammar://tomita/3   built-in weighted grammar (tomita/1..7, uhl/1..3,
                         appb worked-example fixture)
    file:model.pdfa      PDFA file; bare paths are treated the same way
    ngram:5:corpus.txt   n-gram model counted from a sample file
    external:CMD         child process speaking the line protocol

Exit codes: 0 success (including extractions stopped by a configured
limit), 2 unresolvable target / bad input / I/O failure, 3 oracle
protocol failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import metrics
from .extract import (ExtractionConfig, choose_tolerance_hint, extract,
                      sample_sequence)
from .grammars import from_identifier
from .model import Pdfa, PdfaFormatError
from .ngram import NgramModel, ngram_build, read_samples
from .oracle import BridgeError, ExternalOracle, PdfaOracle
from .table import TableConfig


class TargetError(Exception):
    """A target string that cannot be resolved to a model."""


def open_target(spec: str):
    """Resolve a target string to (model, close-callable-or-None)."""
    if spec.startswith("grammar://"):
        try:
            return from_identifier(spec), None
        except ValueError as e:
            raise TargetError(str(e))
    if spec.startswith("ngram:"):
        n_str, sep, path = spec[len("ngram:"):].partition(":")
        if not sep or not path:
            raise TargetError("ngram target must look like ngram:N:PATH")
        try:
            n = int(n_str)
        except ValueError:
            raise TargetError("bad n-gram order %r" % n_str)
        try:
            samples, alphabet = read_samples(path)
        except (OSError, ValueError) as e:
            raise TargetError("cannot read samples from %s: %s" % (path, e))
        try:
            return ngram_build(samples, n, alphabet), None
        except ValueError as e:
            raise TargetError(str(e))
    if spec.startswith("external:"):
        cmd = spec[len("external:"):]
        try:
            oracle = ExternalOracle(cmd)
        except (OSError, ValueError) as e:
            raise TargetError("cannot launch %r: %s" % (cmd, e))
        return oracle, oracle.close
    path = spec[len("file:"):] if spec.startswith("file:") else spec
    try:
        return Pdfa.load(path), None
    except OSError as e:
        raise TargetError("cannot read %s: %s" % (path, e))
    except PdfaFormatError as e:
        raise TargetError("bad PDFA file %s: %s" % (path, e))


def _as_oracle(model):
    return PdfaOracle(model) if isinstance(model, Pdfa) else model


def _model_size(model) -> str:
    if isinstance(model, Pdfa):
        return str(model.n_states)
    if isinstance(model, NgramModel):
        return str(len(model.counts))
    return "-"


def cmd_extract(args) -> int:
    cfg = ExtractionConfig(
        table=TableConfig(
            tolerance=args.tolerance,
            eps_p=args.eps_p,
            eps_s=args.eps_s,
            max_p=args.max_p,
            max_s=args.max_s,
            time_budget=args.time_budget,
        ),
        eq_samples=args.eq_samples,
        eq_max_len=args.eq_max_len,
        seed=args.seed,
        max_rounds=args.max_rounds,
    )
    model, close = open_target(args.target)
    try:
        report = extract(_as_oracle(model), cfg)
    finally:
        if close is not None:
            close()
    report.final.save(args.out)
    with open(args.out + ".report", "w", encoding="utf-8") as f:
        f.write(report.to_text())
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as f:
            f.write(report.final.to_dot())
    sys.stdout.write(report.to_text())
    return 3 if report.stop_reason == "error" else 0


def cmd_evaluate(args) -> int:
    reference, close_ref = open_target(args.target)
    closers = [] if close_ref is None else [close_ref]
    try:
        do_wer = args.wer or args.ndcg is None
        do_ndcg = args.ndcg is not None or not args.wer
        k = args.ndcg if args.ndcg is not None else 2
        rows = [("model", "wer", "ndcg_%d" % k, "size", "seconds")]
        for spec in args.models:
            model, close = open_target(spec)
            if close is not None:
                closers.append(close)
            t0 = time.monotonic()
            w = (metrics.wer(model, reference, n_samples=args.samples,
                             seed=args.seed, max_len=args.max_len)
                 if do_wer else None)
            n = (metrics.ndcg(model, reference, k=k,
                              n_prefixes=args.samples, seed=args.seed,
                              max_len=args.max_len)
                 if do_ndcg else None)
            rows.append((spec,
                         "-" if w is None else "%.6f" % w,
                         "-" if n is None else "%.6f" % n,
                         _model_size(model),
                         "%.2f" % (time.monotonic() - t0)))
    finally:
        for close in closers:
            close()
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        sys.stdout.write(
            "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
            + "\n")
    return 0


def cmd_sample(args) -> int:
    model, close = open_target(args.target)
    try:
        rng = np.random.default_rng(args.seed)
        if isinstance(model, Pdfa):
            alphabet = model.alphabet
            seqs = [s for s, _ in model.sample_many(rng, args.count,
                                                    args.max_len)]
        else:
            alphabet = model.alphabet()
            seqs = [sample_sequence(model.next_dist, alphabet, rng,
                                    args.max_len)[0]
                    for _ in range(args.count)]
    finally:
        if close is not None:
            close()
    with open(args.out, "w", encoding="utf-8") as f:
        for seq in seqs:
            f.write(" ".join(alphabet.decode(seq)) + "\n")
    return 0


def cmd_export_dot(args) -> int:
    model, close = open_target(args.target)
    try:
        if not isinstance(model, Pdfa):
            raise TargetError("target %r is not a PDFA; cannot export DOT"
                              % args.target)
        text = model.to_dot()
    finally:
        if close is not None:
            close()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_tolerance_hint(args) -> int:
    runs = []
    for item in args.runs:
        t_str, sep, size_str = item.partition(":")
        try:
            if not sep:
                raise ValueError
            runs.append((float(t_str), int(size_str)))
        except ValueError:
            raise TargetError("run must look like TOLERANCE:STATES, got %r"
                              % item)
    sys.stdout.write(choose_tolerance_hint(runs) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdfax",
        description="Learn and evaluate probabilistic automata from "
                    "next-token oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="learn a PDFA from a target")
    p.add_argument("--target", required=True)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--eps-p", type=float, default=0.01)
    p.add_argument("--eps-s", type=float, default=0.01)
    p.add_argument("--max-p", type=int, default=5000)
    p.add_argument("--max-s", type=int, default=100)
    p.add_argument("--eq-samples", type=int, default=500)
    p.add_argument("--eq-max-len", type=int, default=None)
    p.add_argument("--time-budget", type=float, default=None,
                   help="seconds before an anytime stop")
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="extracted.pdfa")
    p.add_argument("--dot", default=None)
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("evaluate",
                       help="score models against a reference target")
    p.add_argument("models", nargs="+",
                   help="model target strings (files, grammars, ngrams)")
    p.add_argument("--target", required=True, help="reference target")
    p.add_argument("--wer", action="store_true")
    p.add_argument("--ndcg", type=int, default=None, metavar="K")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--max-len", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("sample", help="write sampled sequences to a file")
    p.add_argument("--target", required=True)
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--max-len", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("export-dot", help="write a PDFA target as DOT")
    p.add_argument("--target", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export_dot)

    p = sub.add_parser("tolerance-hint",
                       help="advise on tolerance from past runs")
    p.add_argument("runs", nargs="+", metavar="TOLERANCE:STATES")
    p.set_defaults(fn=cmd_tolerance_hint)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TargetError as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    except BridgeError as e:
        sys.stderr.write("bridge error: %s\n" % e)
        return 3
    except (OSError, ValueError) as e:
        sys.stderr.write("error: %s\n" % e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
