"""Numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection:
    PDFAX_BACKEND=numba   require numba (ImportError if missing)
    PDFAX_BACKEND=numpy   force the fallback
    unset                 use numba when importable, else numpy

Both implementations of each kernel are semantically identical, including
tie handling, so results are bit-for-bit the same across backends.
"""

from __future__ import annotations

import os

import numpy as np

_mode = os.environ.get("PDFAX_BACKEND", "").strip().lower()
if _mode not in ("", "numba", "numpy"):
    raise ValueError("PDFAX_BACKEND must be 'numba' or 'numpy', got %r" % _mode)

if _mode == "numpy":
    _njit = None
else:
    try:
        from numba import njit as _njit
    except ImportError:
        if _mode == "numba":
            raise
        _njit = None

USING_NUMBA = _njit is not None


def _draw_tokens_impl(trans, cum, initial, u, max_len):
    # One row of uniforms per sequence; token chosen by inverse-cdf on the
    # cumulative weight row (first cell strictly above u).
    count = u.shape[0]
    end = trans.shape[1]
    toks = np.zeros((count, max_len), dtype=np.int64)
    lengths = np.zeros(count, dtype=np.int64)
    term = np.zeros(count, dtype=np.bool_)
    for i in range(count):
        q = initial
        k = 0
        while k < max_len:
            row = cum[q]
            x = u[i, k]
            s = np.searchsorted(row, x, side="right")
            if s > end:
                s = end
            if s == end:
                term[i] = True
                break
            toks[i, k] = s
            q = trans[q, s]
            k += 1
        lengths[i] = k
    return toks, lengths, term


def _pair_prefix_states_impl(trans_a, trans_b, init_a, init_b, toks, lengths,
                             max_prefixes):
    # Emit the (state_a, state_b) pair at every prefix position of the
    # sampled sequences (empty prefix through full sequence), stopping once
    # max_prefixes pairs were produced.
    count = toks.shape[0]
    out_a = np.zeros(max_prefixes, dtype=np.int64)
    out_b = np.zeros(max_prefixes, dtype=np.int64)
    filled = 0
    for i in range(count):
        qa = init_a
        qb = init_b
        n = lengths[i]
        for k in range(n + 1):
            if filled >= max_prefixes:
                return out_a, out_b, filled
            out_a[filled] = qa
            out_b[filled] = qb
            filled += 1
            if k < n:
                s = toks[i, k]
                qa = trans_a[qa, s]
                qb = trans_b[qb, s]
    return out_a, out_b, filled


if USING_NUMBA:
    _draw_tokens_fast = _njit(cache=True)(_draw_tokens_impl)
    _pair_prefix_states_fast = _njit(cache=True)(_pair_prefix_states_impl)


def draw_tokens(trans, cum, initial, u, max_len):
    """Sample token sequences from a PDFA given pre-drawn uniforms.

    Returns (tokens[count, max_len], lengths[count], terminated[count]).
    Uniform u[i, k] decides step k of sequence i, so results do not depend
    on the backend.
    """
    trans = np.ascontiguousarray(trans, dtype=np.int64)
    cum = np.ascontiguousarray(cum, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if USING_NUMBA:
        return _draw_tokens_fast(trans, cum, int(initial), u, int(max_len))
    return _draw_tokens_impl(trans, cum, int(initial), u, int(max_len))


def pair_prefix_states(trans_a, trans_b, init_a, init_b, toks, lengths,
                       max_prefixes=None):
    """State pairs visited at each prefix of the sampled sequences.

    Returns (states_a, states_b, filled); only the first `filled` entries
    are meaningful.
    """
    trans_a = np.ascontiguousarray(trans_a, dtype=np.int64)
    trans_b = np.ascontiguousarray(trans_b, dtype=np.int64)
    toks = np.ascontiguousarray(toks, dtype=np.int64)
    lengths = np.ascontiguousarray(lengths, dtype=np.int64)
    if max_prefixes is None:
        max_prefixes = int(lengths.sum()) + len(lengths)
    if USING_NUMBA:
        return _pair_prefix_states_fast(trans_a, trans_b, int(init_a),
                                        int(init_b), toks, lengths,
                                        int(max_prefixes))
    return _pair_prefix_states_impl(trans_a, trans_b, int(init_a),
                                    int(init_b), toks, lengths,
                                    int(max_prefixes))
