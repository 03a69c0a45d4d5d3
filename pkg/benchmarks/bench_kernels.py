"""Compare the numba kernels against the pure-numpy fallback.

Run without arguments to benchmark both backends (each in a fresh
subprocess, since the backend is chosen at import time) and print a
comparison table.  The first kernel invocation is excluded from timing so
JIT compilation does not count against the numba backend.

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def run_workload() -> dict:
    from pdfax import uhl
    from pdfax import _kernels

    pdfa = uhl(2)
    rng = np.random.default_rng(7)
    count, max_len = 200_000, 120
    cum = np.cumsum(pdfa.weights, axis=1)
    u = rng.random((count, max_len + 1))

    # warmup (compiles under numba)
    _kernels.draw_tokens(pdfa.trans, cum, pdfa.initial, u[:8], max_len)
    t0 = time.perf_counter()
    toks, lengths, _ = _kernels.draw_tokens(pdfa.trans, cum, pdfa.initial,
                                            u, max_len)
    t_draw = time.perf_counter() - t0

    _kernels.pair_prefix_states(pdfa.trans, pdfa.trans, 0, 0, toks[:8],
                                lengths[:8])
    t0 = time.perf_counter()
    _kernels.pair_prefix_states(pdfa.trans, pdfa.trans, 0, 0, toks, lengths)
    t_pair = time.perf_counter() - t0

    return {
        "backend": "numba" if _kernels.USING_NUMBA else "numpy",
        "draw_tokens": t_draw,
        "pair_prefix_states": t_pair,
        "checksum": int(lengths.sum()),
    }


def main() -> int:
    if len(sys.argv) > 1 and sys.argv[1] == "--worker":
        print(json.dumps(run_workload()))
        return 0

    results = []
    for backend in ("numpy", "numba"):
        env = dict(os.environ, PDFAX_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            sys.stderr.write("backend %s failed:\n%s" % (backend,
                                                         proc.stderr))
            continue
        results.append(json.loads(proc.stdout.strip().splitlines()[-1]))

    if not results:
        return 1
    checksums = {r["checksum"] for r in results}
    header = ("backend", "draw_tokens", "pair_prefix_states")
    rows = [header] + [
        (r["backend"], "%.3fs" % r["draw_tokens"],
         "%.3fs" % r["pair_prefix_states"]) for r in results]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    if len(checksums) != 1:
        print("WARNING: backends disagree on sampled lengths!")
        return 1
    if len(results) == 2:
        by = {r["backend"]: r for r in results}
        for kernel in ("draw_tokens", "pair_prefix_states"):
            ratio = by["numpy"][kernel] / by["numba"][kernel]
            print("%s: numba is %.1fx %s" %
                  (kernel, ratio if ratio >= 1 else 1 / ratio,
                   "faster" if ratio >= 1 else "slower"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
