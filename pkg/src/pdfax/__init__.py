"""Learn probabilistic deterministic finite automata (PDFAs) from
black-box next-token oracles, with a variation tolerance that lets the
learner treat nearly-equal behaviours as equal.

The pieces:

- `model`: the PDFA itself (sampling, probabilities, (de)serialization).
- `oracle`: the target abstraction -- anything that maps a prefix to a
  next-token distribution -- plus caching and derived prefix weights.
- `table` / `clustering`: the observation table and its refinement into
  a deterministic, tolerance-consistent state machine.
- `extract`: the outer learning loop with anytime stopping.
- `metrics`: WER, NDCG, exact divergence search and consistency audits.
- `grammars`: built-in synthetic targets used for verification.
- `ngram`: a sliding-window baseline model.
- `cli`: the `pdfax` command.
"""

__version__ = "0.1.0"

from .model import END, Alphabet, Pdfa, PdfaFormatError, seal_rows
from .oracle import (BridgeError, CachedOracle, ExternalOracle, FnOracle,
                     Oracle, PdfaOracle, PrefixWeights)
from .table import ObservationTable, RowIndex, TableConfig, t_equal
from .clustering import (Clustering, best_cluster_match, build_pdfa,
                         cluster_table, initial_clustering,
                         refine_cliques, refine_determinism)
from .extract import (ExtractionConfig, ExtractionReport, RoundInfo,
                      choose_tolerance_hint, exact_equivalence_for,
                      extract, sample_next, sample_sequence,
                      sampling_equivalence, scripted_equivalence)
from .metrics import (ConsistencyViolation, MetricReport, evaluate,
                      exact_divergence, ndcg, ndcg_prefix_score,
                      t_consistency_audit, wer)
from .grammars import (from_identifier, random_pdfa, tomita_weighted, uhl,
                       worked_example)
from .ngram import NgramModel, ngram_build, read_samples

__all__ = [
    "END", "Alphabet", "Pdfa", "PdfaFormatError", "seal_rows",
    "Oracle", "PdfaOracle", "FnOracle", "CachedOracle", "PrefixWeights",
    "ExternalOracle", "BridgeError",
    "TableConfig", "ObservationTable", "RowIndex", "t_equal",
    "Clustering", "initial_clustering", "refine_determinism",
    "refine_cliques", "best_cluster_match", "cluster_table", "build_pdfa",
    "ExtractionConfig", "ExtractionReport", "RoundInfo", "extract",
    "sampling_equivalence", "exact_equivalence_for", "scripted_equivalence",
    "choose_tolerance_hint", "sample_next", "sample_sequence",
    "MetricReport", "wer", "ndcg", "ndcg_prefix_score", "evaluate",
    "exact_divergence", "t_consistency_audit", "ConsistencyViolation",
    "tomita_weighted", "uhl", "worked_example", "random_pdfa",
    "from_identifier",
    "NgramModel", "ngram_build", "read_samples",
    "__version__",
]
