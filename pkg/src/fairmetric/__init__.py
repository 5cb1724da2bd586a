"""Similarity submetrics for individual fairness, elicited from comparison queries.

The package simulates (or proxies to a live human) an arbiter that answers
real-valued and relative distance queries, builds certified submetrics on a
fixed sample with sublinear real-query counts, selects representatives by
random net sampling, and trains threshold-vote hypotheses that generalize the
submetric to unseen elements.  Everything is driven by explicit seeds so every
experiment is reproducible.
"""

from fairmetric.universe import (
    Element,
    GroundMetric,
    Universe,
    gen_clustered,
    gen_uniform_square,
    metric_eval,
)
from fairmetric.arbiter import (
    TCTC,
    ExactArbiter,
    QueryLedger,
    TctcArbiter,
    TctcParams,
)

__all__ = [
    "Element",
    "GroundMetric",
    "Universe",
    "gen_clustered",
    "gen_uniform_square",
    "metric_eval",
    "TCTC",
    "ExactArbiter",
    "QueryLedger",
    "TctcArbiter",
    "TctcParams",
]

__version__ = "0.1.0"
