"""adlens: analytics toolkit for image-ad corpora.

Stages: manifest ingestion, synthetic corpus generation with planted truth,
object-frequency statistics with stop-object removal, category-object graph
construction with community detection, k-means++ clustering with mean-WCSS
k selection, and CTR regression models.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    AdRecord,
    Corpus,
    ManifestError,
    ObjectLabel,
    corpus_stats,
    ctr,
    parse_manifest,
    write_manifest,
)
from .synth import CtrModel, PlantedTruth, SynthSpec, generate_corpus  # noqa: F401
