"""relprobe: probe datasets, response ingestion, and the five-metric
evaluation suite for lexical semantic relations."""

from .relations import RELATIONS, Relation

__version__ = "0.1.0"

__all__ = ["Relation", "RELATIONS", "__version__"]
