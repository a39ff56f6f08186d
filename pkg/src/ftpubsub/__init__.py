"""Publish/subscribe matching of RDF document streams against continuous
queries with full-text predicates."""

from .engine import EngineConfig, FilterEngine, IndexingConflict, Notification
from .query import parse_subscription
from .rdf import Document, iter_documents, parse_ntriples

__version__ = "0.1.0"

__all__ = [
    "Document",
    "EngineConfig",
    "FilterEngine",
    "IndexingConflict",
    "Notification",
    "__version__",
    "iter_documents",
    "parse_ntriples",
    "parse_subscription",
]
