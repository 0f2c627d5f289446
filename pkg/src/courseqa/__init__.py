"""Ontology-gated retrieval-augmented question answering for course corpora."""

__version__ = "0.1.0"
