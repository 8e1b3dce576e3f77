"""Taxonomy-agnostic PII annotation toolkit for HTTP traffic."""

from ._pii_kit import (
    PiiError,
    Taxonomy,
    cosine,
    evaluate_run,
    fallback_embedding,
    generate_mock_corpus,
    gestalt_similarity,
    load_taxonomy,
    normalize_body,
    parse_taxonomy,
    stratified_split_files,
)

__all__ = [
    "PiiError",
    "Taxonomy",
    "cosine",
    "evaluate_run",
    "fallback_embedding",
    "generate_mock_corpus",
    "gestalt_similarity",
    "load_taxonomy",
    "normalize_body",
    "parse_taxonomy",
    "stratified_split_files",
]
