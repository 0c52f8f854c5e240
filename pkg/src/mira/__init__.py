"""Toolkit for multi-resource-assisted news summarization corpora: dataset
construction, lexical and fact-based grounding metrics, extractive bounds,
content selection, and model-input assembly."""

__version__ = "0.1.0"
