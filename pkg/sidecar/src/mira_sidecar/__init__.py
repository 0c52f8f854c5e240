"""Embedding + fact-extraction microservice speaking the provider wire protocol."""

__version__ = "0.1.0"
