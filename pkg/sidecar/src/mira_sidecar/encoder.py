"""Sentence encoders.

The default `hashctx-<dim>` encoder is fully self-contained and deterministic:
every token gets a fixed Gaussian vector seeded by its 64-bit hash, neighbor
vectors are mixed in with a feature-axis rotation (so token order matters),
and the mean-pooled result is L2-normalized. `transformers:<name>` loads a
pretrained contextual model instead when its weights are available.
"""

from __future__ import annotations

import hashlib
import re
import threading

import numpy as np

_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def _token_seed(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


class HashContextEncoder:
    def __init__(self, dim: int = 256):
        self.dim = dim
        self.model_id = f"hashctx-{dim}"
        self._token_vectors: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            rng = np.random.default_rng(_token_seed(token))
            vec = rng.standard_normal(self.dim)
            self._token_vectors[token] = vec
        return vec

    def _encode_one(self, text: str) -> np.ndarray:
        tokens = _WORD_RE.findall(text.lower()) or [text]
        vectors = np.stack([self._vector(t) for t in tokens])
        mixed = vectors.copy()
        if len(tokens) > 1:
            # neighbor mixing through a feature rotation keeps order information
            mixed[1:] += 0.5 * np.roll(vectors[:-1], 1, axis=1)
            mixed[:-1] += 0.5 * np.roll(vectors[1:], -1, axis=1)
        pooled = mixed.mean(axis=0)
        return pooled / np.linalg.norm(pooled)

    def encode(self, texts: list[str]) -> np.ndarray:
        with self._lock:
            return np.stack([self._encode_one(t) for t in texts])


class TransformersEncoder:
    """Mean-pooled hidden states of a pretrained contextual model; requires
    the checkpoint to be available locally or downloadable."""

    def __init__(self, model_name: str):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.model_id = f"transformers:{model_name}"
        self._lock = threading.Lock()

    def encode(self, texts: list[str]) -> np.ndarray:
        with self._lock, self._torch.no_grad():
            batch = self.tokenizer(
                texts, padding=True, truncation=True, max_length=256, return_tensors="pt"
            )
            hidden = self.model(**batch).last_hidden_state
            mask = batch["attention_mask"].unsqueeze(-1).float()
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
            out = pooled.cpu().numpy()
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        return out / np.clip(norms, 1e-12, None)


def make_encoder(name: str):
    if name.startswith("hashctx-"):
        return HashContextEncoder(dim=int(name.split("-", 1)[1]))
    if name.startswith("transformers:"):
        return TransformersEncoder(name.split(":", 1)[1])
    raise ValueError(f"unknown embedding model {name!r}")
