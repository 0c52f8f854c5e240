"""Embedding providers and cosine similarity.

Providers expose `provider_id`, `dim`, and `embed_many(texts) -> (n, dim)
float64 array`. The built-in provider is fully deterministic (stable 64-bit
token hashing, no RNG) so reports are reproducible bit-for-bit; the remote
provider speaks the HTTP wire protocol (POST /embed) with retries, an LRU
cache, and in-flight request coalescing.
"""

from __future__ import annotations

import hashlib
import threading
from collections import Counter, OrderedDict
from typing import Sequence

import numpy as np

from .corpus import tokenize
from .errors import ProviderError

_NORM_EPS = 1e-12


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is (near-)zero."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < _NORM_EPS or nb < _NORM_EPS:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities (len(A), len(B)); zero rows/cols give 0."""
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    sims = A @ B.T
    denom = np.outer(na, nb)
    out = np.zeros_like(sims)
    ok = denom >= _NORM_EPS
    out[ok] = sims[ok] / denom[ok]
    return out


def _stable_hash64(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


class BuiltinProvider:
    """Deterministic hashed bag-of-words embeddings, L2-normalized.

    Feature index = stable 64-bit hash of the token mod dim, value = term
    frequency. Empty text maps to the zero vector.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.provider_id = f"builtin-hash-d{dim}"

    def token_index(self, token: str) -> int:
        return _stable_hash64(token) % self.dim

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            for token, count in Counter(tokenize(text)).items():
                out[row, self.token_index(token)] += count
            norm = np.linalg.norm(out[row])
            if norm > _NORM_EPS:
                out[row] /= norm
        return out


class RemoteProvider:
    """Client for the embedding wire protocol: POST endpoint/embed with
    {"texts": [...]}, expecting {"dim": d, "vectors": [[...], ...]}.

    Thread-safe: an LRU cache keyed by text plus an in-flight map so
    concurrent duplicate requests coalesce; at most `max_in_flight` HTTP
    requests run at once. Transport failures are retried `retries` times
    before raising ProviderError.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 2,
        max_in_flight: int = 8,
        batch_size: int = 64,
        cache_size: int = 100_000,
    ):
        import requests

        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.batch_size = batch_size
        self.provider_id = f"remote:{self.endpoint}"
        self.dim: int | None = None
        self._session = requests.Session()
        self._cache: OrderedDict[str, np.ndarray] = OrderedDict()
        self._cache_size = cache_size
        self._lock = threading.Lock()
        self._in_flight: dict[str, threading.Event] = {}
        self._gate = threading.Semaphore(max_in_flight)

    def _post(self, route: str, payload: dict) -> dict:
        import requests

        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                with self._gate:
                    resp = self._session.post(
                        f"{self.endpoint}{route}", json=payload, timeout=self.timeout
                    )
                resp.raise_for_status()
                return resp.json()
            except (requests.ConnectionError, requests.Timeout) as exc:
                last = exc
            except requests.RequestException as exc:
                raise ProviderError(f"{route} request failed: {exc}") from exc
        raise ProviderError(f"{route} unreachable after {self.retries + 1} attempts: {last}")

    def _fetch(self, texts: list[str]) -> dict[str, np.ndarray]:
        fetched: dict[str, np.ndarray] = {}
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start : start + self.batch_size]
            data = self._post("/embed", {"texts": chunk})
            vectors = data.get("vectors")
            dim = data.get("dim")
            if vectors is None or dim is None or len(vectors) != len(chunk):
                raise ProviderError("malformed /embed response")
            if self.dim is None:
                self.dim = int(dim)
            elif self.dim != int(dim):
                raise ProviderError(f"provider dim changed: {self.dim} -> {dim}")
            for text, vec in zip(chunk, vectors):
                arr = np.asarray(vec, dtype=np.float64)
                if arr.shape != (self.dim,) or not np.all(np.isfinite(arr)):
                    raise ProviderError("non-finite or mis-sized embedding vector")
                fetched[text] = arr
        return fetched

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        need: list[str] = []
        wait_for: list[threading.Event] = []
        with self._lock:
            for text in dict.fromkeys(texts):
                if text in self._cache:
                    self._cache.move_to_end(text)
                elif text in self._in_flight:
                    wait_for.append(self._in_flight[text])
                else:
                    event = threading.Event()
                    self._in_flight[text] = event
                    need.append(text)
        if need:
            try:
                fetched = self._fetch(need)
            except Exception:
                with self._lock:
                    for text in need:
                        self._in_flight.pop(text).set()
                raise
            with self._lock:
                for text in need:
                    self._cache[text] = fetched[text]
                    while len(self._cache) > self._cache_size:
                        self._cache.popitem(last=False)
                    self._in_flight.pop(text).set()
        for event in wait_for:
            event.wait()
        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            # a coalesced request we waited on failed; fetch directly
            fetched = self._fetch(missing)
            with self._lock:
                self._cache.update(fetched)
        with self._lock:
            return np.stack([self._cache[t] for t in texts]) if texts else np.zeros((0, 0))

    def fetch_facts(self, sentences: list[dict]) -> list[dict]:
        """POST /facts with {"sentences": [{"doc_id","index","text"}, ...]}."""
        out: list[dict] = []
        for start in range(0, len(sentences), self.batch_size):
            chunk = sentences[start : start + self.batch_size]
            data = self._post("/facts", {"sentences": chunk})
            facts = data.get("facts")
            if facts is None:
                raise ProviderError("malformed /facts response")
            out.extend(facts)
        return out


def make_provider(kind: str, endpoint: str | None = None, **kwargs):
    if kind == "builtin":
        return BuiltinProvider()
    if kind == "remote":
        if not endpoint:
            raise ProviderError("remote provider requires an endpoint")
        return RemoteProvider(endpoint, **kwargs)
    raise ProviderError(f"unknown provider kind: {kind}")
