"""Core text data model: sentences, documents, summaries, examples, and the
JSONL corpus format.

Conventions (frozen; all surface-overlap metrics depend on them):
  * tokens are lowercase; a token is a run of unicode word characters
    (underscore excluded) optionally chained by internal apostrophes, and
    every other non-space character is a single-character token;
  * sentence splitting is rule-based: a run of ``.!?`` (plus attached closing
    quotes/brackets) ends a sentence when followed by whitespace and a
    non-lowercase character, unless the preceding word is a known
    abbreviation (data/abbreviations.txt).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Sequence

from .errors import DataError

ROLE_MAIN = "main"
ROLE_ASSISTING = "assisting"
SPLITS = ("train", "valid", "test")
MAX_ASSISTING = 4

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*|[^\w\s]|_")
_TERMINATOR_RE = re.compile(r"[.!?]+")
_CLOSERS = "\"')]}»”’"


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("mira.data").joinpath(name).read_text("utf-8")
    lines = (ln.strip() for ln in text.splitlines())
    return frozenset(ln for ln in lines if ln and not ln.startswith("#"))


ABBREVIATIONS = _load_wordlist("abbreviations.txt")


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it into word and punctuation tokens."""
    return _TOKEN_RE.findall(text.lower())


def _word_before(text: str, pos: int) -> str:
    """The non-whitespace chunk ending at `pos`, stripped of leading punctuation."""
    i = pos
    while i > 0 and not text[i - 1].isspace():
        i -= 1
    chunk = text[i:pos]
    return chunk.lstrip("\"'([{«“‘").lower()


def sentence_split(text: str) -> list[Sentence]:
    """Split raw text into Sentences; deterministic, whitespace-preserving.

    Concatenating the returned sentence texts reproduces `text` modulo
    whitespace. Empty input yields an empty list.
    """
    chunks: list[str] = []
    start = 0
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        while end < len(text) and text[end] in _CLOSERS:
            end += 1
        if end >= len(text):
            break
        if not text[end].isspace():
            continue
        rest = text[end:].lstrip()
        if not rest:
            break
        if rest[0].islower():
            continue
        if _word_before(text, m.start()) in ABBREVIATIONS:
            continue
        chunk = text[start:end].strip()
        if chunk:
            chunks.append(chunk)
        start = end
    tail = text[start:].strip()
    if tail:
        chunks.append(tail)
    return [Sentence(i, chunk, tokenize(chunk)) for i, chunk in enumerate(chunks)]


def ngram_set(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    """Set of distinct contiguous n-gram tuples; empty when len(tokens) < n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: list[str]


@dataclass
class Document:
    doc_id: str
    source_url: str
    text: str
    sentences: list[Sentence]
    role: str = ROLE_MAIN

    @classmethod
    def from_text(cls, doc_id: str, url: str, text: str, role: str = ROLE_MAIN) -> "Document":
        sents = [s for s in sentence_split(text) if s.tokens]
        sents = [replace(s, index=i) for i, s in enumerate(sents)]
        return cls(doc_id=doc_id, source_url=url, text=text, sentences=sents, role=role)

    def tokens(self) -> list[str]:
        return [t for s in self.sentences for t in s.tokens]

    def with_role(self, role: str) -> "Document":
        return replace(self, role=role)


@dataclass
class Summary:
    text: str
    sentences: list[Sentence]

    @classmethod
    def from_text(cls, text: str) -> "Summary":
        if not text.strip():
            raise DataError("summary text is empty")
        sents = [s for s in sentence_split(text) if s.tokens]
        sents = [replace(s, index=i) for i, s in enumerate(sents)]
        return cls(text=text, sentences=sents)

    def tokens(self) -> list[str]:
        return [t for s in self.sentences for t in s.tokens]


@dataclass
class Example:
    example_id: str
    main: Document
    summary: Summary
    assisting: list[Document]
    split: str

    def __post_init__(self) -> None:
        if not 1 <= len(self.assisting) <= MAX_ASSISTING:
            raise DataError(
                f"example {self.example_id}: needs 1..{MAX_ASSISTING} assisting "
                f"documents, got {len(self.assisting)}"
            )
        if any(d.doc_id == self.main.doc_id for d in self.assisting):
            raise DataError(f"example {self.example_id}: main doc_id repeated in assisting set")
        if self.split not in SPLITS:
            raise DataError(f"example {self.example_id}: unknown split {self.split!r}")


@dataclass
class CorpusStats:
    example_counts: dict[str, int]
    avg_doc_words: float
    avg_doc_sents: float
    avg_summ_words: float
    avg_summ_sents: float
    vocab_size_document: int
    vocab_size_summary: int


def corpus_stats(examples: Sequence[Example]) -> CorpusStats:
    """Averages over examples (main document / summary) plus pooled vocabularies.

    Word counts are token counts under the toolkit tokenizer. The document
    vocabulary pools every distinct document (main and assisting, deduplicated
    by doc_id); the summary vocabulary pools all summaries.
    """
    if not examples:
        raise DataError("empty corpus")
    counts = {s: 0 for s in SPLITS}
    doc_vocab: set[str] = set()
    summ_vocab: set[str] = set()
    seen_docs: set[str] = set()
    doc_words = doc_sents = summ_words = summ_sents = 0
    for ex in examples:
        counts[ex.split] += 1
        doc_words += len(ex.main.tokens())
        doc_sents += len(ex.main.sentences)
        summ_words += len(ex.summary.tokens())
        summ_sents += len(ex.summary.sentences)
        summ_vocab.update(ex.summary.tokens())
        for doc in [ex.main, *ex.assisting]:
            if doc.doc_id not in seen_docs:
                seen_docs.add(doc.doc_id)
                doc_vocab.update(doc.tokens())
    n = len(examples)
    return CorpusStats(
        example_counts=counts,
        avg_doc_words=doc_words / n,
        avg_doc_sents=doc_sents / n,
        avg_summ_words=summ_words / n,
        avg_summ_sents=summ_sents / n,
        vocab_size_document=len(doc_vocab),
        vocab_size_summary=len(summ_vocab),
    )


# --- JSONL corpus format -----------------------------------------------------
# One example per line:
# {"id", "split", "main": {"doc_id","url","text"}, "summary": {"text"},
#  "assisting": [{"doc_id","url","text"}, ...]}
# Raw text is stored; segmentation/tokenization happen on load.


def example_to_dict(ex: Example) -> dict:
    return {
        "id": ex.example_id,
        "split": ex.split,
        "main": {"doc_id": ex.main.doc_id, "url": ex.main.source_url, "text": ex.main.text},
        "summary": {"text": ex.summary.text},
        "assisting": [
            {"doc_id": d.doc_id, "url": d.source_url, "text": d.text} for d in ex.assisting
        ],
    }


def example_from_dict(d: dict) -> Example:
    main = Document.from_text(d["main"]["doc_id"], d["main"]["url"], d["main"]["text"], ROLE_MAIN)
    assisting = [
        Document.from_text(a["doc_id"], a["url"], a["text"], ROLE_ASSISTING)
        for a in d["assisting"]
    ]
    return Example(
        example_id=d["id"],
        main=main,
        summary=Summary.from_text(d["summary"]["text"]),
        assisting=assisting,
        split=d["split"],
    )


def write_jsonl(examples: Iterable[Example], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_dict(ex), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_jsonl(path) -> list[Example]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                examples.append(example_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, DataError) as exc:
                raise DataError(f"{path}: malformed example at line {lineno}: {exc}") from exc
    return examples
