"""Predicate-argument facts and the fact-level grounding metrics.

A fact is one predicate token plus its left/right argument spans; each
summary fact is weighted by its maximum embedding cosine to the source
facts. SFweights averages those weights; AsstRate counts summary facts
strictly better matched by assisting-document facts than by the main
document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Document, Example, Sentence, Summary, _load_wordlist
from .embeddings import cosine_matrix
from .errors import DataError

VERBS = _load_wordlist("verbs.txt")

# argument spans stop at these (predicate tokens also act as stops)
CLAUSE_BOUNDARIES = frozenset(
    {",", ";", ":", "(", ")", "—"}
    | {
        "and", "but", "or", "nor", "so", "yet", "because", "although", "though",
        "while", "when", "where", "after", "before", "since", "unless", "until",
        "that", "which", "who", "whom", "whose", "if", "as",
    }
)


@dataclass(frozen=True)
class Fact:
    doc_id: str
    sentence_index: int
    predicate: tuple[int, int]  # token span, end-exclusive
    arguments: tuple[tuple[int, int], ...]
    flat_text: str


def _flat_text(tokens: Sequence[str], predicate, arguments) -> str:
    parts = list(tokens[predicate[0] : predicate[1]])
    for start, end in arguments:
        parts.extend(tokens[start:end])
    return " ".join(parts)


def extract_facts(sentence: Sentence, doc_id: str) -> list[Fact]:
    """Heuristic extractor: one fact per lexicon verb; its arguments run from
    the previous verb/clause boundary to the next one. A sentence with no
    detected verb yields a single whole-sentence fact.
    """
    tokens = sentence.tokens
    verb_pos = [i for i, t in enumerate(tokens) if t in VERBS]
    if not verb_pos:
        span = (0, len(tokens))
        return [
            Fact(doc_id, sentence.index, span, (), _flat_text(tokens, span, ()))
        ]
    stops = sorted(set(verb_pos) | {i for i, t in enumerate(tokens) if t in CLAUSE_BOUNDARIES})
    facts = []
    for v in verb_pos:
        left_start = max((s + 1 for s in stops if s < v), default=0)
        right_end = min((s for s in stops if s > v), default=len(tokens))
        args = tuple(
            span for span in ((left_start, v), (v + 1, right_end)) if span[1] > span[0]
        )
        predicate = (v, v + 1)
        facts.append(
            Fact(doc_id, sentence.index, predicate, args, _flat_text(tokens, predicate, args))
        )
    return facts


Extractor = Callable[[Sentence, str], list[Fact]]


def document_facts(doc: Document, extractor: Extractor = extract_facts) -> list[Fact]:
    return [f for sent in doc.sentences for f in extractor(sent, doc.doc_id)]


def summary_facts(
    summary: Summary, extractor: Extractor = extract_facts, doc_id: str = "summary"
) -> list[Fact]:
    return [f for sent in summary.sentences for f in extractor(sent, doc_id)]


# --- facts interchange file -----------------------------------------------------


def fact_to_dict(f: Fact) -> dict:
    return {
        "doc_id": f.doc_id,
        "sentence_index": f.sentence_index,
        "predicate": list(f.predicate),
        "arguments": [list(a) for a in f.arguments],
        "flat_text": f.flat_text,
    }


def fact_from_dict(d: dict) -> Fact:
    return Fact(
        doc_id=d["doc_id"],
        sentence_index=int(d["sentence_index"]),
        predicate=tuple(d["predicate"]),
        arguments=tuple(tuple(a) for a in d["arguments"]),
        flat_text=d["flat_text"],
    )


def write_facts_jsonl(facts: Iterable[Fact], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in facts:
            fh.write(json.dumps(fact_to_dict(f), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_facts_jsonl(path) -> dict[str, list[Fact]]:
    """Facts grouped by doc_id; malformed lines are reported with their number."""
    by_doc: dict[str, list[Fact]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                fact = fact_from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: malformed fact at line {lineno}: {exc}") from exc
            by_doc.setdefault(fact.doc_id, []).append(fact)
    return by_doc


class ExternalFacts:
    """Extractor backed by an interchange file (or any doc_id -> facts map).

    Facts are used verbatim (spans describe the external extractor's own
    tokenization); sentences the source does not cover fall back to the
    whole-sentence fact. Facts referencing sentence indices outside a
    document are rejected by validate().
    """

    def __init__(self, by_doc: dict[str, list[Fact]]):
        self._index: dict[tuple[str, int], list[Fact]] = {}
        for doc_id, facts in by_doc.items():
            for f in facts:
                self._index.setdefault((doc_id, f.sentence_index), []).append(f)

    @classmethod
    def from_file(cls, path) -> "ExternalFacts":
        return cls(read_facts_jsonl(path))

    def __call__(self, sentence: Sentence, doc_id: str) -> list[Fact]:
        facts = self._index.get((doc_id, sentence.index))
        if facts is None:
            return extract_facts(sentence, doc_id)
        return facts

    def validate(self, doc_sent_counts: dict[str, int]) -> None:
        for doc_id, sent_idx in self._index:
            if doc_id not in doc_sent_counts:
                raise DataError(f"facts file references unknown doc_id {doc_id!r}")
            if not 0 <= sent_idx < doc_sent_counts[doc_id]:
                raise DataError(f"facts file references unknown sentence {doc_id}#{sent_idx}")


# --- weights -------------------------------------------------------------------


def _weights(summary_vecs: np.ndarray, doc_vecs: np.ndarray) -> np.ndarray:
    """Per summary fact: max cosine to any doc fact vector."""
    return cosine_matrix(summary_vecs, doc_vecs).max(axis=1)


def fact_weight(summary_fact: Fact, doc_facts: Sequence[Fact], provider) -> float:
    if not doc_facts:
        raise DataError("no source facts")
    s = provider.embed_many([summary_fact.flat_text])
    d = provider.embed_many([f.flat_text for f in doc_facts])
    return float(_weights(s, d)[0])


def sf_weights(summary_facts_: Sequence[Fact], source_facts: Sequence[Fact], provider) -> float:
    """Mean over summary facts of the max similarity to the source facts."""
    if not summary_facts_:
        raise DataError("no summary facts")
    if not source_facts:
        raise DataError("no source facts")
    s = provider.embed_many([f.flat_text for f in summary_facts_])
    d = provider.embed_many([f.flat_text for f in source_facts])
    return float(_weights(s, d).mean())


def asst_rate_fact(
    summary_facts_: Sequence[Fact],
    main_facts: Sequence[Fact],
    assisting_facts: Sequence[Fact],
    provider,
) -> float:
    """Fraction of summary facts strictly better matched in the assisting
    documents than in the main document (ties favor main). An empty assisting
    set pins every assisting weight at -1, giving rate 0.
    """
    if not summary_facts_:
        raise DataError("no summary facts")
    if not main_facts:
        raise DataError("no source facts")
    s = provider.embed_many([f.flat_text for f in summary_facts_])
    w_fc = _weights(s, provider.embed_many([f.flat_text for f in main_facts]))
    if assisting_facts:
        w_fa = _weights(s, provider.embed_many([f.flat_text for f in assisting_facts]))
    else:
        w_fa = np.full(len(summary_facts_), -1.0)
    return float(np.mean(w_fa > w_fc))


def asst_rate_summary(fact_level_rates: Sequence[float]) -> float:
    """Fraction of examples whose fact-level rate is strictly positive."""
    if not fact_level_rates:
        raise DataError("no examples scored")
    return sum(1 for r in fact_level_rates if r > 0) / len(fact_level_rates)


@dataclass
class FactWeightReport:
    example_id: str
    fact_texts: list[str]
    w_fc: list[float]  # weight vs main document facts
    w_fa: list[float]  # weight vs assisting document facts
    w_fda: list[float]  # max of the two
    best_source: list[str]  # best-matching source fact text (evidence)
    sf_d: float
    sf_a: float
    sf_da: float
    asst_rate: float
    degenerate: bool = False


def example_fact_report(
    example: Example,
    provider,
    extractor: Extractor = extract_facts,
    summary: Summary | None = None,
    summary_doc_id: str | None = None,
) -> FactWeightReport:
    """Score one example's summary facts against main/assisting facts.

    `summary` overrides the gold summary (used to score generated summaries;
    give those a distinct summary_doc_id so stateful extractors keep gold and
    generated facts apart).
    """
    summ = summary if summary is not None else example.summary
    doc_key = summary_doc_id or f"summary:{example.example_id}"
    s_facts = summary_facts(summ, extractor, doc_id=doc_key)
    if not s_facts:
        return FactWeightReport(example.example_id, [], [], [], [], [], 0.0, 0.0, 0.0, 0.0, True)
    m_facts = document_facts(example.main, extractor)
    a_facts = [f for doc in example.assisting for f in document_facts(doc, extractor)]
    if not m_facts:
        raise DataError(f"example {example.example_id}: main document produced no facts")
    pool = m_facts + a_facts
    s = provider.embed_many([f.flat_text for f in s_facts])
    sims = cosine_matrix(s, provider.embed_many([f.flat_text for f in pool]))
    w_fc = sims[:, : len(m_facts)].max(axis=1)
    if a_facts:
        w_fa = sims[:, len(m_facts) :].max(axis=1)
    else:
        w_fa = np.full(len(s_facts), -1.0)
    w_fda = np.maximum(w_fc, w_fa)
    best = sims.argmax(axis=1)
    return FactWeightReport(
        example_id=example.example_id,
        fact_texts=[f.flat_text for f in s_facts],
        w_fc=[float(x) for x in w_fc],
        w_fa=[float(x) for x in w_fa],
        w_fda=[float(x) for x in w_fda],
        best_source=[pool[i].flat_text for i in best],
        sf_d=float(w_fc.mean()),
        sf_a=float(w_fa.mean()),
        sf_da=float(w_fda.mean()),
        asst_rate=float(np.mean(w_fa > w_fc)),
    )


class RemoteFactExtractor:
    """Extractor that pulls facts from a provider's /facts route.

    prefetch() batches whole documents; sentences the service returns no
    frame for fall back to the whole-sentence fact.
    """

    def __init__(self, provider):
        self._provider = provider
        self._cache: dict[tuple[str, int], list[Fact]] = {}
        self._fetched_docs: set[str] = set()

    def prefetch(self, docs_and_ids: Sequence[tuple[str, Sequence[Sentence]]]) -> None:
        payload = []
        for doc_id, sentences in docs_and_ids:
            if doc_id in self._fetched_docs:
                continue
            self._fetched_docs.add(doc_id)
            for sent in sentences:
                self._cache.setdefault((doc_id, sent.index), [])
                payload.append({"doc_id": doc_id, "index": sent.index, "text": sent.text})
        if not payload:
            return
        for item in self._provider.fetch_facts(payload):
            fact = fact_from_dict(item)
            self._cache.setdefault((fact.doc_id, fact.sentence_index), []).append(fact)

    def __call__(self, sentence: Sentence, doc_id: str) -> list[Fact]:
        key = (doc_id, sentence.index)
        if key not in self._cache:
            self.prefetch([(doc_id, [sentence])])
        return self._cache[key] or extract_facts(sentence, doc_id)
