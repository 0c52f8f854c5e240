"""Surface-overlap metrics and extractive bounds.

Two distinct n-gram conventions live here, on purpose:
  * novelty / coverage / support use sets of DISTINCT n-grams;
  * ROUGE uses clipped multiset counts (no stemming, no stopword removal).
ROUGE-L runs over the flattened token sequence of each side.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from . import kernels
from .corpus import Document, Example, Sentence, Summary, ngram_set
from .errors import ConfigError, DataError


class SourceConfig(str, Enum):
    """Which documents form the source pool: main, assisting, or both."""

    S_D = "s-d"
    S_A = "s-a"
    S_DA = "s-da"


def pool_documents(example: Example, config: SourceConfig) -> list[Document]:
    if config == SourceConfig.S_D:
        return [example.main]
    if config == SourceConfig.S_A:
        return list(example.assisting)
    return [example.main, *example.assisting]


def pool_sentences(example: Example, config: SourceConfig) -> list[tuple[Document, Sentence]]:
    return [(doc, sent) for doc in pool_documents(example, config) for sent in doc.sentences]


# --- ROUGE --------------------------------------------------------------------


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall == 0.0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2.0 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class RougeTriple:
    r1: RougeScore
    r2: RougeScore
    rl: RougeScore

    def mean_f1(self) -> float:
        return (self.r1.f1 + self.r2.f1 + self.rl.f1) / 3.0


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram multiset overlap between token lists."""
    if not reference:
        raise DataError("empty reference")
    cand = Counter(tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1))
    ref = Counter(tuple(reference[i : i + n]) for i in range(len(reference) - n + 1))
    overlap = sum((cand & ref).values())
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    precision = overlap / n_cand if n_cand else 0.0
    recall = overlap / n_ref if n_ref else 0.0
    return RougeScore.from_pr(precision, recall)


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """LCS-based score over the full token sequences."""
    if not reference:
        raise DataError("empty reference")
    if not candidate:
        return RougeScore(0.0, 0.0, 0.0)
    ids: dict[str, int] = {}
    a = [ids.setdefault(t, len(ids)) for t in candidate]
    b = [ids.setdefault(t, len(ids)) for t in reference]
    lcs = kernels.lcs_length(a, b)
    return RougeScore.from_pr(lcs / len(candidate), lcs / len(reference))


def rouge_triple(candidate: Sequence[str], reference: Sequence[str]) -> RougeTriple:
    return RougeTriple(
        r1=rouge_n(candidate, reference, 1),
        r2=rouge_n(candidate, reference, 2),
        rl=rouge_l(candidate, reference),
    )


# --- novelty / coverage / support ----------------------------------------------


@dataclass(frozen=True)
class PctStat:
    """A percentage in [0, 100]; degenerate marks summaries with no n-grams."""

    pct: float
    degenerate: bool = False


def _pool_ngrams(docs: Iterable[Document], n: int) -> set[tuple[str, ...]]:
    grams: set[tuple[str, ...]] = set()
    for doc in docs:
        grams |= ngram_set(doc.tokens(), n)
    return grams


def ngram_novelty(summary: Summary, pool: Sequence[Document], n: int) -> PctStat:
    """Percentage of distinct summary n-grams absent from the pooled documents."""
    summ = ngram_set(summary.tokens(), n)
    if not summ:
        return PctStat(0.0, degenerate=True)
    novel = summ - _pool_ngrams(pool, n)
    return PctStat(100.0 * len(novel) / len(summ))


def ngram_coverage(summary: Summary, pool: Sequence[Document], n: int) -> PctStat:
    """Complement of novelty: 100 - ngram_novelty, same degenerate flag."""
    nov = ngram_novelty(summary, pool, n)
    return PctStat(100.0 - nov.pct, nov.degenerate)


def support_from_assisting(
    summary: Summary, main: Document, assisting: Sequence[Document], n: int
) -> PctStat:
    """Percentage of summary n-grams found only in the assisting documents."""
    summ = ngram_set(summary.tokens(), n)
    if not summ:
        return PctStat(0.0, degenerate=True)
    only_assist = _pool_ngrams(assisting, n) - ngram_set(main.tokens(), n)
    return PctStat(100.0 * len(summ & only_assist) / len(summ))


# --- LEAD and the extractive oracle --------------------------------------------


@dataclass(frozen=True)
class LeadResult:
    text: str
    scores: RougeTriple


def _mean_scores(triples: Sequence[RougeTriple]) -> RougeTriple:
    def avg(pick) -> RougeScore:
        return RougeScore(
            sum(pick(t).precision for t in triples) / len(triples),
            sum(pick(t).recall for t in triples) / len(triples),
            sum(pick(t).f1 for t in triples) / len(triples),
        )

    return RougeTriple(avg(lambda t: t.r1), avg(lambda t: t.r2), avg(lambda t: t.rl))


def lead(example: Example, config: SourceConfig, k: int = 3) -> LeadResult:
    """First-k-sentences baseline scored against the gold summary.

    For the assisting configuration the first k sentences of each assisting
    document are scored separately and the reported score is the mean over
    documents. Undefined for the combined configuration.
    """
    ref = example.summary.tokens()
    if config == SourceConfig.S_D:
        sents = example.main.sentences[:k]
        tokens = [t for s in sents for t in s.tokens]
        return LeadResult(" ".join(s.text for s in sents), rouge_triple(tokens, ref))
    if config == SourceConfig.S_A:
        texts = []
        triples = []
        for doc in example.assisting:
            sents = doc.sentences[:k]
            tokens = [t for s in sents for t in s.tokens]
            texts.append(" ".join(s.text for s in sents))
            triples.append(rouge_triple(tokens, ref))
        return LeadResult("\n".join(texts), _mean_scores(triples))
    raise ConfigError("lead is defined for s-d and s-a only")


@dataclass(frozen=True)
class OracleResult:
    selected: tuple[tuple[str, int], ...]  # (doc_id, sentence_index), pool order
    scores: RougeTriple
    objective: float
    objective_trace: tuple[float, ...]
    greedy_gap: float | None = None


def _selection_tokens(pool: Sequence[tuple[Document, Sentence]], picked: Iterable[int]) -> list[str]:
    return [t for i in sorted(picked) for t in pool[i][1].tokens]


def _objective(pool, picked, ref) -> float:
    tokens = _selection_tokens(pool, picked)
    if not tokens:
        return 0.0
    return rouge_triple(tokens, ref).mean_f1()


def ext_oracle(
    example: Example, config: SourceConfig, k: int = 3, compute_gap: bool = False
) -> OracleResult:
    """Greedy extractive upper bound: grow a selection of up to k pool
    sentences, each step adding the sentence that most improves the mean of
    ROUGE-1/2/L F1 against the gold summary; stop early when nothing strictly
    improves it. Selected sentences are concatenated in pool order.

    With compute_gap=True the exhaustive optimum over all subsets of size <= k
    is also computed (exponential; keep pools small) and reported as
    greedy_gap = exhaustive - greedy.
    """
    pool = pool_sentences(example, config)
    if not pool:
        raise DataError("empty candidate pool")
    ref = example.summary.tokens()
    picked: list[int] = []
    best_obj = 0.0
    trace: list[float] = []
    while len(picked) < k:
        best_i = None
        for i in range(len(pool)):
            if i in picked:
                continue
            obj = _objective(pool, picked + [i], ref)
            if obj > best_obj:
                best_obj = obj
                best_i = i
        if best_i is None:
            break
        picked.append(best_i)
        trace.append(best_obj)
    picked.sort()
    tokens = _selection_tokens(pool, picked)
    scores = rouge_triple(tokens, ref) if tokens else RougeTriple(
        RougeScore(0.0, 0.0, 0.0), RougeScore(0.0, 0.0, 0.0), RougeScore(0.0, 0.0, 0.0)
    )
    gap = None
    if compute_gap:
        exhaustive = ext_oracle_exhaustive(example, config, k)
        gap = exhaustive.objective - (trace[-1] if trace else 0.0)
    return OracleResult(
        selected=tuple((pool[i][0].doc_id, pool[i][1].index) for i in picked),
        scores=scores,
        objective=trace[-1] if trace else 0.0,
        objective_trace=tuple(trace),
        greedy_gap=gap,
    )


def ext_oracle_exhaustive(example: Example, config: SourceConfig, k: int = 3) -> OracleResult:
    """Brute-force optimum over all pool subsets of size 1..k (test oracle)."""
    pool = pool_sentences(example, config)
    if not pool:
        raise DataError("empty candidate pool")
    ref = example.summary.tokens()
    best: tuple[float, tuple[int, ...]] = (0.0, ())
    for size in range(1, min(k, len(pool)) + 1):
        for combo in itertools.combinations(range(len(pool)), size):
            obj = _objective(pool, combo, ref)
            if obj > best[0]:
                best = (obj, combo)
    obj, picked = best
    tokens = _selection_tokens(pool, picked)
    scores = rouge_triple(tokens, ref) if tokens else RougeTriple(
        RougeScore(0.0, 0.0, 0.0), RougeScore(0.0, 0.0, 0.0), RougeScore(0.0, 0.0, 0.0)
    )
    return OracleResult(
        selected=tuple((pool[i][0].doc_id, pool[i][1].index) for i in picked),
        scores=scores,
        objective=obj,
        objective_trace=(obj,),
    )
