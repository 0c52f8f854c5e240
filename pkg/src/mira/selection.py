"""Content selection and model-input assembly.

Selection comes in two flavors: the weakly supervised pipeline (assisting
sentences whose avg/max/min relevance to the main document falls strictly
inside calibrated threshold bands) and gold selection (pool sentences ranked
by their mean ROUGE-1/2/L F1 against each gold summary sentence). Assembly
packs the main document plus assisting content into a fixed token capacity
with full provenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Document, Example, Sentence
from .embeddings import cosine_matrix
from .errors import ConfigError, DataError
from .lexical import rouge_triple

# shipped preset for the three relevance-band categories (avg, max, min)
DEFAULT_BANDS_JSON = {"avg": [0.73, 0.83], "max": [0.81, 0.91], "min": [0.59, 0.75]}


@dataclass(frozen=True)
class ThresholdBands:
    avg: tuple[float, float]
    max: tuple[float, float]
    min: tuple[float, float]

    def __post_init__(self) -> None:
        for name in ("avg", "max", "min"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"band {name}: lower bound {lo} exceeds upper bound {hi}")

    @classmethod
    def default(cls) -> "ThresholdBands":
        return cls.from_dict(DEFAULT_BANDS_JSON)

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdBands":
        try:
            return cls(
                avg=(float(d["avg"][0]), float(d["avg"][1])),
                max=(float(d["max"][0]), float(d["max"][1])),
                min=(float(d["min"][0]), float(d["min"][1])),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ConfigError(f"malformed bands: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ThresholdBands":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"avg": list(self.avg), "max": list(self.max), "min": list(self.min)}


@dataclass
class SelectedSentence:
    doc_id: str
    sentence_index: int
    scores: dict


@dataclass
class SelectionResult:
    selected: list[SelectedSentence]
    method: str  # "pipeline" | "gold"

    def __post_init__(self) -> None:
        keys = [(s.doc_id, s.sentence_index) for s in self.selected]
        if len(keys) != len(set(keys)):
            raise DataError("duplicate sentence in selection")


def _main_vectors(example: Example, provider) -> np.ndarray:
    if not example.main.sentences:
        raise DataError(f"example {example.example_id}: empty main document")
    return provider.embed_many([s.text for s in example.main.sentences])


def relevance_profile(
    assist_sentence: Sentence, main_doc: Document, provider
) -> tuple[float, float, float]:
    """(avg, max, min) cosine relevance of one sentence to every main sentence."""
    if not main_doc.sentences:
        raise DataError("empty main document")
    main_vecs = provider.embed_many([s.text for s in main_doc.sentences])
    vec = provider.embed_many([assist_sentence.text])
    sims = cosine_matrix(vec, main_vecs)[0]
    return float(sims.mean()), float(sims.max()), float(sims.min())


def _profiles(example: Example, sentences: Sequence[Sentence], provider) -> np.ndarray:
    """(len(sentences), 3) array of (avg, max, min) vs the main document."""
    main_vecs = _main_vectors(example, provider)
    vecs = provider.embed_many([s.text for s in sentences])
    sims = cosine_matrix(vecs, main_vecs)
    return np.column_stack([sims.mean(axis=1), sims.max(axis=1), sims.min(axis=1)])


def weak_select(example: Example, bands: ThresholdBands, provider) -> SelectionResult:
    """Assisting sentences whose three relevance statistics all fall strictly
    inside their bands, in source order. May be empty."""
    picked: list[SelectedSentence] = []
    for doc in example.assisting:
        if not doc.sentences:
            continue
        profiles = _profiles(example, doc.sentences, provider)
        for sent, (avg, mx, mn) in zip(doc.sentences, profiles):
            if (
                bands.avg[0] < avg < bands.avg[1]
                and bands.max[0] < mx < bands.max[1]
                and bands.min[0] < mn < bands.min[1]
            ):
                picked.append(
                    SelectedSentence(
                        doc.doc_id,
                        sent.index,
                        {"avg": float(avg), "max": float(mx), "min": float(mn)},
                    )
                )
    return SelectionResult(selected=picked, method="pipeline")


def _resolve_sentence(example: Example, doc_id: str, sentence_index: int) -> Sentence:
    for doc in [example.main, *example.assisting]:
        if doc.doc_id == doc_id:
            try:
                return doc.sentences[sentence_index]
            except IndexError:
                raise DataError(
                    f"example {example.example_id}: no sentence {doc_id}#{sentence_index}"
                ) from None
    raise DataError(f"example {example.example_id}: unknown doc_id {doc_id!r} in selection")


def calibrate_bands(
    selections: Sequence[tuple[Example, SelectionResult]], provider
) -> ThresholdBands:
    """Fit bands from gold-selected sentences: for each category the band is
    (mean - std, mean + std) over that category's per-sentence statistic,
    population standard deviation."""
    samples: list[tuple[float, float, float]] = []
    for example, result in selections:
        main_vecs = _main_vectors(example, provider)
        sents = [_resolve_sentence(example, s.doc_id, s.sentence_index) for s in result.selected]
        if not sents:
            continue
        vecs = provider.embed_many([s.text for s in sents])
        sims = cosine_matrix(vecs, main_vecs)
        for row in sims:
            samples.append((float(row.mean()), float(row.max()), float(row.min())))
    if len(samples) < 2:
        raise DataError(f"calibration needs at least 2 selected sentences, got {len(samples)}")
    arr = np.asarray(samples)
    mu = arr.mean(axis=0)
    sigma = arr.std(axis=0)  # population
    sigma[np.ptp(arr, axis=0) == 0.0] = 0.0  # constant samples: exactly zero spread
    return ThresholdBands(
        avg=(float(mu[0] - sigma[0]), float(mu[0] + sigma[0])),
        max=(float(mu[1] - sigma[1]), float(mu[1] + sigma[1])),
        min=(float(mu[2] - sigma[2]), float(mu[2] + sigma[2])),
    )


def score_ext(sentence_tokens: Sequence[str], summary_sentence_tokens: Sequence[str]) -> float:
    """Mean of ROUGE-1/2/L F1 of a pool sentence against one summary sentence."""
    return rouge_triple(sentence_tokens, summary_sentence_tokens).mean_f1()


def gold_select(example: Example, k: int = 1) -> SelectionResult:
    """Per gold-summary sentence, take the top-k pool sentences (main and
    assisting) by extraction score; dedupe; order by best score descending,
    ties by pool position."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    if not example.summary.sentences:
        raise DataError(f"example {example.example_id}: empty summary")
    pool = [(doc, sent) for doc in [example.main, *example.assisting] for sent in doc.sentences]
    if not pool:
        raise DataError(f"example {example.example_id}: empty sentence pool")
    # scores[i][j]: pool sentence i vs summary sentence j
    scores = [
        [score_ext(sent.tokens, ss.tokens) for ss in example.summary.sentences]
        for _, sent in pool
    ]
    chosen: set[int] = set()
    for j in range(len(example.summary.sentences)):
        ranked = sorted(range(len(pool)), key=lambda i: (-scores[i][j], i))
        chosen.update(ranked[:k])
    best = {i: max(scores[i]) for i in chosen}
    ordered = sorted(chosen, key=lambda i: (-best[i], i))
    return SelectionResult(
        selected=[
            SelectedSentence(pool[i][0].doc_id, pool[i][1].index, {"score_ext": best[i]})
            for i in ordered
        ],
        method="gold",
    )


# --- input assembly --------------------------------------------------------------

MODES = ("s", "c", "p", "g")


@dataclass(frozen=True)
class ProvenanceSpan:
    start: int  # token range in the assembled sequence, end-exclusive
    end: int
    doc_id: str
    sentence_index: int


@dataclass
class AssembledInput:
    example_id: str
    mode: str
    capacity: int
    tokens: list[str]
    provenance: list[ProvenanceSpan]

    def to_dict(self) -> dict:
        return {
            "id": self.example_id,
            "mode": self.mode,
            "tokens": self.tokens,
            "provenance": [
                {
                    "from": p.start,
                    "to": p.end,
                    "doc_id": p.doc_id,
                    "sentence_index": p.sentence_index,
                }
                for p in self.provenance
            ],
        }


class _Packer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.tokens: list[str] = []
        self.provenance: list[ProvenanceSpan] = []

    @property
    def used(self) -> int:
        return len(self.tokens)

    def add_sentence(self, doc_id: str, sent: Sentence, limit: int) -> bool:
        """Append up to `limit - used` tokens of one sentence; False when full."""
        room = min(limit, self.capacity) - self.used
        if room <= 0:
            return False
        take = sent.tokens[:room]
        if not take:
            return True
        start = self.used
        self.tokens.extend(take)
        self.provenance.append(ProvenanceSpan(start, self.used, doc_id, sent.index))
        return True

    def add_document(self, doc: Document, limit: int) -> None:
        for sent in doc.sentences:
            if not self.add_sentence(doc.doc_id, sent, limit):
                break


def assemble_input(
    example: Example,
    mode: str,
    capacity: int,
    selection: SelectionResult | None = None,
) -> AssembledInput:
    """Pack an example into a model-ready token sequence.

    s: main document truncated to capacity.
    c: main truncated to capacity//2, then every assisting document truncated
       to an even share of the remaining budget, in corpus order.
    p/g: main truncated to capacity//2, then selected sentences in selection
       order until the capacity is reached (last sentence cut at the token
       boundary).
    """
    if mode not in MODES:
        raise ConfigError(f"unknown assembly mode {mode!r}")
    if capacity < 2:
        raise ConfigError("capacity must be >= 2")
    if mode in ("p", "g") and selection is None:
        raise ConfigError(f"mode {mode!r} requires a selection")
    packer = _Packer(capacity)
    main_budget = capacity if mode == "s" else capacity // 2
    packer.add_document(example.main, main_budget)
    if mode == "c":
        remaining = capacity - packer.used
        if example.assisting and remaining > 0:
            share = remaining // len(example.assisting)
            for doc in example.assisting:
                packer.add_document(doc, packer.used + share)
    elif mode in ("p", "g"):
        for sel in selection.selected:
            sent = _resolve_sentence(example, sel.doc_id, sel.sentence_index)
            if not packer.add_sentence(sel.doc_id, sent, capacity):
                break
    assert packer.used <= capacity
    return AssembledInput(
        example_id=example.example_id,
        mode=mode,
        capacity=capacity,
        tokens=packer.tokens,
        provenance=packer.provenance,
    )
