"""Rule-based predicate-argument frame extraction.

One frame per lexicon verb: the predicate span plus core argument spans (the
token runs to the previous and next verb/clause boundary, in role order).
Frames are flattened to predicate-first text; modifiers are dropped. Spans
index this module's own tokenization of the sentence. Verbless sentences
yield zero frames; the client applies its own fallback.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")

_BOUNDARY_WORDS = frozenset(
    {
        "and", "but", "or", "nor", "so", "yet", "because", "although", "though",
        "while", "when", "where", "after", "before", "since", "unless", "until",
        "that", "which", "who", "whom", "whose", "if", "as",
    }
)


def _load_verbs() -> frozenset[str]:
    text = resources.files("mira_sidecar.data").joinpath("verbs.txt").read_text("utf-8")
    lines = (ln.strip() for ln in text.splitlines())
    return frozenset(ln for ln in lines if ln and not ln.startswith("#"))


@dataclass(frozen=True)
class Frame:
    doc_id: str
    sentence_index: int
    predicate: tuple[int, int]
    arguments: tuple[tuple[int, int], ...]
    flat_text: str

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sentence_index": self.sentence_index,
            "predicate": list(self.predicate),
            "arguments": [list(a) for a in self.arguments],
            "flat_text": self.flat_text,
        }


class RuleSrl:
    def __init__(self, model_id: str = "rule-lexicon-v1"):
        self.model_id = model_id
        self._verbs = _load_verbs()

    def tokenize(self, text: str) -> list[str]:
        return _WORD_RE.findall(text.lower())

    def frames(self, doc_id: str, index: int, text: str) -> list[Frame]:
        tokens = self.tokenize(text)
        verb_pos = [i for i, t in enumerate(tokens) if t in self._verbs]
        if not verb_pos:
            return []
        stops = sorted(
            set(verb_pos) | {i for i, t in enumerate(tokens) if t in _BOUNDARY_WORDS}
        )
        frames = []
        for v in verb_pos:
            left_start = max((s + 1 for s in stops if s < v), default=0)
            right_end = min((s for s in stops if s > v), default=len(tokens))
            args = tuple(
                span for span in ((left_start, v), (v + 1, right_end)) if span[1] > span[0]
            )
            parts = [tokens[v]]
            for start, end in args:
                parts.extend(tokens[start:end])
            frames.append(Frame(doc_id, index, (v, v + 1), args, " ".join(parts)))
        return frames
