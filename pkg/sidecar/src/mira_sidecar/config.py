import json
from dataclasses import dataclass


@dataclass
class SidecarConfig:
    """Models are pinned here so every report downstream can attribute its
    numbers to an exact (embedding, SRL) pair via provider_id."""

    embedding_model: str = "hashctx-256"
    srl_model: str = "rule-lexicon-v1"
    host: str = "127.0.0.1"
    port: int = 8470
    max_batch: int = 64
    max_text_length: int = 5000

    @classmethod
    def from_file(cls, path) -> "SidecarConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))
