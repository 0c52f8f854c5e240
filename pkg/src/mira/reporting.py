"""Run configuration, the worker pool, and report writers.

Every command writes a TSV (one row per example plus a trailing ``#corpus``
aggregate row, the arithmetic mean of each numeric column) and a JSON file
carrying the aggregates plus metadata (provider_id, toolkit version, config
hash). Reports are bit-for-bit reproducible for a fixed (corpus, config,
provider) regardless of worker count: work is parallel-mapped but results are
collected in corpus order and no timestamps are embedded.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from . import builder, corpus as corpus_mod, facts as facts_mod, lexical, selection as sel_mod
from .corpus import Example, Summary, read_jsonl
from .embeddings import BuiltinProvider, RemoteProvider
from .errors import ConfigError, DataError
from .lexical import SourceConfig

ENV_ENDPOINT = "MIRA_ENDPOINT"
ENV_CONCURRENCY = "MIRA_CONCURRENCY"


@dataclass
class RunConfig:
    corpus: str | None = None
    provider: str = "builtin"  # builtin | remote
    endpoint: str | None = None
    timeout: float = 30.0
    retries: int = 2
    concurrency: int = 8
    workers: int = 1
    ngrams: tuple[int, ...] = (1, 2, 3, 4)
    facts: str = "builtin"  # builtin | remote | path to interchange JSONL
    tau: float = 0.5
    seed: int = 0

    _FIELDS = (
        "corpus", "provider", "endpoint", "timeout", "retries", "concurrency",
        "workers", "ngrams", "facts", "tau", "seed",
    )

    @classmethod
    def build(cls, config_file: str | None = None, **flags) -> "RunConfig":
        """defaults < config file < MIRA_* env (endpoint/concurrency) < flags."""
        values: dict = {}
        if config_file:
            with open(config_file, "r", encoding="utf-8") as fh:
                try:
                    loaded = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{config_file}: not valid JSON: {exc}") from exc
            unknown = set(loaded) - set(cls._FIELDS)
            if unknown:
                raise ConfigError(f"{config_file}: unknown config keys: {sorted(unknown)}")
            values.update(loaded)
        if os.environ.get(ENV_ENDPOINT):
            values["endpoint"] = os.environ[ENV_ENDPOINT]
        if os.environ.get(ENV_CONCURRENCY):
            try:
                values["concurrency"] = int(os.environ[ENV_CONCURRENCY])
            except ValueError as exc:
                raise ConfigError(f"{ENV_CONCURRENCY} must be an integer") from exc
        values.update({k: v for k, v in flags.items() if v is not None})
        if "ngrams" in values:
            values["ngrams"] = tuple(int(n) for n in values["ngrams"])
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.provider not in ("builtin", "remote"):
            raise ConfigError(f"unknown provider {self.provider!r}")
        if self.provider == "remote" and not self.endpoint:
            raise ConfigError("remote provider requires --endpoint or MIRA_ENDPOINT")
        if any(n < 1 for n in self.ngrams):
            raise ConfigError("n-gram orders must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")

    def semantic_dict(self, **command_args) -> dict:
        """The config that determines report VALUES; execution knobs
        (workers, concurrency, timeout, retries) are excluded so the hash is
        stable across worker counts."""
        d = {
            "corpus": self.corpus,
            "provider": self.provider,
            "endpoint": self.endpoint if self.provider == "remote" else None,
            "ngrams": list(self.ngrams),
            "facts": self.facts,
            "tau": self.tau,
            "seed": self.seed,
        }
        d.update(command_args)
        return d


def config_hash(semantic: dict) -> str:
    blob = json.dumps(semantic, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def make_provider(cfg: RunConfig):
    if cfg.provider == "builtin":
        return BuiltinProvider()
    return RemoteProvider(
        cfg.endpoint,
        timeout=cfg.timeout,
        retries=cfg.retries,
        max_in_flight=cfg.concurrency,
    )


def make_extractor(cfg: RunConfig, provider, examples: Sequence[Example]):
    """(extractor, facts_id). File-backed facts are validated against the
    corpus; remote facts are prefetched for all documents up front."""
    if cfg.facts == "builtin":
        return facts_mod.extract_facts, "builtin-heuristic"
    if cfg.facts == "remote":
        if not isinstance(provider, RemoteProvider):
            raise ConfigError("--facts remote requires --provider remote")
        extractor = facts_mod.RemoteFactExtractor(provider)
        docs = []
        for ex in examples:
            docs.append((f"summary:{ex.example_id}", ex.summary.sentences))
            docs.append((ex.main.doc_id, ex.main.sentences))
            docs.extend((d.doc_id, d.sentences) for d in ex.assisting)
        extractor.prefetch(docs)
        return extractor, "remote-facts"
    external = facts_mod.ExternalFacts.from_file(cfg.facts)
    counts: dict[str, int] = {}
    for ex in examples:
        for doc in [ex.main, *ex.assisting]:
            counts[doc.doc_id] = len(doc.sentences)
    external.validate(counts)
    return external, f"file:{Path(cfg.facts).name}"


def parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map; results are independent of worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- report writing ---------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _aggregate(columns: Sequence[str], rows: Sequence[Sequence]) -> dict:
    agg: dict[str, float] = {}
    if not rows:
        return agg
    for i, col in enumerate(columns):
        values = [row[i] for row in rows]
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            agg[col] = sum(values) / len(values)
    return agg


def write_report(
    out_dir,
    name: str,
    columns: Sequence[str],
    rows: Sequence[Sequence],
    metadata: dict,
    extra: dict | None = None,
) -> dict:
    """Write <name>.tsv (+ #corpus row) and <name>.json; returns the aggregate."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    agg = _aggregate(columns, rows)
    with open(out_dir / f"{name}.tsv", "w", encoding="utf-8") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")
        fh.write(
            "\t".join(
                ["#corpus"] + [_fmt(agg[c]) if c in agg else "-" for c in columns[1:]]
            )
            + "\n"
        )
    payload = {
        "command": name,
        "n_rows": len(rows),
        "aggregate": agg,
        "metadata": metadata,
    }
    if extra:
        payload.update(extra)
    with open(out_dir / f"{name}.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")
    return agg


def _metadata(cfg: RunConfig, provider_id: str, **command_args) -> dict:
    return {
        "provider_id": provider_id,
        "version": __version__,
        "config_hash": config_hash(cfg.semantic_dict(**command_args)),
    }


def _load_corpus(cfg: RunConfig) -> list[Example]:
    if not cfg.corpus:
        raise ConfigError("--corpus is required")
    examples = read_jsonl(cfg.corpus)
    if not examples:
        raise DataError(f"{cfg.corpus}: empty corpus")
    return examples


# --- commands ----------------------------------------------------------------------


def run_build(manifest: str, out_dir, seed: int, ratios: tuple[float, float, float]) -> dict:
    report = builder.build_corpus(manifest, out_dir, seed=seed, ratios=ratios)
    summary = {
        "example_counts": report.example_counts,
        "clusters_total": report.clusters_total,
        "clusters_kept": report.clusters_kept,
        "pages_loaded": report.pages_loaded,
        "pages_skipped": len(report.skips),
    }
    with open(Path(out_dir) / "build.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summary


def run_stats(cfg: RunConfig, out_dir) -> dict:
    examples = _load_corpus(cfg)
    stats = corpus_mod.corpus_stats(examples)
    columns = [
        "corpus", "train", "valid", "test", "avg_doc_words", "avg_doc_sents",
        "avg_summ_words", "avg_summ_sents", "vocab_document", "vocab_summary",
    ]
    row = [
        Path(cfg.corpus).name,
        stats.example_counts["train"],
        stats.example_counts["valid"],
        stats.example_counts["test"],
        stats.avg_doc_words,
        stats.avg_doc_sents,
        stats.avg_summ_words,
        stats.avg_summ_sents,
        stats.vocab_size_document,
        stats.vocab_size_summary,
    ]
    return write_report(
        out_dir, "stats", columns, [row], _metadata(cfg, "n/a", command="stats"),
        extra={"stats": dataclasses.asdict(stats)},
    )


def run_novelty(cfg: RunConfig, out_dir, source_config: SourceConfig) -> dict:
    examples = _load_corpus(cfg)
    ns = cfg.ngrams

    def score(ex: Example) -> list:
        pool = lexical.pool_documents(ex, source_config)
        row: list = [ex.example_id]
        degenerate = []
        for n in ns:
            nov = lexical.ngram_novelty(ex.summary, pool, n)
            cov = lexical.ngram_coverage(ex.summary, pool, n)
            row.extend([nov.pct, cov.pct])
            if nov.degenerate:
                degenerate.append(str(n))
        row.append(",".join(degenerate))
        return row

    rows = parallel_map(score, examples, cfg.workers)
    columns = ["id"]
    for n in ns:
        columns += [f"novelty_{n}", f"coverage_{n}"]
    columns.append("degenerate")
    name = f"novelty-{source_config.value}"
    meta = _metadata(cfg, "n/a", command="novelty", source_config=source_config.value)
    return write_report(out_dir, name, columns, rows, meta)


def run_extractive(
    cfg: RunConfig,
    out_dir,
    method: str,
    source_config: SourceConfig,
    k: int = 3,
    debug_gap: bool = False,
) -> dict:
    examples = _load_corpus(cfg)
    if method not in ("lead", "oracle"):
        raise ConfigError(f"unknown extractive method {method!r}")

    def score(ex: Example) -> list:
        if method == "lead":
            res = lexical.lead(ex, source_config, k)
            triple = res.scores
            extra: list = []
        else:
            res = lexical.ext_oracle(ex, source_config, k, compute_gap=debug_gap)
            triple = res.scores
            selected = ";".join(f"{d}:{i}" for d, i in res.selected)
            extra = [res.objective, len(res.selected), selected]
            if debug_gap:
                extra.append(res.greedy_gap)
        row = [ex.example_id]
        for score_ in (triple.r1, triple.r2, triple.rl):
            row += [score_.precision, score_.recall, score_.f1]
        return row + extra

    rows = parallel_map(score, examples, cfg.workers)
    columns = ["id"]
    for r in ("r1", "r2", "rl"):
        columns += [f"{r}_p", f"{r}_r", f"{r}_f1"]
    if method == "oracle":
        columns += ["objective", "n_selected", "selected"]
        if debug_gap:
            columns.append("greedy_gap")
    name = f"extractive-{method}-{source_config.value}"
    meta = _metadata(
        cfg, "n/a", command="extractive", method=method,
        source_config=source_config.value, k=k,
    )
    return write_report(out_dir, name, columns, rows, meta)


_FACT_COLUMNS = ["id", "n_facts", "sf_d", "sf_a", "sf_da", "asst_rate", "asst_positive",
                 "degenerate"]


def _fact_row(report: facts_mod.FactWeightReport) -> list:
    return [
        report.example_id,
        len(report.fact_texts),
        report.sf_d,
        report.sf_a,
        report.sf_da,
        report.asst_rate,
        1.0 if report.asst_rate > 0 else 0.0,
        int(report.degenerate),
    ]


def run_factmetrics(cfg: RunConfig, out_dir) -> dict:
    examples = _load_corpus(cfg)
    provider = make_provider(cfg)
    extractor, facts_id = make_extractor(cfg, provider, examples)
    reports = parallel_map(
        lambda ex: facts_mod.example_fact_report(ex, provider, extractor),
        examples,
        cfg.workers,
    )
    rows = [_fact_row(r) for r in reports]
    meta = _metadata(cfg, provider.provider_id, command="factmetrics", facts=facts_id)
    # aggregate column asst_positive IS the summary-level rate
    return write_report(out_dir, "factmetrics", _FACT_COLUMNS, rows, meta)


def run_select(
    cfg: RunConfig,
    out_dir,
    method: str,
    bands: sel_mod.ThresholdBands | None = None,
    k: int = 1,
) -> dict:
    examples = _load_corpus(cfg)
    provider = None
    if method == "pipeline":
        if bands is None:
            raise ConfigError("pipeline selection requires bands")
        provider = make_provider(cfg)
        select = lambda ex: sel_mod.weak_select(ex, bands, provider)
    elif method == "gold":
        select = lambda ex: sel_mod.gold_select(ex, k)
    else:
        raise ConfigError(f"unknown selection method {method!r}")
    results = parallel_map(select, examples, cfg.workers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"select-{method}"
    with open(out_dir / f"{name}.jsonl", "w", encoding="utf-8") as fh:
        for ex, res in zip(examples, results):
            fh.write(
                json.dumps(
                    {
                        "id": ex.example_id,
                        "method": res.method,
                        "selected": [
                            {
                                "doc_id": s.doc_id,
                                "sentence_index": s.sentence_index,
                                "scores": s.scores,
                            }
                            for s in res.selected
                        ],
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    rows = [[ex.example_id, len(res.selected)] for ex, res in zip(examples, results)]
    meta = _metadata(cfg, provider.provider_id if provider else "n/a",
                     command="select", method=method, k=k,
                     bands=bands.to_dict() if bands else None)
    return write_report(out_dir, name, ["id", "n_selected"], rows, meta)


def run_calibrate(cfg: RunConfig, out_dir, k: int = 1) -> sel_mod.ThresholdBands:
    examples = _load_corpus(cfg)
    provider = make_provider(cfg)
    selections = parallel_map(
        lambda ex: (ex, sel_mod.gold_select(ex, k)), examples, cfg.workers
    )
    bands = sel_mod.calibrate_bands(selections, provider)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = bands.to_dict()
    payload["metadata"] = _metadata(cfg, provider.provider_id, command="calibrate", k=k)
    with open(out_dir / "bands.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return bands


def run_assemble(
    cfg: RunConfig,
    out_dir,
    mode: str,
    capacity: int,
    bands: sel_mod.ThresholdBands | None = None,
    k: int = 1,
) -> dict:
    examples = _load_corpus(cfg)
    provider = make_provider(cfg) if mode == "p" else None

    def assemble(ex: Example) -> sel_mod.AssembledInput:
        if mode == "p":
            selection = sel_mod.weak_select(ex, bands or sel_mod.ThresholdBands.default(), provider)
        elif mode == "g":
            selection = sel_mod.gold_select(ex, k)
        else:
            selection = None
        return sel_mod.assemble_input(ex, mode, capacity, selection)

    assembled = parallel_map(assemble, examples, cfg.workers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"assemble-{mode}"
    with open(out_dir / f"{name}.jsonl", "w", encoding="utf-8") as fh:
        for item in assembled:
            fh.write(json.dumps(item.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    rows = [[a.example_id, len(a.tokens), len(a.provenance)] for a in assembled]
    meta = _metadata(cfg, provider.provider_id if provider else "n/a",
                     command="assemble", mode=mode, capacity=capacity, k=k,
                     bands=bands.to_dict() if bands else None)
    return write_report(out_dir, name, ["id", "n_tokens", "n_spans"], rows, meta)


def read_generated(path) -> dict[str, str]:
    generated: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                generated[d["id"]] = d["summary_text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: malformed generated summary at line {lineno}: {exc}")
    return generated


def run_evaluate(cfg: RunConfig, out_dir, generated_path) -> dict:
    """Score generated summaries: coverage vs main+assisting, support from
    assisting only, fact weights, and per-fact hallucination flags (w_fda
    below tau, with the best-matching source fact as evidence)."""
    examples = _load_corpus(cfg)
    generated = read_generated(generated_path)
    by_id = {ex.example_id: ex for ex in examples}
    unknown = sorted(set(generated) - set(by_id))
    if unknown:
        raise DataError(f"generated summaries reference unknown example ids: {unknown}")
    provider = make_provider(cfg)
    scored_examples = [by_id[gid] for gid in generated]
    extractor, facts_id = make_extractor(cfg, provider, scored_examples)
    ns = cfg.ngrams
    summaries = {
        gid: Summary.from_text(text) if text.strip() else None
        for gid, text in generated.items()
    }
    if cfg.facts == "remote":
        extractor.prefetch(
            [(f"generated:{gid}", s.sentences) for gid, s in summaries.items() if s]
        )

    def score(item: tuple[str, str]) -> tuple[list, list[dict]]:
        gen_id, text = item
        ex = by_id[gen_id]
        summary = summaries[gen_id]
        if summary is None:
            row: list = [gen_id]
            row += [0.0] * (2 * len(ns))
            row += [0.0, 0.0, 0.0, 0.0, 0.0, 0, 1]
            return row, []
        pool = [ex.main, *ex.assisting]
        row = [gen_id]
        for n in ns:
            row.append(lexical.ngram_coverage(summary, pool, n).pct)
        for n in ns:
            row.append(lexical.support_from_assisting(summary, ex.main, ex.assisting, n).pct)
        report = facts_mod.example_fact_report(
            ex, provider, extractor, summary=summary, summary_doc_id=f"generated:{gen_id}"
        )
        flags = [
            {
                "fact": report.fact_texts[i],
                "w_fda": report.w_fda[i],
                "evidence": report.best_source[i],
            }
            for i in range(len(report.fact_texts))
            if report.w_fda[i] < cfg.tau
        ]
        row += [
            report.sf_d, report.sf_a, report.sf_da, report.asst_rate,
            1.0 if report.asst_rate > 0 else 0.0, len(flags), int(report.degenerate),
        ]
        return row, flags

    items = list(generated.items())
    results = parallel_map(score, items, cfg.workers)
    rows = [r for r, _ in results]
    flagged = {
        gen_id: flags for (gen_id, _), (_, flags) in zip(items, results) if flags
    }
    columns = ["id"]
    columns += [f"coverage_{n}" for n in ns]
    columns += [f"support_{n}" for n in ns]
    columns += ["sf_d", "sf_a", "sf_da", "asst_rate", "asst_positive", "n_flagged",
                "degenerate"]
    meta = _metadata(cfg, provider.provider_id, command="evaluate", facts=facts_id,
                     generated=Path(generated_path).name)
    return write_report(out_dir, "evaluate", columns, rows, meta,
                        extra={"flagged": flagged})


def run_report(out_dir) -> dict:
    """Merge every per-command JSON in out_dir into report.json and return a
    human-readable table string."""
    out_dir = Path(out_dir)
    merged: dict[str, dict] = {}
    for path in sorted(out_dir.glob("*.json")):
        if path.name in ("report.json", "build.json", "bands.json"):
            continue
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if "aggregate" in data:
            merged[path.stem] = {
                "aggregate": data["aggregate"],
                "metadata": data.get("metadata", {}),
                "n_rows": data.get("n_rows"),
            }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(merged, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    lines = []
    for name, data in sorted(merged.items()):
        lines.append(name)
        for col, value in sorted(data["aggregate"].items()):
            lines.append(f"  {col:<18} {value:.6f}")
    table = "\n".join(lines)
    return {"report": merged, "table": table}
