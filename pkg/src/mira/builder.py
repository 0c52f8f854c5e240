"""Corpus construction: HTML content extraction, clusters, leave-one-out
examples, and leak-free splits.

Pages are split into train/valid/test BEFORE clustering; clusters then form
within a split only, so no document ever appears in two splits in any role.
A page already placed in an earlier cluster is dropped from later ones,
keeping doc_ids unique corpus-wide.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import (
    MAX_ASSISTING,
    ROLE_ASSISTING,
    ROLE_MAIN,
    Document,
    Example,
    Summary,
    write_jsonl,
)
from .errors import ClusterEmpty, ConfigError, DataError, PageSkipped

# Elements whose entire subtree never contributes body text.
_EXCLUDED_TAGS = frozenset(
    {"script", "style", "nav", "header", "footer", "aside", "figure", "figcaption",
     "form", "noscript", "iframe", "button", "template", "svg", "video", "audio"}
)
# class/id word segments marking ads, captions, and other inline furniture
_EXCLUDED_CLASS_WORDS = frozenset(
    {"ad", "ads", "advert", "advertisement", "advertising", "promo", "sponsor",
     "sponsored", "caption", "credit", "share", "social", "related", "sidebar",
     "comment", "comments", "newsletter", "subscribe", "cookie", "video",
     "player", "hidden", "popup", "banner"}
)
_VOID_TAGS = frozenset(
    {"img", "br", "meta", "link", "input", "hr", "area", "base", "col",
     "embed", "source", "track", "wbr"}
)
_META_PRIORITY = ("og:description", "twitter:description", "description")


def _class_blacklisted(attrs: dict[str, str | None]) -> bool:
    value = " ".join(filter(None, (attrs.get("class"), attrs.get("id"))))
    if not value:
        return False
    segments = {seg for part in value.lower().split() for seg in part.replace("_", "-").split("-")}
    return bool(segments & _EXCLUDED_CLASS_WORDS)


class _ArticleParser(HTMLParser):
    """Collects <p> text outside blacklisted subtrees, plus description metas."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.paragraphs: list[str] = []
        self.meta: dict[str, str] = {}
        self._stack: list[tuple[str, bool]] = []  # (tag, suppressed)
        self._suppress = 0
        self._in_p = 0
        self._buf: list[str] = []

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag == "meta":
            key = attrs.get("property") or attrs.get("name")
            content = (attrs.get("content") or "").strip()
            if key in _META_PRIORITY and content and key not in self.meta:
                self.meta[key] = content
            return
        if tag in _VOID_TAGS:
            return
        if tag == "p" and self._in_p:
            self._flush_paragraph()  # implicit close of an unclosed <p>
        suppressed = tag in _EXCLUDED_TAGS or _class_blacklisted(attrs)
        self._stack.append((tag, suppressed))
        if suppressed:
            self._suppress += 1
        elif tag == "p":
            self._in_p += 1

    def handle_endtag(self, tag):
        if all(open_tag != tag for open_tag, _ in self._stack):
            return  # stray close tag
        while self._stack:
            open_tag, suppressed = self._stack.pop()
            if suppressed:
                self._suppress -= 1
            elif open_tag == "p":
                self._in_p -= 1
                self._flush_paragraph()
            if open_tag == tag:
                break

    def handle_data(self, data):
        if self._in_p and not self._suppress:
            self._buf.append(data)

    def _flush_paragraph(self):
        text = " ".join("".join(self._buf).split())
        self._buf.clear()
        if text:
            self.paragraphs.append(text)

    def close(self):
        super().close()
        if self._buf:
            self._flush_paragraph()


@dataclass(frozen=True)
class RawPage:
    url: str
    html: str
    cited_urls: tuple[str, ...] = ()


@dataclass
class Cluster:
    cluster_id: str
    members: list[tuple[Document, Summary]]


def extract_article(page: RawPage) -> tuple[str, str]:
    """(body_text, summary_text) from a fetched page.

    Body: whitespace-normalized paragraph text outside markup/ad/caption
    subtrees, newline-joined. Summary: the first present description metadata
    field in priority order og:description, twitter:description, description.
    """
    parser = _ArticleParser()
    parser.feed(page.html)
    parser.close()
    summary = next((parser.meta[k] for k in _META_PRIORITY if k in parser.meta), None)
    if summary is None:
        raise PageSkipped(f"{page.url}: no description metadata")
    body = "\n".join(parser.paragraphs)
    if not body.strip():
        raise PageSkipped(f"{page.url}: empty body after cleaning")
    return body, summary


def doc_id_for(url: str) -> str:
    return "d" + hashlib.blake2b(url.encode("utf-8"), digest_size=8).hexdigest()


def _member(page: RawPage) -> tuple[Document, Summary]:
    body, summary = extract_article(page)
    doc = Document.from_text(doc_id_for(page.url), page.url, body, ROLE_MAIN)
    if not doc.sentences:
        raise PageSkipped(f"{page.url}: body has no usable sentences")
    return doc, Summary.from_text(summary)


def build_cluster(
    hub: RawPage,
    cited: Sequence[RawPage],
    on_skip: Callable[[str, str], None] | None = None,
) -> Cluster:
    """One cluster per hub page: the hub plus its successfully extracted cited
    pages, in order. Skips are reported through on_skip; a cluster with no
    extractable member raises ClusterEmpty."""
    members: list[tuple[Document, Summary]] = []
    seen: set[str] = set()
    for page in [hub, *cited]:
        if page.url in seen:
            if on_skip:
                on_skip(page.url, "duplicate page within cluster")
            continue
        seen.add(page.url)
        try:
            members.append(_member(page))
        except PageSkipped as exc:
            if on_skip:
                on_skip(page.url, str(exc))
    if not members:
        raise ClusterEmpty(f"cluster for {hub.url}: every page skipped")
    return Cluster(cluster_id="c" + hashlib.blake2b(hub.url.encode(), digest_size=8).hexdigest(),
                   members=members)


def make_examples(cluster: Cluster, split: str) -> list[Example]:
    """Leave-one-out examples: each member becomes the main document once,
    with the other members (first 4 in cluster order) assisting. Single-member
    clusters yield nothing."""
    if len(cluster.members) < 2:
        return []
    examples = []
    for i, (doc, summary) in enumerate(cluster.members):
        others = [d for j, (d, _) in enumerate(cluster.members) if j != i][:MAX_ASSISTING]
        examples.append(
            Example(
                example_id=f"{cluster.cluster_id}:{i}",
                main=doc.with_role(ROLE_MAIN),
                summary=summary,
                assisting=[d.with_role(ROLE_ASSISTING) for d in others],
                split=split,
            )
        )
    return examples


def split_corpus(
    pages: Sequence[RawPage] | Sequence[str],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> dict[str, str]:
    """Randomly assign every page URL to train/valid/test before clustering.

    Deterministic for a given seed and page set (order-independent)."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {ratios}")
    urls = sorted(p if isinstance(p, str) else p.url for p in pages)
    if len(urls) < 3:
        raise DataError(f"need at least 3 pages to split, got {len(urls)}")
    random.Random(seed).shuffle(urls)
    n = len(urls)
    n_train = int(n * ratios[0])
    n_valid = int(n * (ratios[0] + ratios[1])) - n_train
    assignment = {}
    for i, url in enumerate(urls):
        if i < n_train:
            assignment[url] = "train"
        elif i < n_train + n_valid:
            assignment[url] = "valid"
        else:
            assignment[url] = "test"
    return assignment


# --- manifest-driven build -------------------------------------------------------


@dataclass(frozen=True)
class ManifestRow:
    url: str
    html_path: str
    is_hub: bool
    cited_urls: tuple[str, ...]


def read_manifest(path) -> list[ManifestRow]:
    """TSV rows: url<TAB>html_path<TAB>hub_flag(1|0)<TAB>cited;urls (last two
    optional)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise DataError(f"{path}: line {lineno}: expected at least url<TAB>html_path")
            url, html_path = cols[0].strip(), cols[1].strip()
            if not url or not html_path:
                raise DataError(f"{path}: line {lineno}: empty url or html_path")
            hub_flag = cols[2].strip() if len(cols) > 2 else "0"
            if hub_flag not in ("0", "1"):
                raise DataError(f"{path}: line {lineno}: hub flag must be 0 or 1")
            cited = tuple(
                u.strip() for u in (cols[3].split(";") if len(cols) > 3 else []) if u.strip()
            )
            rows.append(ManifestRow(url, html_path, hub_flag == "1", cited))
    return rows


@dataclass
class BuildReport:
    example_counts: dict[str, int]
    clusters_total: int
    clusters_kept: int
    pages_loaded: int
    skips: list[tuple[str, str]] = field(default_factory=list)


def build_corpus(
    manifest_path,
    out_dir,
    seed: int = 0,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> BuildReport:
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = read_manifest(manifest_path)
    skips: list[tuple[str, str]] = []

    pages: dict[str, RawPage] = {}
    for row in rows:
        html_path = Path(row.html_path)
        if not html_path.is_absolute():
            html_path = manifest_path.parent / html_path
        try:
            html = html_path.read_text("utf-8")
        except OSError as exc:
            skips.append((row.url, f"unreadable html: {exc}"))
            continue
        pages[row.url] = RawPage(row.url, html, row.cited_urls if row.is_hub else ())

    assignment = split_corpus(list(pages.values()), ratios, seed)

    claimed: set[str] = set()
    examples_by_split: dict[str, list[Example]] = {s: [] for s in ("train", "valid", "test")}
    clusters_total = clusters_kept = 0
    for row in rows:
        if not row.is_hub or row.url not in pages:
            continue
        clusters_total += 1
        hub_split = assignment[row.url]
        cluster_pages: list[RawPage] = []
        seen_urls: set[str] = set()
        for url in (row.url, *row.cited_urls):
            if url in seen_urls:
                continue
            seen_urls.add(url)
            page = pages.get(url)
            if page is None:
                skips.append((url, f"cited by {row.url} but not in manifest"))
                continue
            if assignment[url] != hub_split:
                skips.append((url, f"cross-split citation dropped (hub {row.url})"))
                continue
            if url in claimed:
                skips.append((url, f"already used by an earlier cluster (hub {row.url})"))
                continue
            cluster_pages.append(page)
        if not cluster_pages:
            skips.append((row.url, "cluster empty before extraction"))
            continue
        try:
            cluster = build_cluster(
                cluster_pages[0], cluster_pages[1:], lambda url, why: skips.append((url, why))
            )
        except ClusterEmpty as exc:
            skips.append((row.url, str(exc)))
            continue
        clusters_kept += 1
        claimed.update(m[0].source_url for m in cluster.members)
        examples_by_split[hub_split].extend(make_examples(cluster, hub_split))

    for split, examples in examples_by_split.items():
        write_jsonl(examples, out_dir / f"{split}.jsonl")
    with open(out_dir / "build.log", "w", encoding="utf-8") as fh:
        for url, reason in skips:
            fh.write(f"SKIP\t{url}\t{reason}\n")
        fh.write(
            f"DONE\tclusters={clusters_kept}/{clusters_total}\t"
            + "\t".join(f"{s}={len(examples_by_split[s])}" for s in ("train", "valid", "test"))
            + "\n"
        )

    report = BuildReport(
        example_counts={s: len(v) for s, v in examples_by_split.items()},
        clusters_total=clusters_total,
        clusters_kept=clusters_kept,
        pages_loaded=len(pages),
        skips=skips,
    )
    leaks = audit_splits([ex for v in examples_by_split.values() for ex in v])
    if leaks:
        raise DataError(f"split leak detected: {sorted(leaks)[:5]} ...")
    return report


def audit_splits(examples: Iterable[Example]) -> set[str]:
    """doc_ids (main or assisting) that appear in more than one split."""
    seen: dict[str, str] = {}
    leaks: set[str] = set()
    for ex in examples:
        for doc in [ex.main, *ex.assisting]:
            prior = seen.setdefault(doc.doc_id, ex.split)
            if prior != ex.split:
                leaks.add(doc.doc_id)
    return leaks
