"""Command-line surface.

Exit codes: 0 ok, 2 config/validation error, 3 provider/transport error,
4 data error.
"""

from __future__ import annotations

import argparse
import sys

from . import reporting
from .errors import ConfigError, DataError, MiraError, ProviderError
from .lexical import SourceConfig
from .selection import ThresholdBands


def _parse_ratios(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"ratios must be three comma-separated numbers, got {text!r}")
    if len(parts) != 3:
        raise ConfigError(f"ratios must have exactly three values, got {text!r}")
    return parts


def _parse_ns(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--n must be comma-separated integers, got {text!r}")


def _source_config(text: str) -> SourceConfig:
    try:
        return SourceConfig(text)
    except ValueError:
        raise ConfigError(f"--config must be one of s-d, s-a, s-da; got {text!r}")


def _bands(text: str) -> ThresholdBands:
    if text in ("default", "preset", "paper-defaults"):
        return ThresholdBands.default()
    return ThresholdBands.from_file(text)


def _run_config(args) -> reporting.RunConfig:
    return reporting.RunConfig.build(
        config_file=getattr(args, "config_file", None),
        corpus=getattr(args, "corpus", None),
        provider=getattr(args, "provider", None),
        endpoint=getattr(args, "endpoint", None),
        timeout=getattr(args, "timeout", None),
        retries=getattr(args, "retries", None),
        concurrency=getattr(args, "concurrency", None),
        workers=getattr(args, "workers", None),
        ngrams=_parse_ns(args.n) if getattr(args, "n", None) else None,
        facts=getattr(args, "facts", None),
        tau=getattr(args, "tau", None),
        seed=getattr(args, "seed", None),
    )


def _add_common(p: argparse.ArgumentParser, corpus: bool = True) -> None:
    if corpus:
        p.add_argument("--corpus", required=True, help="corpus JSONL file")
    p.add_argument("--config-file", help="JSON run configuration file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, help="worker pool size (default 1)")
    p.add_argument("--seed", type=int)


def _add_provider(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["builtin", "remote"], help="embedding provider")
    p.add_argument("--endpoint", help="remote provider base URL")
    p.add_argument("--timeout", type=float)
    p.add_argument("--retries", type=int)
    p.add_argument("--concurrency", type=int, help="max in-flight provider requests")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mira",
        description="Multi-resource-assisted summarization corpora: build, "
        "measure grounding, select content, assemble model inputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a corpus from a fetched-pages manifest")
    p.add_argument("--manifest", required=True, help="TSV: url, html_path, hub_flag, cited_urls")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", help="corpus statistics")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("novelty", help="n-gram novelty/coverage per example")
    _add_common(p)
    p.add_argument("--config", default="s-d", help="source pool: s-d, s-a, or s-da")
    p.add_argument("--n", default="1,2,3,4", help="n-gram orders, comma-separated")
    p.set_defaults(func=cmd_novelty)

    p = sub.add_parser("extractive", help="LEAD baseline or greedy extractive oracle")
    _add_common(p)
    p.add_argument("--method", choices=["lead", "oracle"], required=True)
    p.add_argument("--config", default="s-d", help="source pool: s-d, s-a, or s-da")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--debug-gap", action="store_true",
                   help="also brute-force the exhaustive optimum (small pools only)")
    p.set_defaults(func=cmd_extractive)

    p = sub.add_parser("factmetrics", help="fact grounding: SFweights and AsstRate")
    _add_common(p)
    _add_provider(p)
    p.add_argument("--facts", help="builtin | remote | facts interchange JSONL")
    p.set_defaults(func=cmd_factmetrics)

    p = sub.add_parser("select", help="assisting-content selection")
    _add_common(p)
    _add_provider(p)
    p.add_argument("--method", choices=["pipeline", "gold"], required=True)
    p.add_argument("--bands", default="default",
                   help="bands JSON file or 'default' for the shipped preset")
    p.add_argument("--k", type=int, default=1, help="gold picks per summary sentence")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("calibrate", help="fit threshold bands from gold selection")
    _add_common(p)
    _add_provider(p)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("assemble", help="pack model inputs to a token capacity")
    _add_common(p)
    _add_provider(p)
    p.add_argument("--mode", choices=["s", "c", "p", "g"], required=True)
    p.add_argument("--capacity", type=int, default=1024)
    p.add_argument("--bands", default="default")
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("evaluate", help="score generated summaries against the corpus")
    _add_common(p)
    _add_provider(p)
    p.add_argument("--generated", required=True, help="JSONL of {id, summary_text}")
    p.add_argument("--facts", help="builtin | remote | facts interchange JSONL")
    p.add_argument("--tau", type=float, help="hallucination flag threshold on w_fda")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="merge prior command outputs into one report")
    p.add_argument("--out", default=".", help="directory holding per-command reports")
    p.set_defaults(func=cmd_report)

    return parser


def cmd_build(args) -> int:
    summary = reporting.run_build(args.manifest, args.out, args.seed, _parse_ratios(args.ratios))
    counts = summary["example_counts"]
    print(f"built {sum(counts.values())} examples "
          f"(train={counts['train']} valid={counts['valid']} test={counts['test']}); "
          f"clusters {summary['clusters_kept']}/{summary['clusters_total']}, "
          f"{summary['pages_skipped']} skips -> build.log")
    return 0


def cmd_stats(args) -> int:
    agg = reporting.run_stats(_run_config(args), args.out)
    print(f"stats written to {args.out}/stats.tsv")
    for key, value in sorted(agg.items()):
        print(f"  {key:<16} {value:.4f}")
    return 0


def cmd_novelty(args) -> int:
    cfg = _run_config(args)
    agg = reporting.run_novelty(cfg, args.out, _source_config(args.config))
    for key in sorted(agg):
        if key.startswith("novelty"):
            print(f"  {key:<12} {agg[key]:8.4f}")
    return 0


def cmd_extractive(args) -> int:
    cfg = _run_config(args)
    agg = reporting.run_extractive(
        cfg, args.out, args.method, _source_config(args.config), args.k, args.debug_gap
    )
    for key in ("r1_f1", "r2_f1", "rl_f1"):
        print(f"  {key:<8} {agg[key]:8.4f}")
    return 0


def cmd_factmetrics(args) -> int:
    cfg = _run_config(args)
    agg = reporting.run_factmetrics(cfg, args.out)
    for key in ("sf_d", "sf_a", "sf_da", "asst_rate", "asst_positive"):
        print(f"  {key:<14} {agg[key]:8.4f}")
    return 0


def cmd_select(args) -> int:
    cfg = _run_config(args)
    bands = _bands(args.bands) if args.method == "pipeline" else None
    agg = reporting.run_select(cfg, args.out, args.method, bands, args.k)
    print(f"  selected {agg['n_selected']:.2f} sentences/example")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _run_config(args)
    bands = reporting.run_calibrate(cfg, args.out, args.k)
    print(f"bands written to {args.out}/bands.json")
    for name in ("avg", "max", "min"):
        lo, hi = getattr(bands, name)
        print(f"  {name} ({lo:.4f}, {hi:.4f})")
    return 0


def cmd_assemble(args) -> int:
    cfg = _run_config(args)
    bands = _bands(args.bands) if args.mode == "p" else None
    agg = reporting.run_assemble(cfg, args.out, args.mode, args.capacity, bands, args.k)
    print(f"  assembled {agg['n_tokens']:.1f} tokens/example (capacity {args.capacity})")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _run_config(args)
    agg = reporting.run_evaluate(cfg, args.out, args.generated)
    for key in sorted(agg):
        print(f"  {key:<14} {agg[key]:8.4f}")
    return 0


def cmd_report(args) -> int:
    result = reporting.run_report(args.out)
    print(result["table"])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3
    except (DataError, MiraError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
