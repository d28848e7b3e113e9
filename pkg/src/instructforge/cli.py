"""Operator command line: run the whole pipeline or individual stages."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .pipeline import (Pipeline, PipelineConfig, StaleUpstreamError,
                       collect_stats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instructforge",
        description="Seed curation and self-generated instruction data "
                    "pipeline with sandboxed validation.")
    parser.add_argument("--config", help="YAML config file (authoritative)")
    parser.add_argument("--seed", type=int, help="master rng seed override")
    parser.add_argument("--strategy",
                        choices=["passes_only", "failures_only", "random_all",
                                 "random_subset"],
                        help="selection strategy override")
    parser.add_argument("--n-samples", type=int,
                        help="response samples per instruction")
    parser.add_argument("--backend", help="backend kind override")
    parser.add_argument("--sandbox-url", help="sandbox service URL override")
    parser.add_argument("--resume", action="store_true",
                        help="continue from existing partial artifacts "
                             "(the default behavior; kept for clarity)")
    parser.add_argument("--bare", action="store_true",
                        help="strip provenance from the emitted dataset")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", help="execute every stage in order")
    for name in ("curate", "concepts", "instructions", "responses",
                 "validate", "select", "revalidate"):
        sub.add_parser(name, help=f"run only the {name} stage")
    sub.add_parser("stats", help="report per-stage counts and drop reasons")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        config = PipelineConfig.from_yaml(args.config)
    else:
        config = PipelineConfig()
    if args.seed is not None:
        config.master_seed = args.seed
    if args.strategy:
        config.strategy.kind = args.strategy
    if args.n_samples is not None:
        config.n_samples = args.n_samples
    if args.backend and config.backend is not None:
        config.backend.kind = args.backend
    if args.sandbox_url:
        config.sandbox_url = args.sandbox_url
    if args.bare:
        config.bare = True
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    config = load_config(args)

    try:
        if args.command == "stats":
            report = collect_stats(config.output_dir)
            print(json.dumps(report, indent=2))
            return 0
        pipeline = Pipeline(config)
        if args.command == "run":
            summary = pipeline.run()
        else:
            summary = pipeline.run_stage(args.command)
        print(json.dumps(summary, indent=2))
        return 0
    except (StaleUpstreamError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
