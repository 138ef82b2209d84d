"""Command-line front door.

Subcommands:

* ``attribute``: score and analyze a single configured utterance.
* ``sweep``: run every configured utterance (including sweep grids).
* ``ablate``: run only the modality-drop ablation.
* ``selftest``: cross-check the estimators against the brute-force
  reference and the known-structure toy games.

Exit codes: 0 = run completed (possibly with per-utterance failures
recorded in the report), 2 = configuration problem, 3 = oracle fatal
(nothing could be scored).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .report import (
    AnalysisRequest,
    ConfigError,
    OracleFatalError,
    load_run_config,
    run,
    summarize,
)
from .selftest import run_selftest


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run config (TOML)")
    parser.add_argument("--seed", type=int, default=None, help="override root seed")
    parser.add_argument(
        "--method",
        choices=["exact", "permutation", "sampling"],
        default=None,
        help="override estimator method",
    )
    parser.add_argument("--budget", type=int, default=None, help="override budget")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument(
        "--format",
        dest="formats",
        default=None,
        help="comma-separated report formats (csv,json)",
    )
    parser.add_argument("--workers", type=int, default=None, help="worker pool size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avshap",
        description="Per-token Shapley attribution over two-modality inputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    attribute = sub.add_parser("attribute", help="analyze one utterance")
    _add_common_flags(attribute)
    attribute.add_argument(
        "--utterance", default=None, help="utterance id when several are configured"
    )

    sweep = sub.add_parser("sweep", help="analyze every configured utterance")
    _add_common_flags(sweep)

    ablate = sub.add_parser("ablate", help="modality-drop ablation only")
    _add_common_flags(ablate)
    ablate.add_argument(
        "--modality",
        action="append",
        choices=["audio", "video"],
        default=None,
        help="modality to drop (repeatable; default: both)",
    )

    selftest = sub.add_parser("selftest", help="run the estimator verification suite")
    selftest.add_argument("--fast", action="store_true", help="smaller game sample")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for key in ("seed", "method", "budget", "out", "formats", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return run_selftest(fast=args.fast)

    try:
        config = load_run_config(args.config, _overrides(args))
        if args.command == "attribute":
            config = _restrict_to_one(config, args.utterance)
        elif args.command == "ablate":
            modalities = tuple(args.modality or ("audio", "video"))
            config = replace(
                config,
                analyses=AnalysisRequest(global_balance=False, ablations=modalities),
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run(config)
    except OracleFatalError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 3
    print(summarize(report))
    return 0


def _restrict_to_one(config, utterance_id):
    if config.bridge is not None:
        return config  # manifests are only known after the handshake
    utterances = config.toy_utterances
    if utterance_id is not None:
        matches = tuple(u for u in utterances if u.utterance_id == utterance_id)
        if not matches:
            raise ConfigError(f"no configured utterance with id {utterance_id!r}")
        return replace(config, toy_utterances=matches)
    if len(utterances) != 1:
        raise ConfigError(
            f"attribute runs one utterance but {len(utterances)} are configured; "
            "pass --utterance or use the sweep command"
        )
    return config


if __name__ == "__main__":
    sys.exit(main())
