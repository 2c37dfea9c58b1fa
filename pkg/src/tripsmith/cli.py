"""Command-line entry points.

Verbs: run (one query), bench (a corpus), record (capture live transcripts),
validate-data (sandbox lint), report (re-aggregate from run directories).
Exit codes: 0 success, 1 usage, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import BACKEND_MODES, ConfigError, RunConfig, apply_overrides, load_config
from .gateway import BackendError
from .harness import load_corpus, reaggregate, run_corpus, run_single
from .sandbox import DataError, load_database

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage problems instead of its default 2."""

    def error(self, message: str):  # noqa: D102
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML config file")
    parser.add_argument("--data-dir", type=Path, help="sandbox CSV directory")
    parser.add_argument("--corpus", type=Path, dest="corpus_path", help="corpus JSONL file")
    parser.add_argument("--output-dir", type=Path, help="where run artifacts go")
    parser.add_argument("--mode", choices=BACKEND_MODES, help="backend mode")
    parser.add_argument(
        "--transcript", type=Path, dest="transcript_path", help="transcript file or directory"
    )
    parser.add_argument("--base-url", help="chat-completions endpoint base URL")
    parser.add_argument("--model", help="model name for live calls")
    parser.add_argument("--parallelism", type=int, help="worker pool size for bench")
    parser.add_argument(
        "--strict-replay",
        action="store_const",
        const=True,
        default=None,
        help="fail replay on prompt drift instead of warning",
    )


def _build_config(args: argparse.Namespace, *, force_mode: str | None = None) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "data_dir",
            "corpus_path",
            "output_dir",
            "mode",
            "transcript_path",
            "base_url",
            "model",
            "parallelism",
            "strict_replay",
        )
    }
    config = apply_overrides(config, overrides)
    if force_mode:
        config.mode = force_mode
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="tripsmith", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", parents=[], help="run a single query")
    _add_config_flags(run_parser)
    run_parser.add_argument("--query-id", required=True, help="query to run")

    bench_parser = commands.add_parser("bench", help="run a whole corpus")
    _add_config_flags(bench_parser)

    record_parser = commands.add_parser("record", help="run live and capture transcripts")
    _add_config_flags(record_parser)
    record_parser.add_argument("--query-id", help="record one query instead of the corpus")

    validate_parser = commands.add_parser("validate-data", help="lint the sandbox CSVs")
    validate_parser.add_argument("--data-dir", type=Path, required=True)

    report_parser = commands.add_parser("report", help="re-aggregate metrics from run dirs")
    report_parser.add_argument("--runs-dir", type=Path, required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "validate-data":
            db = load_database(args.data_dir)
            for table, count in db.counts().items():
                print(f"{table}: {count} rows")
            print("ok")
            return EXIT_OK

        if args.command == "report":
            report = reaggregate(args.runs_dir)
            print(report.render_table(), end="")
            return EXIT_OK

        if args.command == "run":
            config = _build_config(args)
            outcome = run_single(config, args.query_id)
            if outcome.delivered:
                assert outcome.report is not None
                verdict = "passes all checks" if outcome.report.all_passed else "has findings"
                print(f"{args.query_id}: delivered in {outcome.steps_used} steps; {verdict}")
            else:
                print(f"{args.query_id}: undelivered ({outcome.delivery_failure})")
            print(f"artifacts: {Path(config.output_dir) / args.query_id}")
            return EXIT_OK

        if args.command == "bench":
            config = _build_config(args)
            report = run_corpus(config)
            print(report.render_table(), end="")
            print(f"artifacts: {config.output_dir}")
            return EXIT_OK

        if args.command == "record":
            config = _build_config(args, force_mode="record")
            if args.query_id:
                outcome = run_single(config, args.query_id)
                state = "delivered" if outcome.delivered else f"undelivered ({outcome.delivery_failure})"
                print(f"{args.query_id}: {state}; transcript captured")
            else:
                report = run_corpus(config)
                print(report.render_table(), end="")
            return EXIT_OK

        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
