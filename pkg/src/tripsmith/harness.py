"""Orchestration: run one query or a corpus end to end, persist artifacts.

Each query's run directory holds:
  transcript.log  the Strategy Block text (thought/action/observation trace)
  run.jsonl       structured events: requests, steps, replans, the outcome
  plan.json       the delivered plan document (delivered runs only)
  report.json     the constraint report (delivered runs only)
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .collect import LoopResult, run_collection_loop
from .config import RunConfig
from .domain import (
    ErrorCode,
    TravelQuery,
    parse_plan_document,
    query_from_json,
    serialize_plan,
)
from .gateway import (
    Backend,
    BackendError,
    Gateway,
    LiveBackend,
    RecordBackend,
    ReplayBackend,
)
from .metrics import CorpusReport, RunOutcome, corpus_report
from .outline import GuidesCache, Outline, OutlineError, build_outline, scan_guides
from .sandbox import DataError, TravelDatabase, load_database
from .verify import check_plan, hard_constraint_keys

logger = logging.getLogger(__name__)

BACKEND_FAILURE = "BackendFailure"  # infrastructure death, not an engine verdict


def load_corpus(path: Path | str) -> list[TravelQuery]:
    """Read a JSONL corpus; every line is one structured query."""
    file_path = Path(path)
    if not file_path.is_file():
        raise DataError(f"corpus file not found: {file_path}")
    queries: list[TravelQuery] = []
    seen: set[str] = set()
    with file_path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                query = query_from_json(json.loads(line))
            except Exception as exc:  # json or validation problems alike
                raise DataError(f"{file_path}:{lineno}: bad query: {exc}") from None
            if query.query_id in seen:
                raise DataError(f"{file_path}:{lineno}: duplicate query id {query.query_id!r}")
            seen.add(query.query_id)
            queries.append(query)
    if not queries:
        raise DataError(f"corpus file is empty: {file_path}")
    return queries


def transcript_file(config: RunConfig, query_id: str) -> Path:
    """Where this query's transcript lives.

    A path ending in .jsonl is a single-query transcript file; anything else
    is a directory holding one <query_id>.jsonl per query.
    """
    assert config.transcript_path is not None
    base = Path(config.transcript_path)
    if base.suffix == ".jsonl":
        return base
    return base / f"{query_id}.jsonl"


def build_backend(config: RunConfig, query_id: str) -> Backend:
    if config.mode == "live":
        return LiveBackend(config.base_url, config.model)
    if config.mode == "replay":
        return ReplayBackend.from_path(transcript_file(config, query_id), strict=config.strict_replay)
    if config.mode == "record":
        live = LiveBackend(config.base_url, config.model)
        return RecordBackend(live, transcript_file(config, query_id))
    raise AssertionError(f"unreachable mode {config.mode}")


def _write_jsonl(path: Path, events: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for event in events:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")


def execute_query(
    query: TravelQuery,
    config: RunConfig,
    db: TravelDatabase,
    gateway: Gateway,
    guides_cache: GuidesCache,
) -> tuple[RunOutcome, LoopResult | None, Outline | None, str]:
    """Run the three phases; always returns an outcome, never raises."""
    hard_keys = hard_constraint_keys(query)

    def undelivered(code: str, detail: str) -> RunOutcome:
        logger.info("%s: undelivered (%s): %s", query.query_id, code, detail)
        return RunOutcome(
            query_id=query.query_id,
            delivered=False,
            delivery_failure=code,
            steps_used=0,
            hard_keys=hard_keys,
        )

    try:
        outline = build_outline(
            query, gateway, db, guides_cache=guides_cache, route_retries=config.route_retries
        )
    except OutlineError as exc:
        return undelivered(ErrorCode.OUTLINE_INFEASIBLE.value, str(exc)), None, None, str(exc)
    except BackendError as exc:
        return undelivered(BACKEND_FAILURE, str(exc)), None, None, str(exc)

    try:
        result = run_collection_loop(
            query,
            outline,
            db,
            gateway,
            step_limit=config.step_limit,
            min_pop=config.min_pop,
            k_candidates=config.k_candidates,
            tool_context_steps=config.tool_context_steps,
        )
    except BackendError as exc:
        return undelivered(BACKEND_FAILURE, str(exc)), None, outline, str(exc)

    if result.plan is None:
        assert result.failure is not None
        outcome = RunOutcome(
            query_id=query.query_id,
            delivered=False,
            delivery_failure=result.failure.value,
            steps_used=result.steps_used,
            hard_keys=hard_keys,
        )
        return outcome, result, outline, result.failure_detail

    report = check_plan(result.plan, query, db)
    outcome = RunOutcome(
        query_id=query.query_id,
        delivered=True,
        delivery_failure=None,
        steps_used=result.steps_used,
        hard_keys=hard_keys,
        report=report,
        plan=result.plan,
    )
    return outcome, result, outline, ""


def persist_run(
    run_dir: Path,
    query: TravelQuery,
    gateway: Gateway,
    outcome: RunOutcome,
    result: LoopResult | None,
    detail: str,
) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)

    if result is not None:
        transcript_text = result.strategy.render()
    else:
        transcript_text = f"(the run ended before information collection: {detail})\n"
    (run_dir / "transcript.log").write_text(transcript_text, encoding="utf-8")

    events: list[dict] = [{"event": "run_started", "query_id": query.query_id}]
    events.extend(
        {"event": "request", "role": role, "temperature": temperature}
        for role, temperature in gateway.request_log
    )
    if result is not None:
        events.extend(result.events)
        events.extend(
            {"event": "candidates", **candidate_set.to_json()}
            for candidate_set in result.candidate_sets
        )
    events.append({"event": "outcome", **outcome.to_json()})
    _write_jsonl(run_dir / "run.jsonl", events)

    if outcome.delivered:
        assert outcome.plan is not None and outcome.report is not None
        (run_dir / "plan.json").write_text(serialize_plan(outcome.plan), encoding="utf-8")
        (run_dir / "report.json").write_text(
            json.dumps(outcome.report.to_json(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


def run_single(
    config: RunConfig,
    query_id: str,
    *,
    queries: list[TravelQuery] | None = None,
    db: TravelDatabase | None = None,
    guides_cache: GuidesCache | None = None,
    gateway: Gateway | None = None,
) -> RunOutcome:
    """Run one corpus query end to end and persist its artifacts."""
    if queries is None:
        queries = load_corpus(config.corpus_path)
    matches = [q for q in queries if q.query_id == query_id]
    if not matches:
        raise ValueError(f"no query {query_id!r} in {config.corpus_path}")
    query = matches[0]
    if db is None:
        db = load_database(config.data_dir)
    if gateway is None:
        gateway = Gateway(build_backend(config, query_id), plan_temperature=config.plan_temperature)
    if guides_cache is None:
        guides_cache = GuidesCache()

    outcome, result, _outline, detail = execute_query(query, config, db, gateway, guides_cache)
    persist_run(Path(config.output_dir) / query.query_id, query, gateway, outcome, result, detail)
    return outcome


def run_corpus(config: RunConfig) -> CorpusReport:
    """Run every corpus query (worker pool) and write the aggregate report."""
    queries = load_corpus(config.corpus_path)
    db = load_database(config.data_dir)
    guides_cache = GuidesCache()

    # one backend per query, created up front; the first query's backend also
    # serves the one-time guides generation, so its transcript owns that entry
    gateways = {
        q.query_id: Gateway(build_backend(config, q.query_id), plan_temperature=config.plan_temperature)
        for q in queries
    }
    guides = guides_cache.get(gateways[queries[0].query_id])
    for warning in scan_guides(guides, db.all_cities()):
        logger.warning("guide leakage: %s", warning)

    def worker(query: TravelQuery) -> RunOutcome:
        return run_single(
            config,
            query.query_id,
            queries=queries,
            db=db,
            guides_cache=guides_cache,
            gateway=gateways[query.query_id],
        )

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(worker, queries))
    else:
        outcomes = [worker(q) for q in queries]

    report = corpus_report(outcomes)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (output_dir / "report.txt").write_text(report.render_table(), encoding="utf-8")
    return report


def reaggregate(runs_dir: Path | str) -> CorpusReport:
    """Rebuild the corpus report from per-query run directories."""
    root = Path(runs_dir)
    if not root.is_dir():
        raise DataError(f"runs directory not found: {root}")
    outcomes: list[RunOutcome] = []
    for run_jsonl in sorted(root.glob("*/run.jsonl")):
        with run_jsonl.open(encoding="utf-8") as handle:
            outcome_obj = None
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event.get("event") == "outcome":
                    outcome_obj = event
            if outcome_obj is None:
                raise DataError(f"{run_jsonl}: no outcome event")
        outcome = RunOutcome.from_json(outcome_obj)
        plan_file = run_jsonl.parent / "plan.json"
        if outcome.delivered and plan_file.is_file():
            plan = parse_plan_document(
                plan_file.read_text(encoding="utf-8"), query_id=outcome.query_id
            )
            outcome = replace(outcome, plan=plan)
        outcomes.append(outcome)
    if not outcomes:
        raise DataError(f"no run directories under {root}")
    return corpus_report(outcomes)
