"""End-to-end orchestration: artifacts, replay fidelity, corpus aggregation."""

from __future__ import annotations

import json
import logging
from fractions import Fraction
from pathlib import Path

import pytest

from tripsmith.config import RunConfig
from tripsmith.harness import (
    BACKEND_FAILURE,
    load_corpus,
    reaggregate,
    run_corpus,
    run_single,
    transcript_file,
)
from tripsmith.sandbox import DataError

import scripted
from conftest import SAMPLE_CORPUS, SAMPLE_DATA


def _events(run_dir: Path) -> list[dict]:
    lines = (run_dir / "run.jsonl").read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def _replay(rec, tmp_path, name="replay", strict=True, query_id=None):
    return scripted.replay_run(
        query_id or rec.outcome.query_id,
        rec.transcript,
        data_dir=SAMPLE_DATA,
        corpus_path=SAMPLE_CORPUS,
        output_dir=tmp_path / name,
        strict=strict,
    )


# ---------------------------------------------------------------------------
# corpus loading


def test_load_corpus_reads_sample():
    queries = load_corpus(SAMPLE_CORPUS)
    assert [q.query_id for q in queries] == ["hnl-001", "atl-002", "sav-003"]


def test_load_corpus_errors(tmp_path):
    with pytest.raises(DataError, match="corpus file not found"):
        load_corpus(tmp_path / "nope.jsonl")

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"query_id": "x"}\n', encoding="utf-8")
    with pytest.raises(DataError, match="bad.jsonl:1: bad query"):
        load_corpus(bad)

    line = SAMPLE_CORPUS.read_text(encoding="utf-8").splitlines()[0]
    dupes = tmp_path / "dupes.jsonl"
    dupes.write_text(line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(DataError, match="duplicate query id 'hnl-001'"):
        load_corpus(dupes)

    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n\n", encoding="utf-8")
    with pytest.raises(DataError, match="corpus file is empty"):
        load_corpus(empty)


def test_transcript_file_forms(tmp_path):
    single = RunConfig(transcript_path=tmp_path / "one.jsonl")
    assert transcript_file(single, "abc") == tmp_path / "one.jsonl"
    folder = RunConfig(transcript_path=tmp_path / "takes")
    assert transcript_file(folder, "abc") == tmp_path / "takes" / "abc.jsonl"


def test_run_single_rejects_unknown_query(tmp_path):
    config = scripted.base_config(SAMPLE_DATA, SAMPLE_CORPUS, tmp_path)
    with pytest.raises(ValueError, match="no query 'xyz-9'"):
        run_single(config, "xyz-9", gateway=None)


# ---------------------------------------------------------------------------
# run-directory artifacts


def test_delivered_run_directory_contents(golden_hnl):
    names = sorted(p.name for p in golden_hnl.run_dir.iterdir())
    assert names == ["plan.json", "report.json", "run.jsonl", "transcript.log"]

    plan = json.loads((golden_hnl.run_dir / "plan.json").read_text(encoding="utf-8"))
    assert [d["day"] for d in plan] == [1, 2, 3]
    report = json.loads((golden_hnl.run_dir / "report.json").read_text(encoding="utf-8"))
    assert all(report["passed_commonsense"].values())
    assert all(report["passed_hard"].values())


def test_undelivered_run_directory_contents(infeasible_sav):
    names = sorted(p.name for p in infeasible_sav.run_dir.iterdir())
    assert names == ["run.jsonl", "transcript.log"]
    text = (infeasible_sav.run_dir / "transcript.log").read_text(encoding="utf-8")
    assert text.startswith("(the run ended before information collection:")
    assert "no feasible route within 3 attempts" in text

    outcome = _events(infeasible_sav.run_dir)[-1]
    assert outcome["event"] == "outcome"
    assert outcome["delivered"] is False
    assert outcome["delivery_failure"] == "OutlineInfeasible"


def test_run_events_shape(golden_hnl):
    events = _events(golden_hnl.run_dir)
    assert events[0] == {"event": "run_started", "query_id": "hnl-001"}
    assert events[-1]["event"] == "outcome"

    requests = [e for e in events if e["event"] == "request"]
    assert requests, "request events missing"
    assert all(set(e) == {"event", "role", "temperature"} for e in requests)
    assert {e["temperature"] for e in requests if e["role"] == "Plan"} == {0.7}
    assert {e["temperature"] for e in requests if e["role"] != "Plan"} == {0.0}

    # events are content-addressed, never wall-clock stamped
    for event in events:
        for key in event:
            assert "time" not in key and "stamp" not in key

    delivered = [e for e in events if e["event"] == "delivered"]
    assert delivered == [{"event": "delivered", "steps_used": 8}]
    candidate_events = [e for e in events if e["event"] == "candidates"]
    assert len(candidate_events) == 3
    assert all(len(e["candidates"]) == 3 for e in candidate_events)


def test_recorded_fixture_outcomes(golden_hnl, golden_atl, failure_loop, failure_wander):
    assert golden_hnl.outcome.delivered and golden_hnl.outcome.steps_used == 8
    assert golden_hnl.outcome.report is not None and golden_hnl.outcome.report.all_passed
    assert golden_atl.outcome.delivered and golden_atl.outcome.report.all_passed
    assert golden_atl.outcome.hard_keys == (
        "budget", "room_rule:parties", "room_type", "cuisine", "transportation",
    )
    assert failure_loop.outcome.delivery_failure == "RepeatedToolLoop"
    assert failure_loop.outcome.steps_used == 3
    assert failure_wander.outcome.delivery_failure == "StepLimitExceeded"
    assert failure_wander.outcome.steps_used == 45


def test_replan_fixture_delivers_best_effort(failure_replan):
    assert failure_replan.outcome.delivered
    events = _events(failure_replan.run_dir)
    replans = [e for e in events if e["event"] == "replan"]
    assert len(replans) == 1 and replans[0]["day"] == 1
    assert len([e for e in events if e["event"] == "candidates"]) == 4

    report = failure_replan.outcome.report
    assert report is not None and not report.passed_commonsense["within_sandbox"]


# ---------------------------------------------------------------------------
# replay fidelity


def test_replay_is_bit_reproducible(golden_hnl, tmp_path):
    _, first = _replay(golden_hnl, tmp_path, "a")
    _, second = _replay(golden_hnl, tmp_path, "b")
    names = ["plan.json", "report.json", "run.jsonl", "transcript.log"]
    assert sorted(p.name for p in first.iterdir()) == names
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
        assert (first / name).read_bytes() == (golden_hnl.run_dir / name).read_bytes(), name


def test_truncated_transcript_is_a_backend_failure(golden_hnl, tmp_path):
    stub = tmp_path / "cut.jsonl"
    lines = golden_hnl.transcript.read_text(encoding="utf-8").splitlines()
    stub.write_text("\n".join(lines[:2]) + "\n", encoding="utf-8")

    outcome, run_dir = scripted.replay_run(
        "hnl-001", stub,
        data_dir=SAMPLE_DATA, corpus_path=SAMPLE_CORPUS,
        output_dir=tmp_path / "cut-run",
    )
    assert not outcome.delivered
    assert outcome.delivery_failure == BACKEND_FAILURE
    assert "transcript exhausted" in (run_dir / "transcript.log").read_text(encoding="utf-8")


def test_tampered_digest_warns_but_replays(golden_hnl, tmp_path, caplog):
    tampered = tmp_path / "tampered.jsonl"
    lines = golden_hnl.transcript.read_text(encoding="utf-8").splitlines()
    entry = json.loads(lines[0])
    entry["digest"] = "0" * 64
    lines[0] = json.dumps(entry, ensure_ascii=False)
    tampered.write_text("\n".join(lines) + "\n", encoding="utf-8")

    with caplog.at_level(logging.WARNING, logger="tripsmith.gateway"):
        outcome, run_dir = scripted.replay_run(
            "hnl-001", tampered,
            data_dir=SAMPLE_DATA, corpus_path=SAMPLE_CORPUS,
            output_dir=tmp_path / "lax",
        )
    assert outcome.delivered
    assert any("digest mismatch" in r.message for r in caplog.records)
    assert (run_dir / "plan.json").read_bytes() == (golden_hnl.run_dir / "plan.json").read_bytes()

    strict_outcome, _ = scripted.replay_run(
        "hnl-001", tampered,
        data_dir=SAMPLE_DATA, corpus_path=SAMPLE_CORPUS,
        output_dir=tmp_path / "strict", strict=True,
    )
    assert not strict_outcome.delivered
    assert strict_outcome.delivery_failure == BACKEND_FAILURE


# ---------------------------------------------------------------------------
# whole-corpus replays


def _corpus_config(corpus_transcripts, output_dir, parallelism=1):
    return scripted.base_config(
        SAMPLE_DATA,
        SAMPLE_CORPUS,
        output_dir,
        mode="replay",
        transcript_path=corpus_transcripts,
        parallelism=parallelism,
    )


def test_corpus_replay_rates(corpus_transcripts, tmp_path):
    report = run_corpus(_corpus_config(corpus_transcripts, tmp_path / "serial"))
    assert report.n_queries == 3
    assert report.delivery == Fraction(2, 3)
    assert report.micro_commonsense == Fraction(2, 3)
    assert report.macro_commonsense == Fraction(2, 3)
    assert report.micro_hard == Fraction(9, 10)
    assert report.macro_hard == Fraction(2, 3)
    assert report.final == Fraction(2, 3)
    assert report.histogram == {"OutlineInfeasible": 1}

    cells = json.loads((tmp_path / "serial" / "report.json").read_text(encoding="utf-8"))
    assert cells["delivery_rate"]["exact"] == "2/3"
    assert cells["hard_micro"]["exact"] == "9/10"
    assert (tmp_path / "serial" / "report.txt").read_text(encoding="utf-8").endswith("\n")
    for qid in ("hnl-001", "atl-002", "sav-003"):
        assert (tmp_path / "serial" / qid / "run.jsonl").is_file()


def test_corpus_replay_parallel_matches_serial(corpus_transcripts, tmp_path):
    serial = run_corpus(_corpus_config(corpus_transcripts, tmp_path / "p1", parallelism=1))
    parallel = run_corpus(_corpus_config(corpus_transcripts, tmp_path / "p4", parallelism=4))
    assert serial == parallel
    assert (tmp_path / "p1" / "report.json").read_bytes() == (
        tmp_path / "p4" / "report.json"
    ).read_bytes()
    for qid in ("hnl-001", "atl-002", "sav-003"):
        for name in ("run.jsonl", "transcript.log"):
            assert (tmp_path / "p1" / qid / name).read_bytes() == (
                tmp_path / "p4" / qid / name
            ).read_bytes()


def test_reaggregate_matches_live_report(corpus_transcripts, tmp_path):
    out = tmp_path / "runs"
    report = run_corpus(_corpus_config(corpus_transcripts, out))
    assert reaggregate(out) == report


def test_reaggregate_errors(tmp_path):
    with pytest.raises(DataError, match="runs directory not found"):
        reaggregate(tmp_path / "missing")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(DataError, match="no run directories"):
        reaggregate(empty)
