"""Shared fixtures: the sample dataset plus session-recorded transcripts."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import pytest

from tripsmith.harness import load_corpus
from tripsmith.metrics import RunOutcome
from tripsmith.sandbox import TravelDatabase, load_database

import scripted

REPO_ROOT = Path(__file__).resolve().parent.parent
SAMPLE_DATA = REPO_ROOT / "data" / "sample" / "sandbox"
SAMPLE_CORPUS = REPO_ROOT / "data" / "sample" / "corpus.jsonl"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return SAMPLE_DATA


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return SAMPLE_CORPUS


@pytest.fixture(scope="session")
def db() -> TravelDatabase:
    return load_database(SAMPLE_DATA)


@pytest.fixture(scope="session")
def queries() -> dict:
    return {q.query_id: q for q in load_corpus(SAMPLE_CORPUS)}


@dataclass
class RecordedRun:
    outcome: RunOutcome
    transcript: Path
    run_dir: Path


def _record(query_id: str, script: dict, work: Path, primed: bool = False) -> RecordedRun:
    outcome, transcript, run_dir = scripted.record_run(
        query_id,
        script,
        data_dir=SAMPLE_DATA,
        corpus_path=SAMPLE_CORPUS,
        work_dir=work,
        primed_guides=scripted.GUIDE_LINES if primed else None,
    )
    return RecordedRun(outcome, transcript, run_dir)


@pytest.fixture(scope="session")
def golden_hnl(tmp_path_factory) -> RecordedRun:
    """The Honolulu run: delivered, every check green."""
    return _record("hnl-001", scripted.golden_honolulu_script(), tmp_path_factory.mktemp("hnl"))


@pytest.fixture(scope="session")
def golden_atl(tmp_path_factory) -> RecordedRun:
    """The Atlanta run: delivered, every check green, all five hard families."""
    return _record(
        "atl-002", scripted.golden_atlanta_script(), tmp_path_factory.mktemp("atl"), primed=True
    )


@pytest.fixture(scope="session")
def infeasible_sav(tmp_path_factory) -> RecordedRun:
    """The Savannah run: no transportation exists, outline never stabilizes."""
    return _record(
        "sav-003", scripted.savannah_script(), tmp_path_factory.mktemp("sav"), primed=True
    )


@pytest.fixture(scope="session")
def failure_loop(tmp_path_factory) -> RecordedRun:
    return _record("atl-002", scripted.loop_script(), tmp_path_factory.mktemp("loop"))


@pytest.fixture(scope="session")
def failure_wander(tmp_path_factory) -> RecordedRun:
    return _record("atl-002", scripted.wander_script(), tmp_path_factory.mktemp("wander"))


@pytest.fixture(scope="session")
def failure_replan(tmp_path_factory) -> RecordedRun:
    return _record("hnl-001", scripted.replan_script(), tmp_path_factory.mktemp("replan"))


@pytest.fixture(scope="session")
def corpus_transcripts(golden_hnl, golden_atl, infeasible_sav, tmp_path_factory) -> Path:
    """One directory holding a transcript per corpus query, for corpus replays."""
    folder = tmp_path_factory.mktemp("corpus-transcripts")
    for rec, qid in (
        (golden_hnl, "hnl-001"),
        (golden_atl, "atl-002"),
        (infeasible_sav, "sav-003"),
    ):
        (folder / f"{qid}.jsonl").write_bytes(rec.transcript.read_bytes())
    return folder


# ---------------------------------------------------------------------------
# acceptance-gate reporting

_ACCEPTANCE_ID = re.compile(r"test_acceptance\.py::test_acceptance_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One visible verdict line per acceptance criterion that ran."""
    verdicts: dict[int, str] = {}
    for status, word in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIPPED")):
        for report in terminalreporter.stats.get(status, []):
            match = _ACCEPTANCE_ID.search(getattr(report, "nodeid", ""))
            if match:
                verdicts[int(match.group(1))] = word
    if verdicts:
        terminalreporter.write_line("")
        for number in sorted(verdicts):
            terminalreporter.write_line(f"ACCEPTANCE {number}: {verdicts[number]}")
