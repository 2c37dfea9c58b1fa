"""Plan making: sample candidate day plans, convert, rank, accept or replan.

For each day the Plan role drafts k candidates at its own temperature, the
Evaluate role converts each draft to the structured day object, and the
deterministic day-scope checks rank them. A day whose best candidate still
has significant errors sends the run back to information collection, but
only once per day; after that the best available candidate is accepted.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .domain import (
    DailyPlan,
    PlanDocumentError,
    TravelQuery,
    daily_budget_line,
    hard_constraints_text,
    ordinal_word,
    parse_day_object,
)
from .gateway import AgentRole, BackendError, Gateway
from .prompts import render_prompt
from .sandbox import TravelDatabase
from .verify import DayReport, check_day

if TYPE_CHECKING:
    from .collect import KnowledgeItem, StrategyBlock

logger = logging.getLogger(__name__)

KNOWLEDGE_SEPARATOR = "-" * 38


class ConversionError(Exception):
    """A plan draft would not convert to the structured day object."""


@dataclass(frozen=True)
class ReplanSignal:
    """Sent back to the collection loop: this day needs better information."""

    day: int
    notes: tuple[str, ...]


class ReplanState:
    """Tracks which days have already used their one replan pass."""

    def __init__(self) -> None:
        self._days: set[int] = set()

    def already_replanned(self, day: int) -> bool:
        return day in self._days

    def mark(self, day: int) -> None:
        self._days.add(day)


@dataclass
class Candidate:
    index: int
    raw_text: str
    plan: DailyPlan | None
    conversion_error: str | None = None
    report: DayReport | None = None


@dataclass
class CandidateSet:
    day: int
    candidates: list[Candidate] = field(default_factory=list)
    chosen: int | None = None  # index of the accepted candidate

    def to_json(self) -> dict:
        return {
            "day": self.day,
            "chosen": self.chosen,
            "candidates": [
                {
                    "index": c.index,
                    "converted": c.plan is not None,
                    "conversion_error": c.conversion_error,
                    "significant_errors": c.report.significant_count if c.report else None,
                    "total_errors": c.report.total_count if c.report else None,
                    "running_cost_cents": c.report.running_cost_cents if c.report else None,
                }
                for c in self.candidates
            ],
        }


@dataclass
class DayOutcome:
    plan: DailyPlan | None
    raw_text: str
    replan: ReplanSignal | None
    candidates: CandidateSet
    report: DayReport | None
    detail: str = ""


def render_knowledge_dump(items: Sequence) -> str:
    """Notebook items as the planner sees them: numbered lines per item,
    items separated by a dashed rule."""
    if not items:
        return "(the notebook is empty)"
    blocks = []
    for item in items:
        blocks.append("\n".join(f"{i}: {line}" for i, line in enumerate(item.lines, start=1)))
    return f"\n{KNOWLEDGE_SEPARATOR}\n".join(blocks)


def _plan_bundle(day: int, query: TravelQuery, strategy: StrategyBlock, dump: str) -> dict[str, str]:
    return {
        "day_ordinal": ordinal_word(day),
        "date": query.date_for_day(day).isoformat(),
        "outline": strategy.outline.route.render(),
        "budget_line": daily_budget_line(query),
        "constraints": hard_constraints_text(query),
        "knowledge": dump,
    }


def generate_candidates(
    day: int,
    query: TravelQuery,
    strategy: StrategyBlock,
    dump: str,
    gateway: Gateway,
    k: int = 3,
) -> list[str]:
    """Sample k drafts of the day plan from the identical prompt."""
    bundle = _plan_bundle(day, query, strategy, dump)
    messages = render_prompt(AgentRole.PLAN, bundle)
    drafts: list[str] = []
    for attempt in range(k):
        try:
            drafts.append(gateway.ask(AgentRole.PLAN, messages))
        except BackendError as exc:
            logger.warning("plan draft %d/%d failed: %s", attempt + 1, k, exc)
    return drafts


def _extract_json(text: str) -> object:
    cleaned = text.strip()
    if cleaned.startswith("```"):
        cleaned = cleaned.strip("`")
        if cleaned.startswith("json"):
            cleaned = cleaned[4:]
        cleaned = cleaned.strip()
    start, end = cleaned.find("["), cleaned.rfind("]")
    if start != -1 and end > start:
        try:
            return json.loads(cleaned[start : end + 1])
        except json.JSONDecodeError:
            pass
    start, end = cleaned.find("{"), cleaned.rfind("}")
    if start != -1 and end > start:
        return json.loads(cleaned[start : end + 1])
    raise json.JSONDecodeError("no JSON value found", cleaned, 0)


def plan_to_structured(raw_text: str, day: int, gateway: Gateway) -> DailyPlan:
    """Convert one draft into a DailyPlan via the Evaluate role.

    A rejected conversion is reprompted once with the parse error; a second
    failure raises ConversionError.
    """
    bundle = {"day": str(day), "draft": raw_text}
    last_error = ""
    for attempt in range(2):
        if last_error:
            bundle = dict(bundle, error=last_error)
        try:
            text = gateway.ask(AgentRole.EVALUATE, render_prompt(AgentRole.EVALUATE, bundle))
        except BackendError as exc:
            last_error = str(exc)
            continue
        try:
            data = _extract_json(text)
        except json.JSONDecodeError as exc:
            last_error = f"not valid JSON: {exc}"
            continue
        if isinstance(data, list):
            if len(data) != 1:
                last_error = f"expected exactly one day object, got {len(data)}"
                continue
            data = data[0]
        try:
            plan = parse_day_object(data)
        except PlanDocumentError as exc:
            last_error = str(exc)
            continue
        if plan.day != day:
            last_error = f"the object says day {plan.day}, expected day {day}"
            continue
        return plan
    raise ConversionError(last_error or "conversion failed")


def rank_candidates(
    candidates: list[Candidate],
    query: TravelQuery,
    db: TravelDatabase,
    prior_days: tuple[DailyPlan, ...],
) -> list[Candidate]:
    """Attach day reports and order candidates best first.

    Fewest significant errors, then fewest errors overall, then lowest
    running cost; drafts that never converted rank last. Ties keep the
    sampling order, so ranking is deterministic.
    """
    for candidate in candidates:
        if candidate.plan is not None and candidate.report is None:
            candidate.report = check_day(candidate.plan, query, db, prior_days)

    def key(c: Candidate) -> tuple:
        if c.plan is None or c.report is None:
            return (1, 0, 0, 0, c.index)
        return (0, c.report.significant_count, c.report.total_count, c.report.running_cost_cents, c.index)

    return sorted(candidates, key=key)


def _collect_notes(candidates: list[Candidate]) -> tuple[str, ...]:
    notes: list[str] = []
    for candidate in candidates:
        if candidate.conversion_error:
            note = f"a draft could not be converted: {candidate.conversion_error}"
            if note not in notes:
                notes.append(note)
        if candidate.report:
            for finding in candidate.report.findings:
                if finding.detail not in notes:
                    notes.append(finding.detail)
    return tuple(notes)


def daily_plan_step(
    day: int,
    knowledge_items: Sequence[KnowledgeItem],
    strategy: StrategyBlock,
    query: TravelQuery,
    db: TravelDatabase,
    gateway: Gateway,
    replan_state: ReplanState,
    *,
    prior_days: tuple[DailyPlan, ...] = (),
    k: int = 3,
) -> DayOutcome:
    """Produce the day's plan, or a replan signal, or give up on the day."""
    dump = render_knowledge_dump(knowledge_items)
    drafts = generate_candidates(day, query, strategy, dump, gateway, k=k)
    candidates: list[Candidate] = []
    for i, raw in enumerate(drafts, start=1):
        try:
            plan = plan_to_structured(raw, day, gateway)
            candidates.append(Candidate(index=i, raw_text=raw, plan=plan))
        except ConversionError as exc:
            candidates.append(
                Candidate(index=i, raw_text=raw, plan=None, conversion_error=str(exc))
            )
    ranked = rank_candidates(candidates, query, db, prior_days)
    candidate_set = CandidateSet(day=day, candidates=ranked)

    best = ranked[0] if ranked else None
    best_usable = best is not None and best.plan is not None
    best_clean = best_usable and best.report is not None and best.report.significant_count == 0

    if best_clean:
        assert best is not None and best.plan is not None
        candidate_set.chosen = best.index
        return DayOutcome(
            plan=best.plan,
            raw_text=best.raw_text,
            replan=None,
            candidates=candidate_set,
            report=best.report,
        )

    if not replan_state.already_replanned(day):
        replan_state.mark(day)
        notes = _collect_notes(candidates) or (
            f"no usable draft was produced for the {ordinal_word(day)} day",
        )
        return DayOutcome(
            plan=None,
            raw_text="",
            replan=ReplanSignal(day=day, notes=notes),
            candidates=candidate_set,
            report=None,
        )

    # the one replan pass is spent: deliver the best we have, flaws and all
    if best_usable:
        assert best is not None and best.plan is not None
        candidate_set.chosen = best.index
        return DayOutcome(
            plan=best.plan,
            raw_text=best.raw_text,
            replan=None,
            candidates=candidate_set,
            report=best.report,
        )
    return DayOutcome(
        plan=None,
        raw_text="",
        replan=None,
        candidates=candidate_set,
        report=None,
        detail=f"no candidate for day {day} survived conversion, even after replanning",
    )
