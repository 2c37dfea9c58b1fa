"""Information collection: the Thought/Tool/Description loop.

The Strategy Block is the agent-facing working memory (outline, budget
reminder, and the full Thought/Action/Observation history); the Knowledge
Block is the notebook holding raw tool results. Tool observations shown to
the agent are masked; the data lives only in the notebook.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .domain import (
    DomainError,
    ErrorCode,
    TravelPlan,
    TravelQuery,
    daily_budget_line,
    format_record,
    hard_constraints_text,
    ordinal_word,
    parse_iso_date,
)
from .gateway import AgentRole, EmptyResponseError, Gateway
from .outline import Outline
from .planmake import CandidateSet, ReplanSignal, ReplanState, daily_plan_step
from .prompts import TOOL_CATALOG, render_prompt
from .sandbox import TRANSPORT_MODES, TravelDatabase

logger = logging.getLogger(__name__)

MASK_NOTICE = (
    "Masked due to limited length. Make sure the data has been written in "
    "Notebook. Successfully recorded in Notebook: {description}"
)

POP_RULE_REMINDER = (
    "Each time you use the DailyPlanner tool, the planner can only access "
    "information queried during the previous 2 days. However, if the number "
    "of queries in the past 2 days is less than {min_pop}, then it will "
    "return the last {min_pop} queried pieces of information."
)


class MalformedToolCallError(Exception):
    pass


class StepFailure(Exception):
    """A thought could not be produced even after the retry."""


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: tuple[str, ...]

    def render(self) -> str:
        return f"{self.name}[{', '.join(self.args)}]"

    def normalized(self) -> tuple[str, tuple[str, ...]]:
        """Key for consecutive-repeat detection: whitespace-insensitive."""
        return self.name, tuple(" ".join(a.split()) for a in self.args)


_CALL_RE = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*\[")


def _extract_bracketed(text: str, open_index: int) -> str:
    depth = 0
    for i in range(open_index, len(text)):
        if text[i] == "[":
            depth += 1
        elif text[i] == "]":
            depth -= 1
            if depth == 0:
                return text[open_index + 1 : i]
    raise MalformedToolCallError("tool call bracket is never closed")


def parse_tool_call(text: str) -> ToolCall:
    """Extract one tool call from model output.

    Prose around the call is tolerated; the first call naming a known tool
    wins. DailyPlanner keeps its whole argument as one string, commas and
    all; every other tool takes a fixed number of comma-separated arguments.
    """
    matches = list(_CALL_RE.finditer(text))
    if not matches:
        raise MalformedToolCallError("no tool call of the form Tool[...] found")
    chosen = None
    for m in matches:
        if m.group(1) in TOOL_CATALOG:
            chosen = m
            break
    if chosen is None:
        raise MalformedToolCallError(f"unknown tool {matches[0].group(1)!r}")
    name = chosen.group(1)
    inner = _extract_bracketed(text, chosen.end() - 1)
    if name == "DailyPlanner":
        request = inner.strip()
        if not request:
            raise MalformedToolCallError("DailyPlanner needs a request text")
        return ToolCall(name, (request,))
    parts = [p.strip() for p in inner.split(",")]
    arity = TOOL_CATALOG[name][1]
    if len(parts) != arity or any(not p for p in parts):
        raise MalformedToolCallError(
            f"{name} takes {arity} argument(s), got {len([p for p in parts if p])}"
        )
    return ToolCall(name, tuple(parts))


# ---------------------------------------------------------------------------
# knowledge block (the notebook)


@dataclass(frozen=True)
class KnowledgeItem:
    item_id: int
    day_collected: int
    tool: str
    description: str
    lines: tuple[str, ...]


class KnowledgeBlock:
    """Append-only notebook of tool results with the pop-out rule.

    Reading never removes anything. For current day d the planner gets every
    item collected on day d or d-1; if those are fewer than `min_pop`, it
    gets the last `min_pop` items overall (or all items when fewer exist).
    """

    def __init__(self, min_pop: int = 5) -> None:
        if min_pop < 1:
            raise ValueError("min_pop must be positive")
        self.min_pop = min_pop
        self.items: list[KnowledgeItem] = []

    def write(self, lines: list[str], description: str, tool: str, current_day: int) -> str:
        """Store a tool result; returns the masked observation text."""
        stored = tuple(lines) if lines else ("no results",)
        item = KnowledgeItem(
            item_id=len(self.items) + 1,
            day_collected=current_day,
            tool=tool,
            description=description,
            lines=stored,
        )
        self.items.append(item)
        return MASK_NOTICE.format(description=description)

    def read(self, current_day: int) -> list[KnowledgeItem]:
        recent = [
            item
            for item in self.items
            if item.day_collected in (current_day, current_day - 1)
        ]
        if len(recent) >= self.min_pop:
            return recent
        take = min(self.min_pop, len(self.items))
        return self.items[-take:] if take else []


# ---------------------------------------------------------------------------
# strategy block


@dataclass
class Step:
    index: int
    thought: str
    call: ToolCall
    observation: str

    def render(self) -> str:
        return (
            f"Thought {self.index}: {self.thought}\n"
            f"Action {self.index}: {self.call.render()}\n"
            f"Observation {self.index}: {self.observation}"
        )


_LABEL_RE = re.compile(r"^\s*(?:Thought|Action)\s*\d*\s*:\s*", re.IGNORECASE)


def strip_step_label(text: str) -> str:
    """Drop a leading 'Thought 3:' / 'Action 2:' label if present."""
    return _LABEL_RE.sub("", text.strip(), count=1).strip()


@dataclass
class StrategyBlock:
    query: TravelQuery
    outline: Outline
    current_day: int = 1
    steps: list[Step] = field(default_factory=list)
    planner_notes: list[str] = field(default_factory=list)

    def add_step(self, step: Step) -> None:
        if step.index != len(self.steps) + 1:
            raise ValueError(f"step index {step.index} out of order")
        self.steps.append(step)

    def add_planner_notes(self, notes: tuple[str, ...]) -> None:
        for note in notes:
            if note not in self.planner_notes:
                self.planner_notes.append(note)

    def header(self) -> str:
        parts = [
            "Below is a preliminary outline of your trip, which can serve as "
            "a reference for collecting information:",
            "",
            self.outline.render(),
            "",
        ]
        if self.outline.transport_notes:
            parts.extend(self.outline.transport_notes)
            parts.append("")
        parts.extend(
            [
                "You now need to gather relevant information to specify the "
                f"travel plan for the {ordinal_word(self.current_day)} day.",
                "",
                daily_budget_line(self.query),
                "",
                hard_constraints_text(self.query),
            ]
        )
        if self.planner_notes:
            parts.append("")
            parts.append("Problems found in earlier drafts of the day plan:")
            parts.extend(f"- {note}" for note in self.planner_notes)
        return "\n".join(parts)

    def render(self) -> str:
        parts = [self.header()]
        for step in self.steps:
            parts.append("")
            parts.append(step.render())
        return "\n".join(parts) + "\n"

    def recent_steps(self, count: int) -> str:
        if not self.steps:
            return "(none yet)"
        return "\n\n".join(step.render() for step in self.steps[-count:])


# ---------------------------------------------------------------------------
# tool dispatch


def dispatch_tool(db: TravelDatabase, call: ToolCall) -> list[str]:
    """Run a search tool against the sandbox; one line per record."""
    if call.name == "FlightSearch":
        origin, dest, date_text = call.args
        try:
            when = parse_iso_date(date_text)
        except DomainError:
            return ["no results"]
        return [format_record(f) for f in db.flight_search(origin, dest, when)] or ["no results"]
    if call.name == "DistanceMatrix":
        origin, dest, mode = call.args
        mode = mode.strip().casefold()
        if mode not in TRANSPORT_MODES:
            return ["no results"]
        record = db.distance_matrix(origin, dest, mode)
        return [format_record(record)] if record else ["no results"]
    if call.name == "AccommodationSearch":
        return [format_record(a) for a in db.accommodation_search(call.args[0])] or ["no results"]
    if call.name == "RestaurantSearch":
        return [format_record(r) for r in db.restaurant_search(call.args[0])] or ["no results"]
    if call.name == "AttractionSearch":
        return [format_record(a) for a in db.attraction_search(call.args[0])] or ["no results"]
    if call.name == "CitySearch":
        return [f"City: {c}" for c in db.city_search(call.args[0])] or ["no results"]
    raise ValueError(f"not a dispatchable tool: {call.name}")


# ---------------------------------------------------------------------------
# the three agent steps


def thought_step(strategy: StrategyBlock, gateway: Gateway) -> str:
    bundle = {
        "strategy": strategy.render(),
        "day_ordinal": ordinal_word(strategy.current_day),
    }
    for attempt in range(2):
        try:
            text = gateway.ask(AgentRole.THOUGHT, render_prompt(AgentRole.THOUGHT, bundle))
            return strip_step_label(text)
        except EmptyResponseError:
            if attempt == 1:
                raise StepFailure("thought agent returned nothing twice") from None
    raise AssertionError("unreachable")


def tool_step(
    strategy: StrategyBlock, thought: str, gateway: Gateway, *, context_steps: int = 3
) -> ToolCall:
    bundle = {
        "query_text": strategy.query.text or "(no prose request)",
        "recent_steps": strategy.recent_steps(context_steps),
        "thought": thought,
    }
    try:
        text = gateway.ask(AgentRole.TOOL, render_prompt(AgentRole.TOOL, bundle))
    except EmptyResponseError:
        text = ""
    try:
        if not text:
            raise MalformedToolCallError("empty action")
        return parse_tool_call(strip_step_label(text))
    except MalformedToolCallError as exc:
        retry_bundle = dict(bundle)
        retry_bundle["feedback"] = (
            f"Your previous reply was rejected ({exc}). Reply with exactly one "
            "action line, e.g. Action 2: RestaurantSearch[Atlanta]."
        )
        try:
            text = gateway.ask(AgentRole.TOOL, render_prompt(AgentRole.TOOL, retry_bundle))
        except EmptyResponseError:
            raise MalformedToolCallError(f"{exc}; retry returned nothing") from None
        return parse_tool_call(strip_step_label(text))


def description_step(gateway: Gateway, call: ToolCall, lines: list[str]) -> str:
    bundle = {
        "tool": call.name,
        "args": ", ".join(call.args),
        "sample": "\n".join(lines[:3]),
    }
    try:
        text = gateway.ask(AgentRole.DESCRIPTION, render_prompt(AgentRole.DESCRIPTION, bundle))
        first = text.strip().splitlines()[0].strip().strip('"')
        if first:
            return first
    except EmptyResponseError:
        pass
    return f"Results of {call.render()}"


# ---------------------------------------------------------------------------
# the collection loop


@dataclass
class LoopResult:
    plan: TravelPlan | None
    failure: ErrorCode | None
    failure_detail: str
    steps_used: int
    strategy: StrategyBlock
    replans: list[ReplanSignal]
    candidate_sets: list[CandidateSet]
    events: list[dict]

    @property
    def delivered(self) -> bool:
        return self.plan is not None


def _post_plan_observation(
    raw_plan: str, strategy: StrategyBlock, next_day: int, min_pop: int
) -> str:
    return (
        "Travel Plan:\n\n"
        f"{raw_plan.strip()}\n\n"
        "Outline:\n\n"
        f"{strategy.outline.route.render()}\n\n"
        f"{daily_budget_line(strategy.query)}\n\n"
        "You should gather the necessary information to plan your trip for "
        f"the {ordinal_word(next_day)} day.\n\n"
        + POP_RULE_REMINDER.format(min_pop=min_pop)
    )


def run_collection_loop(
    query: TravelQuery,
    outline: Outline,
    db: TravelDatabase,
    gateway: Gateway,
    *,
    step_limit: int = 45,
    min_pop: int = 5,
    k_candidates: int = 3,
    tool_context_steps: int = 3,
    loop_threshold: int = 3,
    malformed_threshold: int = 3,
) -> LoopResult:
    """Drive the Thought/Tool loop until the plan is complete or the run dies."""
    strategy = StrategyBlock(query=query, outline=outline)
    notebook = KnowledgeBlock(min_pop=min_pop)
    replan_state = ReplanState()
    events: list[dict] = []
    replans: list[ReplanSignal] = []
    candidate_sets: list[CandidateSet] = []
    day_plans = []
    consec_key: tuple | None = None
    consec_count = 0
    malformed_count = 0
    steps_used = 0

    def fail(code: ErrorCode, detail: str) -> LoopResult:
        logger.info("run failed (%s): %s", code.value, detail)
        events.append({"event": "failure", "code": code.value, "detail": detail})
        return LoopResult(
            plan=None,
            failure=code,
            failure_detail=detail,
            steps_used=steps_used,
            strategy=strategy,
            replans=replans,
            candidate_sets=candidate_sets,
            events=events,
        )

    while steps_used < step_limit:
        steps_used += 1
        index = len(strategy.steps) + 1
        try:
            thought = thought_step(strategy, gateway)
        except StepFailure as exc:
            malformed_count += 1
            events.append({"event": "step_failed", "detail": str(exc)})
            if malformed_count >= malformed_threshold:
                return fail(ErrorCode.MALFORMED_TOOL_CALL, str(exc))
            continue
        try:
            call = tool_step(strategy, thought, gateway, context_steps=tool_context_steps)
        except MalformedToolCallError as exc:
            malformed_count += 1
            events.append({"event": "malformed_call", "detail": str(exc)})
            if malformed_count >= malformed_threshold:
                return fail(
                    ErrorCode.MALFORMED_TOOL_CALL,
                    f"{malformed_count} unusable tool calls; last: {exc}",
                )
            continue

        key = call.normalized()
        if key == consec_key:
            consec_count += 1
        else:
            consec_key, consec_count = key, 1
        if consec_count >= loop_threshold:
            return fail(
                ErrorCode.REPEATED_TOOL_LOOP,
                f"{call.render()} issued {consec_count} times in a row",
            )

        if call.name == "DailyPlanner":
            day = strategy.current_day
            items = notebook.read(day)
            outcome = daily_plan_step(
                day,
                items,
                strategy,
                query,
                db,
                gateway,
                replan_state,
                prior_days=tuple(day_plans),
                k=k_candidates,
            )
            candidate_sets.append(outcome.candidates)
            if outcome.replan is not None:
                replans.append(outcome.replan)
                strategy.add_planner_notes(outcome.replan.notes)
                events.append(
                    {"event": "replan", "day": day, "notes": list(outcome.replan.notes)}
                )
                observation = (
                    f"The draft plans for the {ordinal_word(day)} day had problems:\n"
                    + "\n".join(f"- {note}" for note in outcome.replan.notes)
                    + "\nCollect the missing or corrected information, then use DailyPlanner again."
                )
                strategy.add_step(Step(index, thought, call, observation))
                continue
            if outcome.plan is None:
                return fail(ErrorCode.DAY_PLAN_FAILED, outcome.detail)
            day_plans.append(outcome.plan)
            events.append(
                {
                    "event": "day_planned",
                    "day": day,
                    "chosen_candidate": outcome.candidates.chosen,
                }
            )
            if day == query.duration_days:
                observation = (
                    f"Travel Plan:\n\n{outcome.raw_text.strip()}\n\n"
                    "The plan now covers every day of the trip."
                )
                strategy.add_step(Step(index, thought, call, observation))
                plan = TravelPlan(query_id=query.query_id, days=tuple(day_plans))
                events.append({"event": "delivered", "steps_used": steps_used})
                return LoopResult(
                    plan=plan,
                    failure=None,
                    failure_detail="",
                    steps_used=steps_used,
                    strategy=strategy,
                    replans=replans,
                    candidate_sets=candidate_sets,
                    events=events,
                )
            observation = _post_plan_observation(
                outcome.raw_text, strategy, next_day=day + 1, min_pop=min_pop
            )
            strategy.add_step(Step(index, thought, call, observation))
            strategy.current_day = day + 1
            continue

        lines = dispatch_tool(db, call)
        description = description_step(gateway, call, lines)
        observation = notebook.write(lines, description, call.name, strategy.current_day)
        strategy.add_step(Step(index, thought, call, observation))
        events.append({"event": "step", "index": index, "tool": call.render()})

    return fail(
        ErrorCode.STEP_LIMIT_EXCEEDED,
        f"no complete plan within the {step_limit}-step budget",
    )
