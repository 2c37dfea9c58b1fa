"""The Thought/Tool/Description loop, notebook, and strategy block."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from tripsmith.collect import (
    MASK_NOTICE,
    KnowledgeBlock,
    MalformedToolCallError,
    Step,
    StepFailure,
    StrategyBlock,
    ToolCall,
    description_step,
    dispatch_tool,
    parse_tool_call,
    run_collection_loop,
    strip_step_label,
    thought_step,
    tool_step,
)
from tripsmith.domain import ErrorCode, format_record
from tripsmith.gateway import Gateway
from tripsmith.outline import Outline, parse_route

import scripted
from oracles import pop_oracle
from scripted import ScriptedBackend


def _outline(db, route_text=None) -> Outline:
    return Outline(
        route=parse_route(route_text or scripted.ROUTE_HNL, db),
        keypoints=("Budget is $3,200.", "Dates: 2022-03-04 to 2022-03-06."),
        guides=scripted.GUIDE_LINES,
        transport_notes=(),
    )


# ---------------------------------------------------------------------------
# tool-call parsing


def test_parse_tool_call_tolerates_prose():
    call = parse_tool_call("I will call FlightSearch[Ontario, Honolulu, 2022-03-04] now.")
    assert call == ToolCall("FlightSearch", ("Ontario", "Honolulu", "2022-03-04"))
    assert call.render() == "FlightSearch[Ontario, Honolulu, 2022-03-04]"


def test_parse_tool_call_daily_planner_keeps_commas():
    call = parse_tool_call(
        "DailyPlanner[Craft the plan for day 1: flight, lunch, dinner, and lodging]"
    )
    assert call.name == "DailyPlanner"
    assert call.args == ("Craft the plan for day 1: flight, lunch, dinner, and lodging",)


def test_parse_tool_call_nested_brackets():
    call = parse_tool_call("DailyPlanner[use items [3] and [4] from the notebook]")
    assert call.args == ("use items [3] and [4] from the notebook",)


def test_parse_tool_call_first_known_tool_wins():
    call = parse_tool_call("Notes[skip me] then RestaurantSearch[Atlanta]")
    assert call == ToolCall("RestaurantSearch", ("Atlanta",))


@pytest.mark.parametrize(
    "text, message",
    [
        ("nothing to see here", "no tool call"),
        ("HotelSearch[Atlanta]", "unknown tool 'HotelSearch'"),
        ("FlightSearch[Ontario, Honolulu]", "takes 3 argument\\(s\\), got 2"),
        ("CitySearch[  ]", "takes 1 argument\\(s\\), got 0"),
        ("AttractionSearch[Atlanta", "never closed"),
        ("DailyPlanner[  ]", "needs a request text"),
    ],
)
def test_parse_tool_call_rejections(text, message):
    with pytest.raises(MalformedToolCallError, match=message):
        parse_tool_call(text)


def test_normalized_ignores_whitespace_runs():
    a = ToolCall("FlightSearch", ("Ontario", "Honolulu ", " 2022-03-04"))
    b = ToolCall("FlightSearch", ("Ontario", "Honolulu", "2022-03-04"))
    assert a.normalized() == b.normalized()
    assert a.normalized() != ToolCall("FlightSearch", ("Ontario", "Buffalo", "2022-03-04")).normalized()


def test_strip_step_label():
    assert strip_step_label("Thought 3: I should check flights.") == "I should check flights."
    assert strip_step_label("Action 2: CitySearch[Georgia]") == "CitySearch[Georgia]"
    assert strip_step_label("plain text") == "plain text"
    assert strip_step_label("Thought: Thought 1: nested") == "Thought 1: nested"


# ---------------------------------------------------------------------------
# the notebook and its pop-out rule


def test_notebook_write_masks_and_stores():
    notebook = KnowledgeBlock()
    observation = notebook.write(["line 1", "line 2"], "Flights to Honolulu", "FlightSearch", 1)
    assert observation == MASK_NOTICE.format(description="Flights to Honolulu")
    assert notebook.items[0].lines == ("line 1", "line 2")
    assert notebook.items[0].item_id == 1

    empty = notebook.write([], "Nothing found", "FlightSearch", 1)
    assert notebook.items[1].lines == ("no results",)
    assert "Nothing found" in empty


def test_notebook_rejects_bad_min_pop():
    with pytest.raises(ValueError):
        KnowledgeBlock(min_pop=0)


def _fill(notebook: KnowledgeBlock, days: list[int]) -> None:
    for i, day in enumerate(days):
        notebook.write([f"r{i}"], f"d{i}", "AttractionSearch", day)


def test_pop_rule_worked_examples():
    # enough recent items: the planner sees exactly the last two days
    notebook = KnowledgeBlock(min_pop=5)
    _fill(notebook, [1, 1, 2, 2, 2])
    assert [i.item_id for i in notebook.read(2)] == [1, 2, 3, 4, 5]

    # nothing recent and a short notebook: everything comes back
    notebook = KnowledgeBlock(min_pop=5)
    _fill(notebook, [1, 1, 1])
    assert [i.item_id for i in notebook.read(3)] == [1, 2, 3]

    # nothing recent in a long notebook: the last five overall
    notebook = KnowledgeBlock(min_pop=5)
    _fill(notebook, [1, 1, 1, 1, 1, 1, 2, 2])
    assert [i.item_id for i in notebook.read(4)] == [4, 5, 6, 7, 8]


@given(
    days=st.lists(st.integers(min_value=1, max_value=7), min_size=0, max_size=30),
    current_day=st.integers(min_value=1, max_value=7),
    min_pop=st.integers(min_value=1, max_value=8),
)
def test_pop_rule_matches_oracle(days, current_day, min_pop):
    days = sorted(days)
    notebook = KnowledgeBlock(min_pop=min_pop)
    _fill(notebook, days)
    assert notebook.read(current_day) == pop_oracle(notebook.items, current_day, min_pop)


# ---------------------------------------------------------------------------
# strategy block


def test_strategy_header_day_and_budget(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    header = strategy.header()
    assert header.startswith(
        "Below is a preliminary outline of your trip, which can serve as a "
        "reference for collecting information:"
    )
    assert scripted.ROUTE_HNL in header
    assert "travel plan for the First day." in header
    assert "do not exceed 1066." in header
    assert "Hard Constraints." in header

    strategy.current_day = 2
    assert "travel plan for the Second day." in strategy.header()


def test_strategy_header_transport_notes_and_planner_notes(db, queries):
    outline = Outline(
        route=parse_route(scripted.ROUTE_HNL, db),
        keypoints=("k",),
        guides=("g",),
        transport_notes=("day 1 (Ontario to Honolulu): travel by flight only",),
    )
    strategy = StrategyBlock(query=queries["hnl-001"], outline=outline)
    assert "travel by flight only" in strategy.header()

    strategy.add_planner_notes(("the flight number was not found", "too expensive"))
    strategy.add_planner_notes(("the flight number was not found",))  # deduplicated
    header = strategy.header()
    assert header.count("the flight number was not found") == 1
    assert "Problems found in earlier drafts of the day plan:" in header


def test_strategy_steps_render_in_order(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    call = ToolCall("AttractionSearch", ("Honolulu",))
    strategy.add_step(Step(1, "find sights", call, "masked"))
    with pytest.raises(ValueError, match="out of order"):
        strategy.add_step(Step(3, "skip ahead", call, "masked"))
    strategy.add_step(Step(2, "next", call, "masked"))

    text = strategy.render()
    assert "Thought 1: find sights" in text
    assert "Action 2: AttractionSearch[Honolulu]" in text
    assert text.endswith("\n")
    assert strategy.recent_steps(1).startswith("Thought 2:")


def test_recent_steps_empty_placeholder(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    assert strategy.recent_steps(3) == "(none yet)"


# ---------------------------------------------------------------------------
# tool dispatch


def test_dispatch_flight_search(db):
    lines = dispatch_tool(db, ToolCall("FlightSearch", ("Ontario", "Honolulu", "2022-03-04")))
    assert lines == [format_record(f) for f in db.flight_search("Ontario", "Honolulu", "2022-03-04")]
    assert lines[0].startswith("Flight Number: F3584294;")


def test_dispatch_handles_unusable_arguments(db):
    assert dispatch_tool(db, ToolCall("FlightSearch", ("Ontario", "Honolulu", "tomorrow"))) == ["no results"]
    assert dispatch_tool(db, ToolCall("DistanceMatrix", ("Atlanta", "Savannah", "rickshaw"))) == ["no results"]
    assert dispatch_tool(db, ToolCall("RestaurantSearch", ("Gotham",))) == ["no results"]


def test_dispatch_city_search_and_distance(db):
    assert dispatch_tool(db, ToolCall("CitySearch", ("Georgia",))) == [
        "City: Atlanta",
        "City: Savannah",
    ]
    lines = dispatch_tool(db, ToolCall("DistanceMatrix", ("Buffalo", "Atlanta", "taxi")))
    assert len(lines) == 1 and lines[0].startswith("Mode: taxi;")


def test_dispatch_rejects_planner_calls(db):
    with pytest.raises(ValueError, match="not a dispatchable tool"):
        dispatch_tool(db, ToolCall("DailyPlanner", ("plan day 1",)))


# ---------------------------------------------------------------------------
# individual agent steps


def test_thought_step_strips_label(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    gateway = Gateway(ScriptedBackend({"Thought": ["Thought 1: Look for flights."]}))
    assert thought_step(strategy, gateway) == "Look for flights."


def test_thought_step_fails_after_two_blanks(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    gateway = Gateway(ScriptedBackend({"Thought": ["  ", "  "]}))
    with pytest.raises(StepFailure):
        thought_step(strategy, gateway)


def test_tool_step_reprompts_once(db, queries):
    strategy = StrategyBlock(query=queries["hnl-001"], outline=_outline(db))
    gateway = Gateway(ScriptedBackend({"Tool": ["just pondering", "Action 1: CitySearch[Georgia]"]}))
    call = tool_step(strategy, "find cities", gateway)
    assert call == ToolCall("CitySearch", ("Georgia",))
    assert gateway.request_log == [("Tool", 0.0), ("Tool", 0.0)]

    hopeless = Gateway(ScriptedBackend({"Tool": ["nope", "still nope"]}))
    with pytest.raises(MalformedToolCallError):
        tool_step(strategy, "find cities", hopeless)


def test_description_step_first_line_or_fallback(db):
    call = ToolCall("CitySearch", ("Georgia",))
    gateway = Gateway(ScriptedBackend({"Description": ['"Cities of Georgia"\nextra line']}))
    assert description_step(gateway, call, ["City: Atlanta"]) == "Cities of Georgia"

    blank = Gateway(ScriptedBackend({"Description": ["   "]}))
    assert description_step(blank, call, ["City: Atlanta"]) == "Results of CitySearch[Georgia]"


# ---------------------------------------------------------------------------
# loop failure accounting


def test_loop_gives_up_after_three_malformed_calls(db, queries):
    gateway = Gateway(
        ScriptedBackend(
            {
                "Thought": ["try one", "try two", "try three"],
                "Tool": ["???"] * 6,
            }
        )
    )
    result = run_collection_loop(queries["hnl-001"], _outline(db), db, gateway)
    assert not result.delivered
    assert result.failure is ErrorCode.MALFORMED_TOOL_CALL
    assert "3 unusable tool calls" in result.failure_detail
    assert result.steps_used == 3


def test_loop_counts_blank_thoughts_toward_malformed(db, queries):
    gateway = Gateway(ScriptedBackend({"Thought": ["  "] * 6}))
    result = run_collection_loop(queries["hnl-001"], _outline(db), db, gateway)
    assert result.failure is ErrorCode.MALFORMED_TOOL_CALL
    assert "returned nothing twice" in result.failure_detail


def test_loop_detects_repeated_calls_before_dispatch(db, queries):
    script = scripted.loop_script()
    gateway = Gateway(ScriptedBackend({k: v for k, v in script.items() if k in ("Thought", "Tool", "Description")}))
    result = run_collection_loop(queries["atl-002"], _outline(db, scripted.ROUTE_ATL), db, gateway)
    assert result.failure is ErrorCode.REPEATED_TOOL_LOOP
    assert "AccommodationSearch[Atlanta] issued 3 times in a row" in result.failure_detail
    assert result.steps_used == 3
    # the third, loop-breaking call never reached the notebook
    assert len(result.strategy.steps) == 2


# ---------------------------------------------------------------------------
# what the agent-facing transcript may contain


def test_transcript_masks_raw_records(golden_hnl):
    text = (golden_hnl.run_dir / "transcript.log").read_text(encoding="utf-8")
    assert "Masked due to limited length." in text
    # raw notebook lines stay out of the agent-facing history
    assert "; DepTime:" not in text
    assert "review rate number:" not in text
    assert "Average Cost:" not in text


def test_transcript_repeats_pop_rule_between_days(golden_hnl):
    text = (golden_hnl.run_dir / "transcript.log").read_text(encoding="utf-8")
    assert "the planner can only access information queried during the previous 2 days" in text
    assert "return the last 5 queried pieces of information" in text
    assert "You should gather the necessary information to plan your trip for the Second day." in text
