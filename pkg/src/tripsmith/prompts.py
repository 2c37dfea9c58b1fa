"""Prompt construction for every agent role.

`render_prompt` is a pure function from (role, bundle) to chat messages, so
recorded transcripts stay replayable: same bundle, same bytes.
"""

from __future__ import annotations

from collections.abc import Mapping

from .gateway import AgentRole, ChatMessage

# name -> (signature, arity, blurb). DailyPlanner takes one free-text
# argument; its commas are not separators.
TOOL_CATALOG: dict[str, tuple[str, int, str]] = {
    "FlightSearch": (
        "FlightSearch[origin city, destination city, date]",
        3,
        "flights between two cities on a YYYY-MM-DD date",
    ),
    "DistanceMatrix": (
        "DistanceMatrix[origin city, destination city, mode]",
        3,
        "distance, duration, and cost for mode 'self-driving' or 'taxi'",
    ),
    "AccommodationSearch": (
        "AccommodationSearch[city]",
        1,
        "places to stay in a city",
    ),
    "RestaurantSearch": (
        "RestaurantSearch[city]",
        1,
        "places to eat in a city",
    ),
    "AttractionSearch": (
        "AttractionSearch[city]",
        1,
        "attractions in a city",
    ),
    "CitySearch": (
        "CitySearch[state]",
        1,
        "cities located in a state",
    ),
    "DailyPlanner": (
        "DailyPlanner[natural-language request for the day plan]",
        1,
        "drafts the plan for the current day from the notebook contents",
    ),
}


class PromptError(Exception):
    """A prompt bundle is missing a required field."""


def _need(bundle: Mapping[str, str], role: AgentRole, key: str) -> str:
    try:
        return bundle[key]
    except KeyError:
        raise PromptError(f"{role.value} prompt bundle missing field {key!r}") from None


def _tool_document() -> str:
    lines = ["You can call exactly one of these tools per step:"]
    for name, (signature, _arity, blurb) in TOOL_CATALOG.items():
        lines.append(f"- {signature}: {blurb}")
    return "\n".join(lines)


def render_prompt(role: AgentRole, bundle: Mapping[str, str]) -> tuple[ChatMessage, ...]:
    """Build the message list for one agent call."""
    if role is AgentRole.PATH_FINDER:
        system = (
            "You draft day-by-day travel routes. Respond with exactly one line per "
            "day and nothing else, numbered with ordinal words, in these forms:\n"
            "The First Day: from <origin city> to <destination city>. Exploring <destination city>.\n"
            "The Second Day: Exploring <city>.\n"
            "Travel days use 'from <city> to <city>.'; stay days use 'Exploring <city>.'. "
            "The final day must return to the origin city."
        )
        user = (
            f"Travel request: {_need(bundle, role, 'query_text')}\n"
            f"Origin city: {_need(bundle, role, 'origin')}\n"
            f"Destination: {_need(bundle, role, 'destination')}\n"
            f"Dates: {_need(bundle, role, 'dates')} ({_need(bundle, role, 'duration')} days)\n"
            "Draft the route."
        )
        if bundle.get("feedback"):
            user += f"\n\nYour previous route could not be carried out:\n{bundle['feedback']}\nDraft a corrected route."
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.KEYPOINTS:
        system = (
            "You extract the key points of a travel request as a numbered list, one "
            "requirement per line. Always restate the travel dates and the exact "
            "budget amount; include party size and every stated preference."
        )
        user = (
            f"Travel request: {_need(bundle, role, 'query_text')}\n"
            f"Dates: {_need(bundle, role, 'dates')}\n"
            f"Budget: {_need(bundle, role, 'budget')}\n"
            f"Party: {_need(bundle, role, 'party')}\n"
            "List the key points."
        )
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.COMMONSENSE:
        # deliberately query-free: these guides are reusable across a corpus
        system = (
            "You write universal travel-planning guidelines as a numbered list. "
            "State rules that hold for any trip, such as booking lodging for every "
            "night with no gaps or overlaps, keeping meals and attractions in the "
            "city the traveller is in, and not repeating restaurants or attractions. "
            "Never mention a specific city, date, person, or price."
        )
        user = "List the guidelines."
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.THOUGHT:
        system = (
            "You are gathering travel information step by step with tools. Given "
            "the working notes below, state the single next thought: what "
            "information to collect next and why, in one short paragraph starting "
            "with 'Thought <n>:'. When the current day's information is complete, "
            "the next thought should hand off to the daily planner."
        )
        user = (
            f"{_need(bundle, role, 'strategy')}\n\n"
            "You should gather the necessary information to plan your trip for "
            f"the {_need(bundle, role, 'day_ordinal')} day.\n"
            "State the next thought."
        )
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.TOOL:
        system = (
            f"{_tool_document()}\n"
            "Respond with exactly one action line in the form "
            "'Action <n>: ToolName[argument, argument, ...]' and nothing else."
        )
        user = (
            f"Travel request: {_need(bundle, role, 'query_text')}\n\n"
            f"Recent steps:\n{_need(bundle, role, 'recent_steps')}\n\n"
            f"Latest thought:\n{_need(bundle, role, 'thought')}\n\n"
            "Emit the action line for this thought."
        )
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.DESCRIPTION:
        system = (
            "Summarize what a tool call returned as one short title line naming "
            "the subject, e.g. 'Flight Information for A to B on March 4, 2022'. "
            "No extra commentary."
        )
        user = (
            f"Tool: {_need(bundle, role, 'tool')}\n"
            f"Arguments: {_need(bundle, role, 'args')}\n"
            f"First lines of the result:\n{_need(bundle, role, 'sample')}\n"
            "Write the title line."
        )
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.PLAN:
        system = (
            "You write the travel plan for one specific day, using only the "
            "collected information given to you, copied verbatim (names, numbers, "
            "prices). Cover: Current City (write 'from A to B' on travel days), "
            "Transportation (flight number with departure and arrival times, or "
            "'Self-driving'/'Taxi' with the route), Breakfast, Lunch, Dinner, "
            "Attraction (each as 'Name, City'), and Accommodation ('Name, City'). "
            "Write '-' for anything that does not apply. Stay within budget."
        )
        user = (
            f"Plan the {_need(bundle, role, 'day_ordinal')} day "
            f"({_need(bundle, role, 'date')}) of the trip.\n\n"
            f"Route outline:\n{_need(bundle, role, 'outline')}\n\n"
            f"{_need(bundle, role, 'budget_line')}\n"
            f"{_need(bundle, role, 'constraints')}\n\n"
            f"Collected information:\n{_need(bundle, role, 'knowledge')}\n\n"
            "Write the plan for this day."
        )
        return (ChatMessage("system", system), ChatMessage("user", user))

    if role is AgentRole.EVALUATE:
        system = (
            "Convert a one-day travel plan draft into JSON. Respond with a JSON "
            "array holding exactly one object with exactly these keys: day, "
            "current_city, transportation, breakfast, attraction, lunch, dinner, "
            "accommodation. 'day' is an integer; every other value is a string; "
            "use '-' for anything absent. Multiple attractions are joined with "
            "';'. Output only the JSON."
        )
        user = (
            f"Day number: {_need(bundle, role, 'day')}\n"
            f"Draft:\n{_need(bundle, role, 'draft')}"
        )
        if bundle.get("error"):
            user += (
                f"\n\nYour previous conversion was rejected: {bundle['error']}\n"
                "Emit corrected JSON."
            )
        return (ChatMessage("system", system), ChatMessage("user", user))

    raise PromptError(f"no prompt defined for role {role!r}")
