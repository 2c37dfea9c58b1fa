"""Outline generation: route drafting, transportation feasibility, key points.

The route is drafted by the PathFinder role, checked against the sandbox's
transportation data, and redrafted with feedback when a leg cannot be
travelled. Key points and the reusable planning guides round out the outline
that seeds the information-collection phase.
"""

from __future__ import annotations

import datetime as dt
import logging
import re
import threading
from dataclasses import dataclass
from enum import Enum

from .domain import TransportBan, TravelQuery, format_money, ordinal_word, prose_date
from .gateway import AgentRole, EmptyResponseError, Gateway
from .prompts import render_prompt
from .sandbox import TravelDatabase

logger = logging.getLogger(__name__)


class OutlineError(Exception):
    """Outline generation failed for good (retries exhausted)."""


class RouteGrammarError(OutlineError):
    """A drafted route does not parse or contradicts the trip shape."""


class KeypointsError(OutlineError):
    pass


@dataclass(frozen=True)
class DayEntry:
    """One route line: either a travel day (from/to set) or a stay day."""

    day: int
    from_city: str | None
    to_city: str | None
    city: str  # where the traveller spends this day
    note: str = ""

    @property
    def is_transfer(self) -> bool:
        return self.from_city is not None

    def render(self) -> str:
        prefix = f"The {ordinal_word(self.day)} Day:"
        if self.is_transfer:
            line = f"{prefix} from {self.from_city} to {self.to_city}."
            if self.note:
                line += f" {self.note}"
            return line
        return f"{prefix} Exploring {self.city}."


@dataclass(frozen=True)
class RouteSkeleton:
    entries: tuple[DayEntry, ...]

    def render(self) -> str:
        return "\n".join(entry.render() for entry in self.entries)

    def transfers(self) -> tuple[DayEntry, ...]:
        return tuple(e for e in self.entries if e.is_transfer)

    def visited_cities(self) -> tuple[str, ...]:
        """Distinct day cities in visiting order (the origin included if revisited)."""
        seen: list[str] = []
        for entry in self.entries:
            if entry.city not in seen:
                seen.append(entry.city)
        return tuple(seen)


_LINE_RE = re.compile(r"^The\s+(\w+)\s+Day:\s*(.+)$")
_TRANSFER_RE = re.compile(r"^from\s+(.+?)\s+to\s+(.+?)\.(?:\s+(.*))?$")
_STAY_RE = re.compile(r"^Exploring\s+(.+?)\.$")


def parse_route(text: str, db: TravelDatabase) -> RouteSkeleton:
    """Parse PathFinder output into a route skeleton.

    City names are matched against the sandbox case-insensitively and
    canonicalized to the data-file spelling. Raises RouteGrammarError with a
    message suitable as redraft feedback.
    """
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise RouteGrammarError("the route is empty")
    entries: list[DayEntry] = []
    for position, line in enumerate(lines, start=1):
        m = _LINE_RE.match(line)
        if not m:
            raise RouteGrammarError(
                f"line {position} does not follow 'The <Ordinal> Day: ...': {line!r}"
            )
        expected = ordinal_word(position) if position <= 7 else None
        if m.group(1) != expected:
            raise RouteGrammarError(
                f"line {position} should be numbered 'The {expected} Day', got 'The {m.group(1)} Day'"
            )
        body = m.group(2).strip()
        transfer = _TRANSFER_RE.match(body)
        if transfer:
            from_city = _canonical(transfer.group(1), db, position)
            to_city = _canonical(transfer.group(2), db, position)
            entries.append(
                DayEntry(
                    day=position,
                    from_city=from_city,
                    to_city=to_city,
                    city=to_city,
                    note=(transfer.group(3) or "").strip(),
                )
            )
            continue
        stay = _STAY_RE.match(body)
        if stay:
            city = _canonical(stay.group(1), db, position)
            entries.append(DayEntry(day=position, from_city=None, to_city=None, city=city))
            continue
        raise RouteGrammarError(
            f"day {position} must read 'from A to B.' or 'Exploring C.', got {body!r}"
        )
    return RouteSkeleton(entries=tuple(entries))


def _canonical(name: str, db: TravelDatabase, day: int) -> str:
    found = db.canonical_city(name.strip())
    if found is None:
        raise RouteGrammarError(f"day {day} names a city not in the travel database: {name.strip()!r}")
    return found


def validate_route(route: RouteSkeleton, query: TravelQuery, db: TravelDatabase) -> None:
    """Check a parsed route against the trip shape. Raises RouteGrammarError."""
    entries = route.entries
    if len(entries) != query.duration_days:
        raise RouteGrammarError(
            f"the trip lasts {query.duration_days} days but the route has {len(entries)} lines"
        )
    origin = db.canonical_city(query.origin_city)
    if origin is None:
        raise OutlineError(f"origin city not in the travel database: {query.origin_city!r}")
    first = entries[0]
    if not first.is_transfer or first.from_city != origin:
        raise RouteGrammarError(f"day 1 must travel out of {origin}")
    last = entries[-1]
    if not last.is_transfer or last.to_city != origin:
        raise RouteGrammarError(f"the last day must return to {origin}")
    # the day-to-day chain must be consistent
    for prev, entry in zip(entries, entries[1:]):
        if entry.is_transfer:
            if entry.from_city != prev.city:
                raise RouteGrammarError(
                    f"day {entry.day} departs {entry.from_city} but day {prev.day} ends in {prev.city}"
                )
        elif entry.city != prev.city:
            raise RouteGrammarError(
                f"day {entry.day} explores {entry.city} but day {prev.day} ends in {prev.city}"
            )
    visited = [c for c in route.visited_cities() if c != origin]
    scope = query.scope
    if scope.city is not None:
        want = db.canonical_city(scope.city)
        if want is None:
            raise OutlineError(f"destination city not in the travel database: {scope.city!r}")
        if visited != [want]:
            raise RouteGrammarError(f"the route must visit exactly {want}, got {visited}")
    else:
        state_cities = set(db.city_search(scope.state or ""))
        if not state_cities:
            raise OutlineError(f"no cities on file for state {scope.state!r}")
        if len(visited) != scope.city_count:
            raise RouteGrammarError(
                f"the route must visit {scope.city_count} cities in {scope.state}, got {len(visited)}"
            )
        stray = [c for c in visited if c not in state_cities]
        if stray:
            raise RouteGrammarError(f"these cities are not in {scope.state}: {stray}")


# ---------------------------------------------------------------------------
# transportation feasibility


class LegFeasibility(Enum):
    OK = "ok"
    FLIGHT_ONLY = "flight-only"
    DRIVE_ONLY = "drive-only"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LegStatus:
    day: int
    from_city: str
    to_city: str
    date: dt.date
    status: LegFeasibility
    note: str


@dataclass(frozen=True)
class FeasibilityVerdict:
    legs: tuple[LegStatus, ...]

    @property
    def feasible(self) -> bool:
        return all(leg.status is not LegFeasibility.INFEASIBLE for leg in self.legs)

    def feedback(self) -> str:
        return "\n".join(leg.note for leg in self.legs if leg.status is LegFeasibility.INFEASIBLE)

    def transport_notes(self) -> tuple[str, ...]:
        return tuple(
            leg.note
            for leg in self.legs
            if leg.status in (LegFeasibility.FLIGHT_ONLY, LegFeasibility.DRIVE_ONLY)
        )


def evaluate_transportation(
    route: RouteSkeleton, query: TravelQuery, db: TravelDatabase
) -> FeasibilityVerdict:
    """Check every travel leg against the sandbox's flights and distances."""
    ban = query.hard_constraints.transportation
    legs: list[LegStatus] = []
    for entry in route.transfers():
        assert entry.from_city and entry.to_city
        when = query.date_for_day(entry.day)
        flights = db.flight_search(entry.from_city, entry.to_city, when)
        flight_ok = bool(flights) and ban is not TransportBan.NO_FLIGHT
        self_drive = db.distance_matrix(entry.from_city, entry.to_city, "self-driving")
        taxi = db.distance_matrix(entry.from_city, entry.to_city, "taxi")
        ground_ok = (self_drive is not None and ban is not TransportBan.NO_SELF_DRIVING) or (
            taxi is not None
        )
        leg_name = f"day {entry.day} ({entry.from_city} to {entry.to_city})"
        if flight_ok and ground_ok:
            status, note = LegFeasibility.OK, ""
        elif flight_ok:
            status = LegFeasibility.FLIGHT_ONLY
            status_note = "no usable ground route" if ban is not TransportBan.NO_SELF_DRIVING else "self-driving is ruled out and no taxi route exists"
            note = f"{leg_name}: travel by flight only ({status_note})"
        elif ground_ok:
            status = LegFeasibility.DRIVE_ONLY
            status_note = (
                "flights are ruled out by the request"
                if ban is TransportBan.NO_FLIGHT and flights
                else f"no flights on {when.isoformat()}"
            )
            note = f"{leg_name}: travel by ground only ({status_note})"
        else:
            status = LegFeasibility.INFEASIBLE
            note = (
                f"{leg_name}: no way to travel this leg on {when.isoformat()}; "
                "choose a different city or reorder the days"
            )
        legs.append(
            LegStatus(
                day=entry.day,
                from_city=entry.from_city,
                to_city=entry.to_city,
                date=when,
                status=status,
                note=note,
            )
        )
    return FeasibilityVerdict(legs=tuple(legs))


# ---------------------------------------------------------------------------
# model-facing operations


def _route_bundle(query: TravelQuery, feedback: str | None) -> dict[str, str]:
    bundle = {
        "query_text": query.text or "(no prose request)",
        "origin": query.origin_city,
        "destination": query.scope.describe(),
        "dates": f"{query.start_date.isoformat()} to {query.end_date.isoformat()}",
        "duration": str(query.duration_days),
    }
    if feedback:
        bundle["feedback"] = feedback
    return bundle


def generate_route(
    query: TravelQuery, gateway: Gateway, db: TravelDatabase, feedback: str | None = None
) -> RouteSkeleton:
    """One PathFinder attempt: draft, parse, and shape-check a route."""
    text = gateway.ask(AgentRole.PATH_FINDER, render_prompt(AgentRole.PATH_FINDER, _route_bundle(query, feedback)))
    route = parse_route(text, db)
    validate_route(route, query, db)
    return route


_NUMBERED_RE = re.compile(r"^\s*(?:\d+[.):]|[-*])\s*(.+)$")


def _split_listing(text: str) -> tuple[str, ...]:
    items: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        m = _NUMBERED_RE.match(line)
        items.append(m.group(1).strip() if m else line)
    return tuple(items)


def mentions_budget(text: str, budget_cents: int) -> bool:
    dollars = format_money(budget_cents)
    with_commas = f"{budget_cents // 100:,}" if budget_cents % 100 == 0 else dollars
    return dollars in text or with_commas in text


def mentions_date(text: str, day: dt.date) -> bool:
    return day.isoformat() in text or prose_date(day) in text


def generate_keypoints(query: TravelQuery, gateway: Gateway) -> tuple[str, ...]:
    """Extract the query's key points; one retry if the list is unusable."""
    budget = f"${query.budget_cents // 100:,}" if query.budget_cents % 100 == 0 else f"${format_money(query.budget_cents)}"
    party = "1 person" if query.party_size == 1 else f"{query.party_size} people"
    bundle = {
        "query_text": query.text or "(no prose request)",
        "dates": f"{query.start_date.isoformat()} to {query.end_date.isoformat()}",
        "budget": budget,
        "party": party,
    }
    last_problem = ""
    for _ in range(2):
        try:
            text = gateway.ask(AgentRole.KEYPOINTS, render_prompt(AgentRole.KEYPOINTS, bundle))
        except EmptyResponseError:
            last_problem = "empty response"
            continue
        points = _split_listing(text)
        joined = "\n".join(points)
        if not points:
            last_problem = "no list items found"
            continue
        if not mentions_budget(joined, query.budget_cents):
            last_problem = "the budget amount is missing"
            continue
        if not (mentions_date(joined, query.start_date) and mentions_date(joined, query.end_date)):
            last_problem = "the travel dates are missing"
            continue
        return points
    raise KeypointsError(f"key points unusable after retry: {last_problem}")


def generate_guides(gateway: Gateway) -> tuple[str, ...]:
    """Query-independent planning guidelines; one retry on an empty answer."""
    for _ in range(2):
        try:
            text = gateway.ask(AgentRole.COMMONSENSE, render_prompt(AgentRole.COMMONSENSE, {}))
        except EmptyResponseError:
            continue
        guides = _split_listing(text)
        if guides:
            return guides
    raise OutlineError("planning guides unusable after retry")


def scan_guides(guides: tuple[str, ...], cities: tuple[str, ...]) -> list[str]:
    """Warn about guides that leak trip-specific details (cities, dates, prices)."""
    warnings: list[str] = []
    city_patterns = [(c, re.compile(rf"\b{re.escape(c)}\b", re.IGNORECASE)) for c in cities]
    date_pattern = re.compile(r"\b\d{4}-\d{2}-\d{2}\b")
    price_pattern = re.compile(r"\$\d")
    for i, guide in enumerate(guides, start=1):
        for city, pattern in city_patterns:
            if pattern.search(guide):
                warnings.append(f"guide {i} names the city {city!r}")
        if date_pattern.search(guide):
            warnings.append(f"guide {i} contains a calendar date")
        if price_pattern.search(guide):
            warnings.append(f"guide {i} contains a price")
    return warnings


class GuidesCache:
    """Generates the planning guides once and shares them across queries."""

    def __init__(self) -> None:
        self._guides: tuple[str, ...] | None = None
        self._lock = threading.Lock()

    def get(self, gateway: Gateway) -> tuple[str, ...]:
        with self._lock:
            if self._guides is None:
                self._guides = generate_guides(gateway)
            return self._guides

    def prime(self, guides: tuple[str, ...]) -> None:
        with self._lock:
            self._guides = guides


# ---------------------------------------------------------------------------
# the outline itself


@dataclass(frozen=True)
class Outline:
    route: RouteSkeleton
    keypoints: tuple[str, ...]
    guides: tuple[str, ...]
    transport_notes: tuple[str, ...]
    route_attempts: int = 1

    def render(self) -> str:
        """Route lines, then numbered key points, then numbered guides."""
        parts = [self.route.render(), ""]
        parts.extend(f"{i}. {point}" for i, point in enumerate(self.keypoints, start=1))
        parts.append("")
        parts.extend(f"{i}. {guide}" for i, guide in enumerate(self.guides, start=1))
        return "\n".join(parts)


def build_outline(
    query: TravelQuery,
    gateway: Gateway,
    db: TravelDatabase,
    *,
    guides_cache: GuidesCache,
    route_retries: int = 3,
) -> Outline:
    """Run the whole outline phase for one query.

    Route drafting gets at most `route_retries` attempts in total; grammar
    violations and infeasible transportation both consume an attempt and feed
    their message back into the next draft. Raises OutlineError when every
    attempt is spent.
    """
    feedback: str | None = None
    route: RouteSkeleton | None = None
    verdict: FeasibilityVerdict | None = None
    attempts = 0
    for attempt in range(1, route_retries + 1):
        attempts = attempt
        try:
            candidate = generate_route(query, gateway, db, feedback)
        except RouteGrammarError as exc:
            logger.info("route attempt %d rejected: %s", attempt, exc)
            feedback = str(exc)
            continue
        candidate_verdict = evaluate_transportation(candidate, query, db)
        if candidate_verdict.feasible:
            route, verdict = candidate, candidate_verdict
            break
        logger.info("route attempt %d infeasible: %s", attempt, candidate_verdict.feedback())
        feedback = candidate_verdict.feedback()
    if route is None or verdict is None:
        raise OutlineError(
            f"no feasible route within {route_retries} attempts; last problem: {feedback}"
        )
    keypoints = generate_keypoints(query, gateway)
    guides = guides_cache.get(gateway)
    return Outline(
        route=route,
        keypoints=keypoints,
        guides=guides,
        transport_notes=verdict.transport_notes(),
        route_attempts=attempts,
    )
