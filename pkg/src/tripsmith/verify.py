"""Deterministic plan verification.

Eight commonsense dimensions and the hard-constraint families are checked
against the travel database. Every check is pure string-and-table work; no
model is consulted. Day-scope checks power candidate ranking during plan
making; plan-scope checks produce the report persisted with a delivered
plan.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .domain import (
    EMPTY,
    DailyPlan,
    ErrorCode,
    RoomRule,
    SIGNIFICANT_CODES,
    TransportBan,
    TravelPlan,
    TravelQuery,
    format_money,
    room_type_matches,
    rooms_required,
)
from .sandbox import TravelDatabase, _norm

COMMONSENSE_DIMENSIONS = (
    "within_sandbox",
    "complete_information",
    "within_current_city",
    "reasonable_city_route",
    "diverse_restaurants",
    "diverse_attractions",
    "non_conflicting_transportation",
    "minimum_nights",
)

DIMENSION_CODES = {
    "within_sandbox": ErrorCode.HALLUCINATED_INFORMATION,
    "complete_information": ErrorCode.NECESSARY_INFORMATION_ABSENT,
    "within_current_city": ErrorCode.OUTSIDE_CURRENT_CITY,
    "reasonable_city_route": ErrorCode.INVALID_CITY_ROUTE,
    "diverse_restaurants": ErrorCode.REPEATED_RESTAURANT,
    "diverse_attractions": ErrorCode.REPEATED_ATTRACTION,
    "non_conflicting_transportation": ErrorCode.CONFLICTING_TRANSPORTATION,
    "minimum_nights": ErrorCode.INVALID_ACCOMMODATION_MIN_NIGHTS,
}


@dataclass(frozen=True)
class Finding:
    code: ErrorCode
    detail: str
    day: int | None = None
    field: str | None = None

    def to_json(self) -> dict:
        return {"code": self.code.value, "detail": self.detail, "day": self.day, "field": self.field}

    @classmethod
    def from_json(cls, obj: dict) -> Finding:
        return cls(
            code=ErrorCode(obj["code"]),
            detail=obj["detail"],
            day=obj.get("day"),
            field=obj.get("field"),
        )


@dataclass
class ConstraintReport:
    scope: str  # "plan" or "day"
    findings: list[Finding] = field(default_factory=list)
    passed_commonsense: dict[str, bool] = field(default_factory=dict)
    passed_hard: dict[str, bool] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed_commonsense.values()) and all(self.passed_hard.values())

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "findings": [f.to_json() for f in self.findings],
            "passed_commonsense": dict(self.passed_commonsense),
            "passed_hard": dict(self.passed_hard),
        }

    @classmethod
    def from_json(cls, obj: dict) -> ConstraintReport:
        return cls(
            scope=obj["scope"],
            findings=[Finding.from_json(f) for f in obj["findings"]],
            passed_commonsense=dict(obj["passed_commonsense"]),
            passed_hard=dict(obj["passed_hard"]),
        )


@dataclass
class DayReport:
    """Verdict on one candidate day, used to rank candidates."""

    day: int
    findings: list[Finding]
    running_cost_cents: int

    @property
    def significant_count(self) -> int:
        return sum(1 for f in self.findings if f.code in SIGNIFICANT_CODES)

    @property
    def total_count(self) -> int:
        return len(self.findings)


# ---------------------------------------------------------------------------
# parsing the plan's free-text fields


@dataclass(frozen=True)
class TransportEntry:
    mode: str | None  # "flight" | "self-driving" | "taxi" | None
    flight_number: str | None
    from_city: str | None
    to_city: str | None


_FLIGHT_NO_RE = re.compile(r"Flight Number:\s*([A-Za-z0-9]+)", re.IGNORECASE)
_FROM_TO_RE = re.compile(r"from\s+([^,]+?)\s+to\s+([^,]+)", re.IGNORECASE)


def parse_transportation(text: str) -> TransportEntry:
    lowered = text.lower()
    mode: str | None = None
    if "flight" in lowered:
        mode = "flight"
    elif "self-driving" in lowered or "self driving" in lowered:
        mode = "self-driving"
    elif "taxi" in lowered:
        mode = "taxi"
    number_match = _FLIGHT_NO_RE.search(text)
    route_match = _FROM_TO_RE.search(text)
    return TransportEntry(
        mode=mode,
        flight_number=number_match.group(1) if number_match else None,
        from_city=route_match.group(1).strip() if route_match else None,
        to_city=route_match.group(2).strip() if route_match else None,
    )


def split_name_city(entry: str) -> tuple[str, str] | None:
    """'Name, City' -> (name, city); names may themselves contain commas."""
    if ", " not in entry:
        return None
    name, city = entry.rsplit(", ", 1)
    name, city = name.strip(), city.strip().rstrip(".")
    if not name or not city:
        return None
    return name, city


def _day_cities(day: DailyPlan) -> tuple[str, ...]:
    transfer = day.transfer()
    if transfer:
        return transfer
    if day.current_city == EMPTY:
        return ()
    return (day.current_city.strip(),)


def _night_city(day: DailyPlan) -> str | None:
    cities = _day_cities(day)
    return cities[-1] if cities else None


# ---------------------------------------------------------------------------
# per-day check primitives (shared by day scope and plan scope)


def _sandbox_findings(day: DailyPlan, query: TravelQuery, db: TravelDatabase) -> list[Finding]:
    """Dimension: every referenced record must exist in the database."""
    out: list[Finding] = []
    code = ErrorCode.HALLUCINATED_INFORMATION

    if day.transportation != EMPTY:
        entry = parse_transportation(day.transportation)
        if entry.mode is None:
            out.append(
                Finding(code, f"day {day.day} transportation is unrecognizable", day.day, "transportation")
            )
        elif entry.mode == "flight":
            if not entry.flight_number:
                out.append(
                    Finding(code, f"day {day.day} flight has no flight number", day.day, "transportation")
                )
            else:
                flight = db.find_flight(entry.flight_number)
                if flight is None:
                    out.append(
                        Finding(
                            code,
                            f"day {day.day}: no flight {entry.flight_number} in the database",
                            day.day,
                            "transportation",
                        )
                    )
                else:
                    want_date = (
                        query.date_for_day(day.day) if day.day <= query.duration_days else None
                    )
                    route_ok = (
                        entry.from_city is not None
                        and entry.to_city is not None
                        and _norm(flight.origin_city) == _norm(entry.from_city)
                        and _norm(flight.dest_city) == _norm(entry.to_city)
                    )
                    if not route_ok or flight.date != want_date:
                        out.append(
                            Finding(
                                code,
                                f"day {day.day}: flight {entry.flight_number} does not serve "
                                f"this route on {want_date}",
                                day.day,
                                "transportation",
                            )
                        )
        else:  # ground transport must have a distance record
            if entry.from_city is None or entry.to_city is None:
                out.append(
                    Finding(
                        code,
                        f"day {day.day} {entry.mode} names no route",
                        day.day,
                        "transportation",
                    )
                )
            elif db.distance_matrix(entry.from_city, entry.to_city, entry.mode) is None:
                out.append(
                    Finding(
                        code,
                        f"day {day.day}: no {entry.mode} route from {entry.from_city} "
                        f"to {entry.to_city} in the database",
                        day.day,
                        "transportation",
                    )
                )

    for meal, value in day.meals():
        if value == EMPTY:
            continue
        parts = split_name_city(value)
        if parts is None:
            out.append(
                Finding(code, f"day {day.day} {meal} is not of the form 'Name, City'", day.day, meal)
            )
            continue
        if db.find_restaurant(*parts) is None:
            out.append(
                Finding(
                    code,
                    f"day {day.day} {meal}: no restaurant {parts[0]!r} in {parts[1]}",
                    day.day,
                    meal,
                )
            )

    for entry_text in day.attraction_entries():
        parts = split_name_city(entry_text)
        if parts is None:
            out.append(
                Finding(
                    code,
                    f"day {day.day} attraction {entry_text!r} is not of the form 'Name, City'",
                    day.day,
                    "attraction",
                )
            )
            continue
        if db.find_attraction(*parts) is None:
            out.append(
                Finding(
                    code,
                    f"day {day.day}: no attraction {parts[0]!r} in {parts[1]}",
                    day.day,
                    "attraction",
                )
            )

    if day.accommodation != EMPTY:
        parts = split_name_city(day.accommodation)
        if parts is None:
            out.append(
                Finding(
                    code,
                    f"day {day.day} accommodation is not of the form 'Name, City'",
                    day.day,
                    "accommodation",
                )
            )
        elif db.find_accommodation(*parts) is None:
            out.append(
                Finding(
                    code,
                    f"day {day.day}: no accommodation {parts[0]!r} in {parts[1]}",
                    day.day,
                    "accommodation",
                )
            )
    return out


def _completeness_findings(day: DailyPlan, total_days: int) -> list[Finding]:
    """Dimension: nothing necessary may be left out.

    Travel days must name their transportation; stay days must have all
    three meals and at least one attraction. Every night except the last
    day's needs an accommodation.
    """
    out: list[Finding] = []
    code = ErrorCode.NECESSARY_INFORMATION_ABSENT
    is_transfer = day.transfer() is not None

    if day.current_city == EMPTY:
        out.append(Finding(code, f"day {day.day} has no current city", day.day, "current_city"))
    if is_transfer and day.transportation == EMPTY:
        out.append(
            Finding(code, f"day {day.day} travels between cities but names no transportation", day.day, "transportation")
        )
    if not is_transfer:
        for meal, value in day.meals():
            if value == EMPTY:
                out.append(Finding(code, f"day {day.day} has no {meal}", day.day, meal))
        if not day.attraction_entries():
            out.append(Finding(code, f"day {day.day} has no attraction", day.day, "attraction"))
    if day.day < total_days and day.accommodation == EMPTY:
        out.append(
            Finding(code, f"day {day.day} books no accommodation for the night", day.day, "accommodation")
        )
    return out


def _city_findings(day: DailyPlan) -> list[Finding]:
    """Dimension: everything booked must sit in the day's city (or cities)."""
    out: list[Finding] = []
    code = ErrorCode.OUTSIDE_CURRENT_CITY
    cities = {_norm(c) for c in _day_cities(day)}
    if not cities:
        return out  # no anchor city; the route dimension reports this

    def check(field_name: str, value: str) -> None:
        parts = split_name_city(value)
        if parts is None:
            return  # unparseable entries belong to the sandbox dimension
        if _norm(parts[1]) not in cities:
            out.append(
                Finding(
                    code,
                    f"day {day.day} {field_name}: {parts[0]} is in {parts[1]}, "
                    f"not where the traveller is",
                    day.day,
                    field_name,
                )
            )

    for meal, value in day.meals():
        if value != EMPTY:
            check(meal, value)
    for entry_text in day.attraction_entries():
        check("attraction", entry_text)
    if day.accommodation != EMPTY:
        check("accommodation", day.accommodation)

    transfer = day.transfer()
    if transfer and day.transportation != EMPTY:
        entry = parse_transportation(day.transportation)
        if entry.from_city is not None and entry.to_city is not None:
            if _norm(entry.from_city) != _norm(transfer[0]) or _norm(entry.to_city) != _norm(
                transfer[1]
            ):
                out.append(
                    Finding(
                        code,
                        f"day {day.day} transportation runs {entry.from_city} to "
                        f"{entry.to_city}, but the day travels {transfer[0]} to {transfer[1]}",
                        day.day,
                        "transportation",
                    )
                )
    return out


def _route_findings(plan: TravelPlan, query: TravelQuery, db: TravelDatabase) -> list[Finding]:
    """Dimension: the day-to-day city chain must be a sane closed tour."""
    out: list[Finding] = []
    code = ErrorCode.INVALID_CITY_ROUTE
    origin = query.origin_city.strip()

    if len(plan.days) != query.duration_days:
        out.append(
            Finding(
                code,
                f"the plan covers {len(plan.days)} days but the trip lasts {query.duration_days}",
            )
        )

    first = plan.days[0]
    first_transfer = first.transfer()
    if first_transfer is None or _norm(first_transfer[0]) != _norm(origin):
        out.append(Finding(code, f"day 1 must travel out of {origin}", 1, "current_city"))

    last = plan.days[-1]
    last_transfer = last.transfer()
    if last_transfer is None or _norm(last_transfer[1]) != _norm(origin):
        out.append(
            Finding(code, f"the last day must return to {origin}", last.day, "current_city")
        )

    # chain consistency: each day must pick up where the previous one ended
    location: str | None = None
    if first_transfer is not None:
        location = first_transfer[1]
    elif first.current_city != EMPTY:
        location = first.current_city.strip()
    for day in plan.days[1:]:
        transfer = day.transfer()
        if transfer is not None:
            if location is not None and _norm(transfer[0]) != _norm(location):
                out.append(
                    Finding(
                        code,
                        f"day {day.day} departs {transfer[0]} but the previous day ended in {location}",
                        day.day,
                        "current_city",
                    )
                )
            location = transfer[1]
        elif day.current_city != EMPTY:
            here = day.current_city.strip()
            if location is not None and _norm(here) != _norm(location):
                out.append(
                    Finding(
                        code,
                        f"day {day.day} is in {here} but the previous day ended in {location}",
                        day.day,
                        "current_city",
                    )
                )
            location = here

    # destination scope: which cities does the tour actually visit?
    visited: list[str] = []
    for day in plan.days:
        cities = _day_cities(day)
        for city in cities:
            if _norm(city) != _norm(origin) and _norm(city) not in [_norm(v) for v in visited]:
                visited.append(city)
    scope = query.scope
    if scope.city is not None:
        if [_norm(v) for v in visited] != [_norm(scope.city)]:
            out.append(
                Finding(
                    code,
                    f"the trip must visit exactly {scope.city}, got {visited or ['nothing']}",
                )
            )
    else:
        state_cities = {_norm(c) for c in db.city_search(scope.state or "")}
        if len(visited) != scope.city_count:
            out.append(
                Finding(
                    code,
                    f"the trip must visit {scope.city_count} cities in {scope.state}, "
                    f"got {len(visited)}",
                )
            )
        for city in visited:
            if _norm(city) not in state_cities:
                out.append(Finding(code, f"{city} is not in {scope.state}"))
    return out


def _restaurant_repeats(days: list[DailyPlan]) -> list[Finding]:
    uses: dict[tuple[str, str], list[str]] = {}
    for day in days:
        for meal, value in day.meals():
            if value == EMPTY:
                continue
            parts = split_name_city(value)
            if parts is None:
                continue
            key = (_norm(parts[0]), _norm(parts[1]))
            uses.setdefault(key, []).append(f"day {day.day} {meal}")
    out: list[Finding] = []
    for key, places in uses.items():
        if len(places) > 1:
            out.append(
                Finding(
                    ErrorCode.REPEATED_RESTAURANT,
                    f"{key[0]} serves more than one meal ({', '.join(places)})",
                )
            )
    return out


def _attraction_repeats(days: list[DailyPlan]) -> list[Finding]:
    uses: dict[tuple[str, str], list[str]] = {}
    for day in days:
        for entry_text in day.attraction_entries():
            parts = split_name_city(entry_text)
            if parts is None:
                continue
            key = (_norm(parts[0]), _norm(parts[1]))
            uses.setdefault(key, []).append(f"day {day.day}")
    out: list[Finding] = []
    for key, places in uses.items():
        if len(places) > 1:
            out.append(
                Finding(
                    ErrorCode.REPEATED_ATTRACTION,
                    f"{key[0]} is visited more than once ({', '.join(places)})",
                )
            )
    return out


def _transport_conflict(days: list[DailyPlan]) -> list[Finding]:
    """Flying somewhere and also self-driving is contradictory: the car
    cannot be in two places. Taxi mixes with anything."""
    modes_used: dict[str, list[int]] = {}
    for day in days:
        if day.transportation == EMPTY:
            continue
        entry = parse_transportation(day.transportation)
        if entry.mode:
            modes_used.setdefault(entry.mode, []).append(day.day)
    if "flight" in modes_used and "self-driving" in modes_used:
        return [
            Finding(
                ErrorCode.CONFLICTING_TRANSPORTATION,
                f"the plan mixes flights (day {modes_used['flight']}) with "
                f"self-driving (day {modes_used['self-driving']})",
            )
        ]
    return []


def _accommodation_runs(days: list[DailyPlan], db: TravelDatabase):
    """Consecutive nights booked at the same place, with the record attached."""
    runs: list[tuple[tuple[str, str], int, int, int]] = []  # key, start_day, length, min_nights
    current_key: tuple[str, str] | None = None
    start = 0
    length = 0
    min_nights = 0

    def close() -> None:
        nonlocal current_key, length
        if current_key is not None:
            runs.append((current_key, start, length, min_nights))
        current_key = None
        length = 0

    for day in days:
        if day.accommodation == EMPTY:
            close()
            continue
        parts = split_name_city(day.accommodation)
        if parts is None:
            close()
            continue
        record = db.find_accommodation(*parts)
        if record is None:
            close()  # hallucinated stays are not held to a minimum-nights rule
            continue
        key = (_norm(parts[0]), _norm(parts[1]))
        if key == current_key:
            length += 1
        else:
            close()
            current_key = key
            start = day.day
            length = 1
            min_nights = record.min_nights
    close()
    return runs


def _min_nights_findings(days: list[DailyPlan], db: TravelDatabase) -> list[Finding]:
    out: list[Finding] = []
    for key, start, length, min_nights in _accommodation_runs(days, db):
        if length < min_nights:
            out.append(
                Finding(
                    ErrorCode.INVALID_ACCOMMODATION_MIN_NIGHTS,
                    f"{key[0]} requires at least {min_nights} nights but is booked "
                    f"for {length} (from day {start})",
                    start,
                    "accommodation",
                )
            )
    return out


# ---------------------------------------------------------------------------
# cost model


def trip_cost_cents(days: list[DailyPlan], query: TravelQuery, db: TravelDatabase) -> int:
    """Total cost of the given days under the documented pricing policy.

    Flights, taxi rides, and meals are per person; a self-driving leg is one
    shared cost; lodging is the nightly price times the rooms needed to fit
    the whole party. References that don't resolve to a record cost nothing
    here; the sandbox dimension already flags them.
    """
    party = query.party_size
    total = 0
    for day in days:
        if day.transportation != EMPTY:
            entry = parse_transportation(day.transportation)
            if entry.mode == "flight" and entry.flight_number:
                flight = db.find_flight(entry.flight_number)
                if flight is not None:
                    total += flight.price_cents * party
            elif entry.mode in ("self-driving", "taxi") and entry.from_city and entry.to_city:
                record = db.distance_matrix(entry.from_city, entry.to_city, entry.mode)
                if record is not None:
                    total += record.cost_cents * (party if entry.mode == "taxi" else 1)
        for _meal, value in day.meals():
            if value == EMPTY:
                continue
            parts = split_name_city(value)
            if parts:
                restaurant = db.find_restaurant(*parts)
                if restaurant is not None:
                    total += restaurant.avg_cost_cents * party
        if day.accommodation != EMPTY:
            parts = split_name_city(day.accommodation)
            if parts:
                record = db.find_accommodation(*parts)
                if record is not None:
                    total += record.price_cents * rooms_required(party, record.max_occupancy)
    return total


# ---------------------------------------------------------------------------
# hard constraints


def hard_constraint_keys(query: TravelQuery) -> tuple[str, ...]:
    """The hard-constraint families this query is scored on."""
    keys = ["budget"]
    hc = query.hard_constraints
    keys.extend(f"room_rule:{rule.value}" for rule in hc.room_rules)
    if hc.room_type is not None:
        keys.append("room_type")
    if hc.cuisines:
        keys.append("cuisine")
    if hc.transportation is not None:
        keys.append("transportation")
    return tuple(keys)


def _booked_accommodations(days: list[DailyPlan], db: TravelDatabase):
    seen: set[tuple[str, str]] = set()
    for day in days:
        if day.accommodation == EMPTY:
            continue
        parts = split_name_city(day.accommodation)
        if parts is None:
            continue
        key = (_norm(parts[0]), _norm(parts[1]))
        if key in seen:
            continue
        seen.add(key)
        record = db.find_accommodation(*parts)
        if record is not None:
            yield day.day, record


def check_hard(plan: TravelPlan, query: TravelQuery, db: TravelDatabase) -> ConstraintReport:
    report = ConstraintReport(scope="plan")
    days = list(plan.days)
    hc = query.hard_constraints

    cost = trip_cost_cents(days, query, db)
    budget_ok = cost <= query.budget_cents
    report.passed_hard["budget"] = budget_ok
    if not budget_ok:
        report.findings.append(
            Finding(
                ErrorCode.HARD_BUDGET,
                f"the plan costs ${format_money(cost)} against a budget of "
                f"${format_money(query.budget_cents)}",
            )
        )

    for rule in hc.room_rules:
        ok = True
        for day_no, record in _booked_accommodations(days, db):
            if rule.banned_form in record.house_rules:
                ok = False
                report.findings.append(
                    Finding(
                        ErrorCode.HARD_ROOM_RULE,
                        f"{record.name} does not allow {rule.value} (booked day {day_no})",
                        day_no,
                        "accommodation",
                    )
                )
        report.passed_hard[f"room_rule:{rule.value}"] = ok

    if hc.room_type is not None:
        ok = True
        for day_no, record in _booked_accommodations(days, db):
            if not room_type_matches(hc.room_type, record.room_type):
                ok = False
                report.findings.append(
                    Finding(
                        ErrorCode.HARD_ROOM_TYPE,
                        f"{record.name} is a {record.room_type}, not a {hc.room_type.value} "
                        f"(booked day {day_no})",
                        day_no,
                        "accommodation",
                    )
                )
        report.passed_hard["room_type"] = ok

    if hc.cuisines:
        served: set[str] = set()
        for day in days:
            for _meal, value in day.meals():
                if value == EMPTY:
                    continue
                parts = split_name_city(value)
                if parts:
                    restaurant = db.find_restaurant(*parts)
                    if restaurant is not None:
                        served.update(c.casefold() for c in restaurant.cuisines)
        missing = [c for c in hc.cuisines if c.casefold() not in served]
        report.passed_hard["cuisine"] = not missing
        if missing:
            report.findings.append(
                Finding(
                    ErrorCode.HARD_CUISINE,
                    f"no meal covers these requested cuisines: {', '.join(missing)}",
                )
            )

    if hc.transportation is not None:
        banned_mode = "flight" if hc.transportation is TransportBan.NO_FLIGHT else "self-driving"
        offending = []
        for day in days:
            if day.transportation == EMPTY:
                continue
            if parse_transportation(day.transportation).mode == banned_mode:
                offending.append(day.day)
        report.passed_hard["transportation"] = not offending
        if offending:
            report.findings.append(
                Finding(
                    ErrorCode.HARD_TRANSPORTATION,
                    f"the request rules out {banned_mode}, used on day {offending}",
                )
            )

    return report


# ---------------------------------------------------------------------------
# commonsense, plan scope


def check_commonsense(plan: TravelPlan, query: TravelQuery, db: TravelDatabase) -> ConstraintReport:
    report = ConstraintReport(scope="plan")
    days = list(plan.days)
    by_dim: dict[str, list[Finding]] = {
        "within_sandbox": [f for day in days for f in _sandbox_findings(day, query, db)],
        "complete_information": [
            f for day in days for f in _completeness_findings(day, query.duration_days)
        ],
        "within_current_city": [f for day in days for f in _city_findings(day)],
        "reasonable_city_route": _route_findings(plan, query, db),
        "diverse_restaurants": _restaurant_repeats(days),
        "diverse_attractions": _attraction_repeats(days),
        "non_conflicting_transportation": _transport_conflict(days),
        "minimum_nights": _min_nights_findings(days, db),
    }
    for dim in COMMONSENSE_DIMENSIONS:
        findings = by_dim[dim]
        report.passed_commonsense[dim] = not findings
        report.findings.extend(findings)
    return report


def check_plan(plan: TravelPlan, query: TravelQuery, db: TravelDatabase) -> ConstraintReport:
    """Full verdict: all commonsense dimensions plus the hard constraints."""
    commonsense = check_commonsense(plan, query, db)
    hard = check_hard(plan, query, db)
    return ConstraintReport(
        scope="plan",
        findings=commonsense.findings + hard.findings,
        passed_commonsense=commonsense.passed_commonsense,
        passed_hard=hard.passed_hard,
    )


# ---------------------------------------------------------------------------
# day scope (candidate ranking)


def running_budget_limit_cents(query: TravelQuery, day: int) -> int:
    """Spend-so-far ceiling: the day's pro-rata share plus a 10% allowance."""
    return query.budget_cents * day * 11 // (query.duration_days * 10)


def check_day(
    day_plan: DailyPlan,
    query: TravelQuery,
    db: TravelDatabase,
    prior_days: tuple[DailyPlan, ...] = (),
) -> DayReport:
    """Check one candidate day in the context of the days planned so far."""
    findings: list[Finding] = []
    findings.extend(_sandbox_findings(day_plan, query, db))
    findings.extend(_completeness_findings(day_plan, query.duration_days))
    findings.extend(_city_findings(day_plan))

    # repetition against earlier days (and within this day itself)
    used_meals: set[tuple[str, str]] = set()
    used_attractions: set[tuple[str, str]] = set()
    for prior in prior_days:
        for _meal, value in prior.meals():
            if value != EMPTY and (parts := split_name_city(value)):
                used_meals.add((_norm(parts[0]), _norm(parts[1])))
        for entry_text in prior.attraction_entries():
            if parts := split_name_city(entry_text):
                used_attractions.add((_norm(parts[0]), _norm(parts[1])))
    for meal, value in day_plan.meals():
        if value == EMPTY:
            continue
        parts = split_name_city(value)
        if parts is None:
            continue
        key = (_norm(parts[0]), _norm(parts[1]))
        if key in used_meals:
            findings.append(
                Finding(
                    ErrorCode.REPEATED_RESTAURANT,
                    f"day {day_plan.day} {meal}: {parts[0]} already serves another meal",
                    day_plan.day,
                    meal,
                )
            )
        used_meals.add(key)
    for entry_text in day_plan.attraction_entries():
        parts = split_name_city(entry_text)
        if parts is None:
            continue
        key = (_norm(parts[0]), _norm(parts[1]))
        if key in used_attractions:
            findings.append(
                Finding(
                    ErrorCode.REPEATED_ATTRACTION,
                    f"day {day_plan.day}: {parts[0]} is already visited",
                    day_plan.day,
                    "attraction",
                )
            )
        used_attractions.add(key)

    # a flight on this day clashes with earlier self-driving, and vice versa
    if day_plan.transportation != EMPTY:
        mode = parse_transportation(day_plan.transportation).mode
        prior_modes = {
            parse_transportation(p.transportation).mode
            for p in prior_days
            if p.transportation != EMPTY
        }
        clash = ("flight", "self-driving")
        if (mode == clash[0] and clash[1] in prior_modes) or (
            mode == clash[1] and clash[0] in prior_modes
        ):
            findings.append(
                Finding(
                    ErrorCode.CONFLICTING_TRANSPORTATION,
                    f"day {day_plan.day} uses {mode}, clashing with an earlier day's transport",
                    day_plan.day,
                    "transportation",
                )
            )

    # minimum nights: only runs that can no longer be extended are judged
    all_days = list(prior_days) + [day_plan]
    for key, start, length, min_nights in _accommodation_runs(all_days, db):
        still_open = start + length - 1 == day_plan.day
        remaining = query.duration_days - day_plan.day
        if still_open and length + remaining >= min_nights:
            continue  # later days can still satisfy the minimum
        if length < min_nights:
            findings.append(
                Finding(
                    ErrorCode.INVALID_ACCOMMODATION_MIN_NIGHTS,
                    f"{key[0]} requires at least {min_nights} nights but is booked "
                    f"for {length} (from day {start})",
                    start,
                    "accommodation",
                )
            )

    running_cost = trip_cost_cents(all_days, query, db)
    limit = running_budget_limit_cents(query, day_plan.day)
    if running_cost > limit:
        findings.append(
            Finding(
                ErrorCode.BUDGET_EXCEEDED,
                f"spend through day {day_plan.day} is ${format_money(running_cost)}, "
                f"over the ${format_money(limit)} pace for a "
                f"${format_money(query.budget_cents)} budget",
                day_plan.day,
            )
        )

    return DayReport(day=day_plan.day, findings=findings, running_cost_cents=running_cost)
