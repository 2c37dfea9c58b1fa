"""Core domain types shared by every other module.

Money is carried as integral cents, dates as :class:`datetime.date`.
Plan documents use the string ``"-"`` for fields that do not apply.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import re
from dataclasses import dataclass, field, fields
from enum import Enum

EMPTY = "-"

ALLOWED_DURATIONS = (3, 5, 7)

PLAN_KEYS = (
    "day",
    "current_city",
    "transportation",
    "breakfast",
    "attraction",
    "lunch",
    "dinner",
    "accommodation",
)

ORDINALS = ("First", "Second", "Third", "Fourth", "Fifth", "Sixth", "Seventh")


def ordinal_word(day: int) -> str:
    """'First' for day 1, up to 'Seventh' for day 7."""
    if not 1 <= day <= len(ORDINALS):
        raise ValueError(f"day out of range: {day}")
    return ORDINALS[day - 1]


class DomainError(Exception):
    """Base class for validation failures raised by this package."""


class QueryError(DomainError):
    pass


class PlanStructureError(DomainError):
    pass


class PlanDocumentError(DomainError):
    pass


# ---------------------------------------------------------------------------
# money and dates


def parse_money(text: str | int | float) -> int:
    """Parse a dollar amount ('1,100', '$754', 28.5) into cents.

    Raises DomainError on garbage or fractional-cent input.
    """
    if isinstance(text, int):
        return text * 100
    if isinstance(text, float):
        cents = round(text * 100)
        if abs(cents - text * 100) > 1e-6:
            raise DomainError(f"money has fractional cents: {text!r}")
        return cents
    cleaned = text.strip().lstrip("$").replace(",", "")
    if not cleaned:
        raise DomainError("empty money value")
    try:
        value = int(cleaned) * 100 if "." not in cleaned else round(float(cleaned) * 100)
    except ValueError:
        raise DomainError(f"unparseable money value: {text!r}") from None
    if "." in cleaned and abs(value - float(cleaned) * 100) > 1e-6:
        raise DomainError(f"money has fractional cents: {text!r}")
    return value


def format_money(cents: int) -> str:
    """Render cents the way the sandbox prints prices: '240', '28.5'."""
    if cents % 100 == 0:
        return str(cents // 100)
    value = cents / 100
    return f"{value:.2f}".rstrip("0")


def format_money_float(cents: int) -> str:
    """Float-style rendering used by accommodation dumps: '1069.0'."""
    return str(cents / 100)


def parse_iso_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DomainError(f"bad date (want YYYY-MM-DD): {text!r}") from None


def prose_date(d: dt.date) -> str:
    """'March 4' style rendering, no zero padding."""
    return f"{d.strftime('%B')} {d.day}"


# ---------------------------------------------------------------------------
# hard-constraint vocabulary


class RoomRule(Enum):
    """House-rule dimensions a traveller may require to be allowed."""

    PARTIES = "parties"
    SMOKING = "smoking"
    CHILDREN = "children under 10"
    PETS = "pets"
    VISITORS = "visitors"

    @property
    def banned_form(self) -> str:
        """How an accommodation record spells the prohibition."""
        return "No " + self.value

    @classmethod
    def from_text(cls, text: str) -> RoomRule:
        lowered = text.strip().lower()
        for rule in cls:
            if rule.value == lowered:
                return rule
        raise DomainError(f"unknown house rule: {text!r}")


class RoomType(Enum):
    ENTIRE_HOME = "entire home"
    PRIVATE_ROOM = "private room"
    SHARED_ROOM = "shared room"
    NOT_SHARED_ROOM = "not shared room"

    @property
    def record_form(self) -> str | None:
        """Room-type string carried by matching accommodation records.

        'not shared room' is a predicate, not a literal record value, so it
        has no single form; see `room_type_matches`.
        """
        return {
            RoomType.ENTIRE_HOME: "Entire home/apt",
            RoomType.PRIVATE_ROOM: "Private room",
            RoomType.SHARED_ROOM: "Shared room",
            RoomType.NOT_SHARED_ROOM: None,
        }[self]

    @classmethod
    def from_text(cls, text: str) -> RoomType:
        lowered = text.strip().lower()
        for rt in cls:
            if rt.value == lowered:
                return rt
        raise DomainError(f"unknown room type: {text!r}")


def room_type_matches(required: RoomType, record_room_type: str) -> bool:
    if required is RoomType.NOT_SHARED_ROOM:
        return record_room_type != "Shared room"
    return record_room_type == required.record_form


class TransportBan(Enum):
    NO_FLIGHT = "no flight"
    NO_SELF_DRIVING = "no self-driving"

    @classmethod
    def from_text(cls, text: str) -> TransportBan:
        lowered = text.strip().lower()
        for ban in cls:
            if ban.value == lowered:
                return ban
        raise DomainError(f"unknown transportation rule: {text!r}")


@dataclass(frozen=True)
class HardConstraintSet:
    """User-declared hard constraints; empty collections mean 'no demand'."""

    room_rules: tuple[RoomRule, ...] = ()
    room_type: RoomType | None = None
    cuisines: tuple[str, ...] = ()
    transportation: TransportBan | None = None

    def is_empty(self) -> bool:
        return not (self.room_rules or self.room_type or self.cuisines or self.transportation)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class DestinationScope:
    """Either one named city, or `city_count` cities inside `state`."""

    city: str | None = None
    state: str | None = None
    city_count: int = 1

    def __post_init__(self) -> None:
        if (self.city is None) == (self.state is None):
            raise QueryError("destination scope needs exactly one of city / state")
        if self.city is not None and self.city_count != 1:
            raise QueryError("single-city scope must have city_count 1")
        if self.state is not None and self.city_count < 1:
            raise QueryError(f"city_count must be positive, got {self.city_count}")

    def describe(self) -> str:
        if self.city is not None:
            return self.city
        plural = "cities" if self.city_count != 1 else "city"
        return f"{self.city_count} {plural} in {self.state}"


@dataclass(frozen=True)
class TravelQuery:
    query_id: str
    text: str
    origin_city: str
    scope: DestinationScope
    start_date: dt.date
    end_date: dt.date
    party_size: int
    budget_cents: int
    hard_constraints: HardConstraintSet = field(default_factory=HardConstraintSet)

    def __post_init__(self) -> None:
        duration = (self.end_date - self.start_date).days + 1
        if duration not in ALLOWED_DURATIONS:
            raise QueryError(
                f"{self.query_id or 'query'}: duration must be one of {ALLOWED_DURATIONS}, got {duration}"
            )
        if self.party_size < 1:
            raise QueryError(f"{self.query_id}: party_size must be at least 1")
        if self.budget_cents <= 0:
            raise QueryError(f"{self.query_id}: budget must be positive")
        if not self.origin_city.strip():
            raise QueryError(f"{self.query_id}: origin city is blank")

    @property
    def duration_days(self) -> int:
        return (self.end_date - self.start_date).days + 1

    def date_for_day(self, day: int) -> dt.date:
        if not 1 <= day <= self.duration_days:
            raise QueryError(f"day {day} outside trip of {self.duration_days} days")
        return self.start_date + dt.timedelta(days=day - 1)


def daily_budget_line(query: TravelQuery) -> str:
    """The per-day spending reminder shown to the agents (whole dollars)."""
    allowance = query.budget_cents // query.duration_days // 100
    return (
        "Remember that the total daily expenses of your trip (the sum of "
        f"expenses for each person) do not exceed {allowance}."
    )


def hard_constraints_text(query: TravelQuery) -> str:
    """Render the query's hard constraints for the agents, budget first."""
    budget = f"{query.budget_cents // 100:,}" if query.budget_cents % 100 == 0 else format_money(query.budget_cents)
    lines = [
        "Hard Constraints. Total Budget: The trip must not exceed a total "
        f"cost of ${budget}, including all transportation, accommodation, "
        "meals, and activities."
    ]
    hc = query.hard_constraints
    if hc.room_rules:
        allowed = " and ".join(rule.value for rule in hc.room_rules)
        lines.append(f"House Rules: Accommodations must allow {allowed}.")
    if hc.room_type:
        lines.append(f"Room Type: Accommodations should be a {hc.room_type.value}.")
    if hc.cuisines:
        wanted = ", ".join(hc.cuisines)
        lines.append(f"Cuisines: Meals during the trip should cover these cuisines: {wanted}.")
    if hc.transportation is TransportBan.NO_FLIGHT:
        lines.append("Transportation: Do not use flights on this trip.")
    elif hc.transportation is TransportBan.NO_SELF_DRIVING:
        lines.append("Transportation: Do not use self-driving on this trip.")
    return "\n".join(lines)


def query_from_json(obj: dict) -> TravelQuery:
    """Build a TravelQuery from one corpus-file record."""
    try:
        dest = obj["destination"]
        if "city" in dest:
            scope = DestinationScope(city=dest["city"])
        else:
            scope = DestinationScope(state=dest["state"], city_count=int(dest["city_count"]))
        hard = obj.get("hard_constraints", {})
        constraints = HardConstraintSet(
            room_rules=tuple(RoomRule.from_text(r) for r in hard.get("room_rules", [])),
            room_type=RoomType.from_text(hard["room_type"]) if hard.get("room_type") else None,
            cuisines=tuple(hard.get("cuisines", [])),
            transportation=(
                TransportBan.from_text(hard["transportation"]) if hard.get("transportation") else None
            ),
        )
        return TravelQuery(
            query_id=str(obj["query_id"]),
            text=str(obj.get("text", "")),
            origin_city=str(obj["origin_city"]),
            scope=scope,
            start_date=parse_iso_date(obj["start_date"]),
            end_date=parse_iso_date(obj["end_date"]),
            party_size=int(obj["party_size"]),
            budget_cents=parse_money(obj["budget"]),
            hard_constraints=constraints,
        )
    except KeyError as exc:
        raise QueryError(f"corpus record missing field {exc.args[0]!r}") from None


def query_to_json(query: TravelQuery) -> dict:
    dest: dict
    if query.scope.city is not None:
        dest = {"city": query.scope.city}
    else:
        dest = {"state": query.scope.state, "city_count": query.scope.city_count}
    out: dict = {
        "query_id": query.query_id,
        "text": query.text,
        "origin_city": query.origin_city,
        "destination": dest,
        "start_date": query.start_date.isoformat(),
        "end_date": query.end_date.isoformat(),
        "party_size": query.party_size,
        "budget": format_money(query.budget_cents),
    }
    hc = query.hard_constraints
    if not hc.is_empty():
        hard: dict = {}
        if hc.room_rules:
            hard["room_rules"] = [r.value for r in hc.room_rules]
        if hc.room_type:
            hard["room_type"] = hc.room_type.value
        if hc.cuisines:
            hard["cuisines"] = list(hc.cuisines)
        if hc.transportation:
            hard["transportation"] = hc.transportation.value
        out["hard_constraints"] = hard
    return out


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class DailyPlan:
    """One day of a delivered plan. Fields that do not apply hold '-'."""

    day: int
    current_city: str
    transportation: str
    breakfast: str
    attraction: str
    lunch: str
    dinner: str
    accommodation: str

    def __post_init__(self) -> None:
        if self.day < 1:
            raise PlanStructureError(f"day index must be positive, got {self.day}")
        for f in fields(self):
            if f.name == "day":
                continue
            value = getattr(self, f.name)
            if not isinstance(value, str):
                raise PlanStructureError(f"day {self.day}: field {f.name!r} must be a string")
            if value == "":
                raise PlanStructureError(
                    f"day {self.day}: field {f.name!r} is blank; use '-' for empty"
                )

    def transfer(self) -> tuple[str, str] | None:
        """(from, to) when current_city reads 'from X to Y', else None."""
        m = re.fullmatch(r"from\s+(.+?)\s+to\s+(.+)", self.current_city.strip())
        if m:
            return m.group(1).strip(), m.group(2).strip()
        return None

    def attraction_entries(self) -> tuple[str, ...]:
        if self.attraction == EMPTY:
            return ()
        parts = [p.strip() for p in self.attraction.split(";")]
        return tuple(p for p in parts if p)

    def meals(self) -> tuple[tuple[str, str], ...]:
        return (
            ("breakfast", self.breakfast),
            ("lunch", self.lunch),
            ("dinner", self.dinner),
        )


@dataclass(frozen=True)
class TravelPlan:
    query_id: str
    days: tuple[DailyPlan, ...]

    def __post_init__(self) -> None:
        if not self.days:
            raise PlanStructureError("plan has no days")
        for i, day in enumerate(self.days, start=1):
            if day.day != i:
                raise PlanStructureError(
                    f"plan days must be contiguous from 1; position {i} holds day {day.day}"
                )

    @property
    def duration_days(self) -> int:
        return len(self.days)


def day_to_json(day: DailyPlan) -> dict:
    return {key: getattr(day, key) for key in PLAN_KEYS}


def parse_day_object(obj: object, *, position: int | None = None) -> DailyPlan:
    """Validate one day object from a plan document.

    Raises PlanDocumentError naming the offending day and field.
    """
    where = f"entry {position}" if position is not None else "day entry"
    if not isinstance(obj, dict):
        raise PlanDocumentError(f"{where}: expected an object, got {type(obj).__name__}")
    got = set(obj)
    want = set(PLAN_KEYS)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        detail = []
        if missing:
            detail.append(f"missing {missing}")
        if extra:
            detail.append(f"unexpected {extra}")
        raise PlanDocumentError(f"{where}: {'; '.join(detail)}")
    day_value = obj["day"]
    if not isinstance(day_value, int) or isinstance(day_value, bool):
        raise PlanDocumentError(f"{where}: field 'day' must be an integer")
    for key in PLAN_KEYS[1:]:
        if not isinstance(obj[key], str):
            raise PlanDocumentError(f"day {day_value}: field {key!r} must be a string")
        if obj[key] == "":
            raise PlanDocumentError(f"day {day_value}: field {key!r} is blank; use '-' for empty")
    try:
        return DailyPlan(**{key: obj[key] for key in PLAN_KEYS})
    except PlanStructureError as exc:
        raise PlanDocumentError(str(exc)) from None


def parse_plan_document(text: str, query_id: str = "") -> TravelPlan:
    """Parse a persisted plan document (JSON array of day objects)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanDocumentError(f"plan document is not valid JSON: {exc}") from None
    if not isinstance(data, list) or not data:
        raise PlanDocumentError("plan document must be a non-empty JSON array")
    days = [parse_day_object(obj, position=i) for i, obj in enumerate(data, start=1)]
    for i, day in enumerate(days, start=1):
        if day.day != i:
            raise PlanDocumentError(
                f"plan days must run 1..{len(days)} in order; entry {i} holds day {day.day}"
            )
    return TravelPlan(query_id=query_id, days=tuple(days))


def serialize_plan(plan: TravelPlan) -> str:
    """Render a plan as the canonical JSON document."""
    payload = [day_to_json(day) for day in plan.days]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# sandbox records


@dataclass(frozen=True)
class Flight:
    number: str
    price_cents: int
    dep_time: str
    arr_time: str
    origin_city: str
    dest_city: str
    date: dt.date


@dataclass(frozen=True)
class Accommodation:
    name: str
    room_type: str
    price_cents: int
    min_nights: int
    review_rate: float
    house_rules: tuple[str, ...]
    max_occupancy: int
    city: str


@dataclass(frozen=True)
class Restaurant:
    name: str
    city: str
    cuisines: tuple[str, ...]
    avg_cost_cents: int
    rating: float


@dataclass(frozen=True)
class Attraction:
    name: str
    city: str


@dataclass(frozen=True)
class Distance:
    origin_city: str
    dest_city: str
    mode: str  # "self-driving" or "taxi"
    distance_km: float
    duration_hours: float
    cost_cents: int


SandboxRecord = Flight | Accommodation | Restaurant | Attraction | Distance


def _trim_float(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return str(value)


def format_record(record: SandboxRecord) -> str:
    """Render a sandbox record as its canonical observation line."""
    if isinstance(record, Flight):
        return (
            f"Flight Number: {record.number}; Price: {format_money(record.price_cents)}; "
            f"DepTime: {record.dep_time}; ArrTime: {record.arr_time}; "
            f"OriginCityName: {record.origin_city}; DestCityName: {record.dest_city}"
        )
    if isinstance(record, Accommodation):
        rules = " & ".join(record.house_rules)
        return (
            f"Accommodation: {record.name}; Room type: {record.room_type}; "
            f"Price: {format_money_float(record.price_cents)}; "
            f"Minimum number of nights stay: {float(record.min_nights)}; "
            f"review rate number: {float(record.review_rate)}; "
            f"House rules: {rules}; "
            f"One room can accommodate how many people: {record.max_occupancy}; "
            f"City: {record.city}"
        )
    if isinstance(record, Restaurant):
        return (
            f"Restaurant: {record.name}; City: {record.city}; "
            f"Cuisines: {', '.join(record.cuisines)}; "
            f"Average Cost: {format_money(record.avg_cost_cents)}; "
            f"Rating: {_trim_float(record.rating)}"
        )
    if isinstance(record, Attraction):
        return f"Attraction Name: {record.name}; City: {record.city}"
    if isinstance(record, Distance):
        return (
            f"Mode: {record.mode}; OriginCityName: {record.origin_city}; "
            f"DestCityName: {record.dest_city}; Distance: {_trim_float(record.distance_km)} km; "
            f"Duration: {_trim_float(record.duration_hours)} hours; "
            f"Cost: {format_money(record.cost_cents)}"
        )
    raise TypeError(f"not a sandbox record: {type(record).__name__}")


def rooms_required(party_size: int, max_occupancy: int) -> int:
    """Rooms needed so the whole party is housed."""
    if party_size < 1 or max_occupancy < 1:
        raise DomainError("party size and occupancy must be positive")
    return math.ceil(party_size / max_occupancy)


# ---------------------------------------------------------------------------
# outcome codes


class ErrorCode(Enum):
    """Every way a plan or a run can fail."""

    # commonsense dimensions
    HALLUCINATED_INFORMATION = "HallucinatedInformation"
    NECESSARY_INFORMATION_ABSENT = "NecessaryInformationAbsent"
    OUTSIDE_CURRENT_CITY = "OutsideCurrentCity"
    INVALID_CITY_ROUTE = "InvalidCityRoute"
    REPEATED_RESTAURANT = "RepeatedRestaurant"
    REPEATED_ATTRACTION = "RepeatedAttraction"
    CONFLICTING_TRANSPORTATION = "ConflictingTransportation"
    INVALID_ACCOMMODATION_MIN_NIGHTS = "InvalidAccommodationMinNights"
    # day-scope running-budget finding
    BUDGET_EXCEEDED = "BudgetExceeded"
    # hard-constraint families
    HARD_BUDGET = "HardBudget"
    HARD_ROOM_RULE = "HardRoomRule"
    HARD_ROOM_TYPE = "HardRoomType"
    HARD_CUISINE = "HardCuisine"
    HARD_TRANSPORTATION = "HardTransportation"
    # delivery failures
    STEP_LIMIT_EXCEEDED = "StepLimitExceeded"
    REPEATED_TOOL_LOOP = "RepeatedToolLoop"
    MALFORMED_TOOL_CALL = "MalformedToolCall"
    OUTLINE_INFEASIBLE = "OutlineInfeasible"
    DAY_PLAN_FAILED = "DayPlanFailed"


DELIVERY_FAILURE_CODES = frozenset(
    {
        ErrorCode.STEP_LIMIT_EXCEEDED,
        ErrorCode.REPEATED_TOOL_LOOP,
        ErrorCode.MALFORMED_TOOL_CALL,
        ErrorCode.OUTLINE_INFEASIBLE,
        ErrorCode.DAY_PLAN_FAILED,
    }
)

# findings that mark a candidate as unusable rather than merely imperfect
SIGNIFICANT_CODES = frozenset(
    {
        ErrorCode.HALLUCINATED_INFORMATION,
        ErrorCode.NECESSARY_INFORMATION_ABSENT,
    }
)
