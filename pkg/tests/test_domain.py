"""Core vocabulary: money, records, constraints, plan documents."""

from __future__ import annotations

import datetime as dt
import json

import pytest
from hypothesis import given, strategies as st

from tripsmith.domain import (
    EMPTY,
    PLAN_KEYS,
    Accommodation,
    Attraction,
    DailyPlan,
    Distance,
    DomainError,
    Flight,
    HardConstraintSet,
    PlanDocumentError,
    QueryError,
    Restaurant,
    RoomRule,
    RoomType,
    TransportBan,
    TravelPlan,
    TravelQuery,
    daily_budget_line,
    day_to_json,
    format_money,
    format_record,
    hard_constraints_text,
    ordinal_word,
    parse_day_object,
    parse_iso_date,
    parse_money,
    parse_plan_document,
    prose_date,
    query_from_json,
    query_to_json,
    room_type_matches,
    rooms_required,
    serialize_plan,
)


# ---------------------------------------------------------------------------
# money


@pytest.mark.parametrize(
    "raw, cents",
    [
        (3200, 320000),
        ("$3,200", 320000),
        ("1,100", 110000),
        ("754", 75400),
        (28.5, 2850),
        ("28.5", 2850),
        ("$0.75", 75),
    ],
)
def test_parse_money_forms(raw, cents):
    assert parse_money(raw) == cents


@pytest.mark.parametrize("raw", ["", "$", "abc", "12.345", 12.345])
def test_parse_money_rejects_garbage(raw):
    with pytest.raises(DomainError):
        parse_money(raw)


def test_format_money_styles():
    assert format_money(24000) == "240"
    assert format_money(2850) == "28.5"
    assert format_money(75) == "0.75"


@given(st.integers(min_value=0, max_value=10_000_000))
def test_money_round_trips(cents):
    assert parse_money(format_money(cents)) == cents


def test_ordinal_words():
    assert [ordinal_word(d) for d in range(1, 8)] == [
        "First", "Second", "Third", "Fourth", "Fifth", "Sixth", "Seventh",
    ]
    with pytest.raises(ValueError):
        ordinal_word(0)
    with pytest.raises(ValueError):
        ordinal_word(8)


def test_prose_date_unpadded():
    assert prose_date(dt.date(2022, 3, 4)) == "March 4"
    with pytest.raises(DomainError):
        parse_iso_date("03/04/2022")


# ---------------------------------------------------------------------------
# record rendering


def test_flight_record_line():
    flight = Flight(
        number="F3502691",
        price_cents=18200,
        dep_time="11:30",
        arr_time="13:37",
        origin_city="Atlanta",
        dest_city="Buffalo",
        date=dt.date(2022, 3, 4),
    )
    assert format_record(flight) == (
        "Flight Number: F3502691; Price: 182; DepTime: 11:30; ArrTime: 13:37; "
        "OriginCityName: Atlanta; DestCityName: Buffalo"
    )


def test_accommodation_record_line():
    record = Accommodation(
        name="Fantastic Room in Bushwick",
        room_type="Private room",
        price_cents=106900,
        min_nights=2,
        review_rate=3.0,
        house_rules=("No children under 10",),
        max_occupancy=2,
        city="Atlanta",
    )
    assert format_record(record) == (
        "Accommodation: Fantastic Room in Bushwick; Room type: Private room; "
        "Price: 1069.0; Minimum number of nights stay: 2.0; "
        "review rate number: 3.0; House rules: No children under 10; "
        "One room can accommodate how many people: 2; City: Atlanta"
    )


def test_restaurant_record_line_and_empty_cuisines():
    record = Restaurant(
        name="Barkat", city="Atlanta", cuisines=("Indian", "Vegetarian"),
        avg_cost_cents=1400, rating=4.3,
    )
    assert format_record(record) == (
        "Restaurant: Barkat; City: Atlanta; Cuisines: Indian, Vegetarian; "
        "Average Cost: 14; Rating: 4.3"
    )
    bare = Restaurant(name="X", city="Y", cuisines=(), avg_cost_cents=0, rating=0.0)
    assert format_record(bare) == (
        "Restaurant: X; City: Y; Cuisines: ; Average Cost: 0; Rating: 0"
    )


def test_attraction_and_distance_record_lines():
    assert format_record(Attraction(name="Waikiki Beach", city="Honolulu")) == (
        "Attraction Name: Waikiki Beach; City: Honolulu"
    )
    record = Distance(
        origin_city="Buffalo", dest_city="Atlanta", mode="self-driving",
        distance_km=1448.0, duration_hours=13.5, cost_cents=7200,
    )
    assert format_record(record) == (
        "Mode: self-driving; OriginCityName: Buffalo; DestCityName: Atlanta; "
        "Distance: 1448 km; Duration: 13.5 hours; Cost: 72"
    )


# ---------------------------------------------------------------------------
# constraint vocabulary


def test_room_rule_banned_form():
    assert RoomRule.PARTIES.banned_form == "No parties"
    assert RoomRule.CHILDREN.banned_form == "No children under 10"
    assert RoomRule.from_text("Parties") is RoomRule.PARTIES
    with pytest.raises(DomainError):
        RoomRule.from_text("juggling")


def test_room_type_matching():
    assert room_type_matches(RoomType.ENTIRE_HOME, "Entire home/apt")
    assert not room_type_matches(RoomType.ENTIRE_HOME, "Private room")
    assert room_type_matches(RoomType.NOT_SHARED_ROOM, "Private room")
    assert room_type_matches(RoomType.NOT_SHARED_ROOM, "Entire home/apt")
    assert not room_type_matches(RoomType.NOT_SHARED_ROOM, "Shared room")
    assert room_type_matches(RoomType.SHARED_ROOM, "Shared room")


@pytest.mark.parametrize(
    "party, occupancy, rooms",
    [(1, 2, 1), (2, 2, 1), (3, 2, 2), (7, 3, 3), (6, 3, 2), (1, 1, 1)],
)
def test_rooms_required(party, occupancy, rooms):
    assert rooms_required(party, occupancy) == rooms


def test_rooms_required_rejects_nonpositive():
    with pytest.raises(DomainError):
        rooms_required(0, 2)
    with pytest.raises(DomainError):
        rooms_required(2, 0)


# ---------------------------------------------------------------------------
# queries


def test_query_duration_must_be_benchmark_length():
    with pytest.raises(QueryError):
        TravelQuery(
            query_id="bad",
            text="",
            origin_city="Buffalo",
            scope=_city_scope("Atlanta"),
            start_date=dt.date(2022, 3, 2),
            end_date=dt.date(2022, 3, 5),
            party_size=1,
            budget_cents=100000,
        )


def _city_scope(city):
    from tripsmith.domain import DestinationScope

    return DestinationScope(city=city)


def test_query_field_validation(queries):
    query = queries["hnl-001"]
    assert query.duration_days == 3
    assert query.date_for_day(1) == dt.date(2022, 3, 4)
    assert query.date_for_day(3) == dt.date(2022, 3, 6)
    with pytest.raises(QueryError):
        query.date_for_day(4)
    with pytest.raises(QueryError):
        TravelQuery(
            query_id="q", text="", origin_city=" ",
            scope=_city_scope("Atlanta"),
            start_date=dt.date(2022, 3, 2), end_date=dt.date(2022, 3, 4),
            party_size=1, budget_cents=1,
        )


def test_query_json_round_trip(queries):
    for query in queries.values():
        assert query_from_json(query_to_json(query)) == query


def test_query_from_json_missing_field():
    with pytest.raises(QueryError, match="origin_city"):
        query_from_json({"query_id": "x", "destination": {"city": "Atlanta"}})


def test_daily_budget_line_honolulu(queries):
    line = daily_budget_line(queries["hnl-001"])
    assert line == (
        "Remember that the total daily expenses of your trip (the sum of "
        "expenses for each person) do not exceed 1066."
    )


@given(
    budget=st.integers(min_value=1, max_value=5_000_000),
    duration=st.sampled_from([3, 5, 7]),
)
def test_daily_budget_line_is_floor_division(budget, duration):
    query = TravelQuery(
        query_id="q", text="", origin_city="Buffalo",
        scope=_city_scope("Atlanta"),
        start_date=dt.date(2022, 3, 2),
        end_date=dt.date(2022, 3, 2) + dt.timedelta(days=duration - 1),
        party_size=1, budget_cents=budget,
    )
    expected = budget // duration // 100
    assert f"do not exceed {expected}." in daily_budget_line(query)


def test_hard_constraints_text_atlanta(queries):
    text = hard_constraints_text(queries["atl-002"])
    assert text == (
        "Hard Constraints. Total Budget: The trip must not exceed a total "
        "cost of $1,100, including all transportation, accommodation, "
        "meals, and activities.\n"
        "House Rules: Accommodations must allow parties.\n"
        "Room Type: Accommodations should be a private room.\n"
        "Cuisines: Meals during the trip should cover these cuisines: Indian.\n"
        "Transportation: Do not use self-driving on this trip."
    )


def test_hard_constraints_text_budget_only(queries):
    text = hard_constraints_text(queries["sav-003"])
    assert "Total Budget" in text
    assert "House Rules" not in text
    assert "Transportation" not in text


def test_no_flight_ban_rendering(queries):
    base = queries["sav-003"]
    from dataclasses import replace

    banned = replace(
        base, hard_constraints=HardConstraintSet(transportation=TransportBan.NO_FLIGHT)
    )
    assert "Do not use flights on this trip." in hard_constraints_text(banned)


# ---------------------------------------------------------------------------
# plan documents


def _day(n: int, **overrides) -> dict:
    base = {
        "day": n,
        "current_city": "Honolulu",
        "transportation": "-",
        "breakfast": "-",
        "attraction": "-",
        "lunch": "-",
        "dinner": "-",
        "accommodation": "-",
    }
    base.update(overrides)
    return base


def test_parse_day_object_requires_exact_keys():
    bad = _day(1)
    del bad["lunch"]
    with pytest.raises(PlanDocumentError, match="missing \\['lunch'\\]"):
        parse_day_object(bad, position=1)
    extra = _day(1, notes="x")
    with pytest.raises(PlanDocumentError, match="unexpected \\['notes'\\]"):
        parse_day_object(extra)


def test_parse_day_object_rejects_bool_day_and_blank_fields():
    with pytest.raises(PlanDocumentError, match="'day' must be an integer"):
        parse_day_object(_day(True))
    with pytest.raises(PlanDocumentError, match="is blank"):
        parse_day_object(_day(1, dinner=""))
    with pytest.raises(PlanDocumentError, match="expected an object"):
        parse_day_object(["not", "a", "dict"])


def test_parse_plan_document_day_numbering():
    days = [_day(1), _day(3)]
    with pytest.raises(PlanDocumentError, match="entry 2 holds day 3"):
        parse_plan_document(json.dumps(days))
    with pytest.raises(PlanDocumentError, match="non-empty JSON array"):
        parse_plan_document("{}")
    with pytest.raises(PlanDocumentError, match="not valid JSON"):
        parse_plan_document("nope[")


_field_text = st.one_of(
    st.just(EMPTY),
    st.text(
        alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" ,'&-"),
        min_size=1,
        max_size=40,
    ).filter(lambda s: s.strip()),
)


@given(
    days=st.lists(
        st.fixed_dictionaries(
            {key: _field_text for key in PLAN_KEYS if key != "day"}
        ),
        min_size=1,
        max_size=7,
    )
)
def test_plan_serialize_parse_round_trip(days):
    plan = TravelPlan(
        query_id="q",
        days=tuple(DailyPlan(day=i, **fields) for i, fields in enumerate(days, start=1)),
    )
    parsed = parse_plan_document(serialize_plan(plan), query_id="q")
    assert parsed.days == plan.days


def test_serialize_plan_shape(golden_hnl):
    text = (golden_hnl.run_dir / "plan.json").read_text(encoding="utf-8")
    assert text.endswith("\n")
    data = json.loads(text)
    assert [set(entry) for entry in data] == [set(PLAN_KEYS)] * 3


def test_day_to_json_key_order():
    day = DailyPlan(day=1, current_city="Honolulu", transportation="-", breakfast="-",
                    attraction="-", lunch="-", dinner="-", accommodation="-")
    assert list(day_to_json(day)) == list(PLAN_KEYS)
