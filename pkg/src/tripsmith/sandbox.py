"""CSV-backed travel database and the search tools the agents call.

The database is loaded once per process and never mutated; every search is a
pure lookup over the loaded rows. City matching is case-insensitive
throughout, but results carry the spelling found in the data files.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .domain import (
    Accommodation,
    Attraction,
    Distance,
    DomainError,
    Flight,
    Restaurant,
    parse_iso_date,
    parse_money,
)

logger = logging.getLogger(__name__)

TRANSPORT_MODES = ("self-driving", "taxi")

FLIGHT_COLUMNS = (
    "Flight Number",
    "Price",
    "DepTime",
    "ArrTime",
    "OriginCityName",
    "DestCityName",
    "FlightDate",
)
ACCOMMODATION_COLUMNS = (
    "Accommodation",
    "Room type",
    "Price",
    "Minimum number of nights stay",
    "review rate number",
    "House rules",
    "One room can accommodate how many people",
    "City",
)
RESTAURANT_COLUMNS = ("Restaurant", "City", "Cuisines", "Average Cost", "Rating")
ATTRACTION_COLUMNS = ("Attraction Name", "City")
DISTANCE_COLUMNS = ("OriginCityName", "DestCityName", "Mode", "Distance", "Duration", "Cost")
CITY_COLUMNS = ("State", "City")

DATA_FILES = {
    "flights": "flights.csv",
    "accommodations": "accommodations.csv",
    "restaurants": "restaurants.csv",
    "attractions": "attractions.csv",
    "distances": "distances.csv",
    "cities": "cities.csv",
}


class DataError(DomainError):
    """Raised when the data files are missing, malformed, or inconsistent."""


def _norm(name: str) -> str:
    """Key used for case-insensitive city / name comparisons."""
    return " ".join(name.split()).casefold()


def _as_date(value: dt.date | str) -> dt.date:
    if isinstance(value, dt.date):
        return value
    return parse_iso_date(value)


@dataclass
class TravelDatabase:
    """All sandbox rows plus the lookup indices the tools use."""

    flights: tuple[Flight, ...]
    accommodations: tuple[Accommodation, ...]
    restaurants: tuple[Restaurant, ...]
    attractions: tuple[Attraction, ...]
    distances: tuple[Distance, ...]
    cities_by_state: dict[str, tuple[str, ...]]

    _city_canonical: dict[str, str] = field(init=False, repr=False)
    _state_canonical: dict[str, str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._city_canonical = {}
        for cities in self.cities_by_state.values():
            for city in cities:
                self._city_canonical.setdefault(_norm(city), city)
        self._state_canonical = {_norm(s): s for s in self.cities_by_state}
        self._check_city_coverage()

    def _check_city_coverage(self) -> None:
        known = set(self._city_canonical)
        for flight in self.flights:
            for city in (flight.origin_city, flight.dest_city):
                if _norm(city) not in known:
                    raise DataError(f"flight {flight.number} names unknown city {city!r}")
        for distance in self.distances:
            for city in (distance.origin_city, distance.dest_city):
                if _norm(city) not in known:
                    raise DataError(f"distance record names unknown city {city!r}")

    # -- lookups used across the pipeline ---------------------------------

    def canonical_city(self, name: str) -> str | None:
        """Data-file spelling of `name`, or None if the city is unknown."""
        return self._city_canonical.get(_norm(name))

    def all_cities(self) -> tuple[str, ...]:
        return tuple(self._city_canonical.values())

    def counts(self) -> dict[str, int]:
        return {
            "flights": len(self.flights),
            "accommodations": len(self.accommodations),
            "restaurants": len(self.restaurants),
            "attractions": len(self.attractions),
            "distances": len(self.distances),
            "cities": len(self._city_canonical),
        }

    # -- the search tools ---------------------------------------------------

    def flight_search(self, origin: str, dest: str, date: dt.date | str) -> tuple[Flight, ...]:
        """Flights from `origin` to `dest` on `date`, ordered by departure time."""
        when = _as_date(date)
        o, d = _norm(origin), _norm(dest)
        hits = [
            f
            for f in self.flights
            if _norm(f.origin_city) == o and _norm(f.dest_city) == d and f.date == when
        ]
        hits.sort(key=lambda f: (f.dep_time, f.number))
        return tuple(hits)

    def distance_matrix(self, origin: str, dest: str, mode: str) -> Distance | None:
        """The one distance record for the leg, or None (same-city included)."""
        if _norm(origin) == _norm(dest):
            return None
        o, d, m = _norm(origin), _norm(dest), mode.strip().casefold()
        for record in self.distances:
            if (
                _norm(record.origin_city) == o
                and _norm(record.dest_city) == d
                and record.mode.casefold() == m
            ):
                return record
        return None

    def accommodation_search(self, city: str) -> tuple[Accommodation, ...]:
        key = _norm(city)
        return tuple(a for a in self.accommodations if _norm(a.city) == key)

    def restaurant_search(self, city: str) -> tuple[Restaurant, ...]:
        key = _norm(city)
        return tuple(r for r in self.restaurants if _norm(r.city) == key)

    def attraction_search(self, city: str) -> tuple[Attraction, ...]:
        key = _norm(city)
        return tuple(a for a in self.attractions if _norm(a.city) == key)

    def city_search(self, state: str) -> tuple[str, ...]:
        canonical = self._state_canonical.get(_norm(state))
        if canonical is None:
            return ()
        return self.cities_by_state[canonical]

    # -- exact-record lookups used by the verifier -------------------------

    def find_flight(self, number: str) -> Flight | None:
        key = number.strip().casefold()
        for f in self.flights:
            if f.number.casefold() == key:
                return f
        return None

    def find_accommodation(self, name: str, city: str) -> Accommodation | None:
        n, c = _norm(name), _norm(city)
        for a in self.accommodations:
            if _norm(a.name) == n and _norm(a.city) == c:
                return a
        return None

    def find_restaurant(self, name: str, city: str) -> Restaurant | None:
        n, c = _norm(name), _norm(city)
        for r in self.restaurants:
            if _norm(r.name) == n and _norm(r.city) == c:
                return r
        return None

    def find_attraction(self, name: str, city: str) -> Attraction | None:
        n, c = _norm(name), _norm(city)
        for a in self.attractions:
            if _norm(a.name) == n and _norm(a.city) == c:
                return a
        return None


# ---------------------------------------------------------------------------
# loading


def _read_rows(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise DataError(f"data file missing: {path}")
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = tuple(reader.fieldnames or ())
        if set(header) != set(columns):
            missing = sorted(set(columns) - set(header))
            extra = sorted(set(header) - set(columns))
            detail = []
            if missing:
                detail.append(f"missing columns {missing}")
            if extra:
                detail.append(f"unknown columns {extra}")
            raise DataError(f"{path.name}: {'; '.join(detail)}")
        return list(reader)


def _row_int(row: dict[str, str], column: str, path_name: str) -> int:
    raw = row[column].strip()
    try:
        return int(float(raw)) if "." in raw else int(raw)
    except ValueError:
        raise DataError(f"{path_name}: bad integer in column {column!r}: {raw!r}") from None


def _row_float(row: dict[str, str], column: str, path_name: str) -> float:
    raw = row[column].strip()
    try:
        return float(raw) if raw else 0.0
    except ValueError:
        raise DataError(f"{path_name}: bad number in column {column!r}: {raw!r}") from None


def _row_money(row: dict[str, str], column: str, path_name: str) -> int:
    raw = row[column].strip()
    try:
        return parse_money(raw)
    except DomainError:
        raise DataError(f"{path_name}: bad price in column {column!r}: {raw!r}") from None


def load_database(data_dir: Path | str) -> TravelDatabase:
    """Load the sandbox from a directory of CSV files.

    Expects flights.csv, accommodations.csv, restaurants.csv,
    attractions.csv, distances.csv, and cities.csv with the canonical
    column headings (see the module constants).
    """
    root = Path(data_dir)
    if not root.is_dir():
        raise DataError(f"data directory not found: {root}")

    flights: list[Flight] = []
    seen_numbers: dict[str, int] = {}
    name = DATA_FILES["flights"]
    for i, row in enumerate(_read_rows(root / name, FLIGHT_COLUMNS), start=2):
        flight = Flight(
            number=row["Flight Number"].strip(),
            price_cents=_row_money(row, "Price", name),
            dep_time=row["DepTime"].strip(),
            arr_time=row["ArrTime"].strip(),
            origin_city=row["OriginCityName"].strip(),
            dest_city=row["DestCityName"].strip(),
            date=parse_iso_date(row["FlightDate"]),
        )
        key = flight.number.casefold()
        if key in seen_numbers:
            raise DataError(
                f"{name}: duplicate flight number {flight.number!r} (rows {seen_numbers[key]} and {i})"
            )
        seen_numbers[key] = i
        flights.append(flight)

    accommodations: list[Accommodation] = []
    name = DATA_FILES["accommodations"]
    for row in _read_rows(root / name, ACCOMMODATION_COLUMNS):
        rules_raw = row["House rules"].strip()
        rules = tuple(part.strip() for part in rules_raw.split("&") if part.strip())
        accommodations.append(
            Accommodation(
                name=row["Accommodation"].strip(),
                room_type=row["Room type"].strip(),
                price_cents=_row_money(row, "Price", name),
                min_nights=_row_int(row, "Minimum number of nights stay", name),
                review_rate=_row_float(row, "review rate number", name),
                house_rules=rules,
                max_occupancy=_row_int(row, "One room can accommodate how many people", name),
                city=row["City"].strip(),
            )
        )

    restaurants: list[Restaurant] = []
    name = DATA_FILES["restaurants"]
    for row in _read_rows(root / name, RESTAURANT_COLUMNS):
        cuisines = tuple(c.strip() for c in row["Cuisines"].split(",") if c.strip())
        restaurants.append(
            Restaurant(
                name=row["Restaurant"].strip(),
                city=row["City"].strip(),
                cuisines=cuisines,
                avg_cost_cents=_row_money(row, "Average Cost", name),
                rating=_row_float(row, "Rating", name),
            )
        )

    attractions: list[Attraction] = []
    name = DATA_FILES["attractions"]
    for row in _read_rows(root / name, ATTRACTION_COLUMNS):
        attractions.append(Attraction(name=row["Attraction Name"].strip(), city=row["City"].strip()))

    distances: list[Distance] = []
    name = DATA_FILES["distances"]
    for row in _read_rows(root / name, DISTANCE_COLUMNS):
        mode = row["Mode"].strip().casefold()
        if mode not in TRANSPORT_MODES:
            raise DataError(f"{name}: unknown mode {row['Mode']!r} (want one of {TRANSPORT_MODES})")
        distances.append(
            Distance(
                origin_city=row["OriginCityName"].strip(),
                dest_city=row["DestCityName"].strip(),
                mode=mode,
                distance_km=_row_float(row, "Distance", name),
                duration_hours=_row_float(row, "Duration", name),
                cost_cents=_row_money(row, "Cost", name),
            )
        )

    cities_by_state: dict[str, list[str]] = {}
    name = DATA_FILES["cities"]
    for row in _read_rows(root / name, CITY_COLUMNS):
        state = row["State"].strip()
        city = row["City"].strip()
        if not state or not city:
            raise DataError(f"{name}: blank state or city")
        cities_by_state.setdefault(state, [])
        if city not in cities_by_state[state]:
            cities_by_state[state].append(city)

    db = TravelDatabase(
        flights=tuple(flights),
        accommodations=tuple(accommodations),
        restaurants=tuple(restaurants),
        attractions=tuple(attractions),
        distances=tuple(distances),
        cities_by_state={s: tuple(v) for s, v in cities_by_state.items()},
    )
    logger.info("loaded travel database: %s", db.counts())
    return db
