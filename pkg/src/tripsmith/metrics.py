"""Benchmark metrics over a corpus of run outcomes.

Micro rates divide constraints passed by constraints checked; macro rates
divide plans with a clean sweep by plans attempted. An undelivered run
counts every one of its constraints as failed. All rates are exact
fractions; rendering rounds, the numbers themselves never do.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .domain import DomainError, ErrorCode, TravelPlan
from .verify import COMMONSENSE_DIMENSIONS, ConstraintReport


class MetricsError(DomainError):
    pass


@dataclass(frozen=True)
class RunOutcome:
    """What one query's run produced, reduced to what scoring needs."""

    query_id: str
    delivered: bool
    delivery_failure: str | None  # ErrorCode value when not delivered
    steps_used: int
    hard_keys: tuple[str, ...]
    report: ConstraintReport | None = None
    plan: TravelPlan | None = None

    def __post_init__(self) -> None:
        if self.delivered and self.report is None:
            raise MetricsError(f"{self.query_id}: delivered but has no report")
        if self.delivered and self.delivery_failure is not None:
            raise MetricsError(f"{self.query_id}: delivered yet carries a failure code")
        if not self.delivered and self.delivery_failure is None:
            raise MetricsError(f"{self.query_id}: undelivered with no failure code")
        if not self.hard_keys:
            raise MetricsError(f"{self.query_id}: no hard-constraint keys (budget is always one)")

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "delivered": self.delivered,
            "delivery_failure": self.delivery_failure,
            "steps_used": self.steps_used,
            "hard_keys": list(self.hard_keys),
            "report": self.report.to_json() if self.report else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> RunOutcome:
        return cls(
            query_id=obj["query_id"],
            delivered=obj["delivered"],
            delivery_failure=obj.get("delivery_failure"),
            steps_used=obj.get("steps_used", 0),
            hard_keys=tuple(obj["hard_keys"]),
            report=ConstraintReport.from_json(obj["report"]) if obj.get("report") else None,
        )


def _require(outcomes: Sequence[RunOutcome]) -> None:
    if not outcomes:
        raise MetricsError("no outcomes to score")


def delivery_rate(outcomes: Sequence[RunOutcome]) -> Fraction:
    _require(outcomes)
    return Fraction(sum(1 for o in outcomes if o.delivered), len(outcomes))


def _counts(outcome: RunOutcome, family: str) -> tuple[int, int]:
    """(passed, total) constraints for one outcome in one family."""
    if family == "commonsense":
        total = len(COMMONSENSE_DIMENSIONS)
        if not outcome.delivered:
            return 0, total
        assert outcome.report is not None
        return sum(outcome.report.passed_commonsense.values()), total
    if family == "hard":
        if not outcome.delivered:
            return 0, len(outcome.hard_keys)
        assert outcome.report is not None
        return sum(outcome.report.passed_hard.values()), len(outcome.report.passed_hard)
    raise MetricsError(f"unknown constraint family {family!r}")


def micro_pass_rate(outcomes: Sequence[RunOutcome], family: str) -> Fraction:
    _require(outcomes)
    passed = total = 0
    for outcome in outcomes:
        p, t = _counts(outcome, family)
        passed += p
        total += t
    if total == 0:
        raise MetricsError(f"no {family} constraints in the corpus")
    return Fraction(passed, total)


def macro_pass_rate(outcomes: Sequence[RunOutcome], family: str) -> Fraction:
    _require(outcomes)
    clean = 0
    for outcome in outcomes:
        p, t = _counts(outcome, family)
        if outcome.delivered and p == t:
            clean += 1
    return Fraction(clean, len(outcomes))


def final_pass_rate(outcomes: Sequence[RunOutcome]) -> Fraction:
    """Plans that delivered and passed every constraint of both families."""
    _require(outcomes)
    clean = 0
    for outcome in outcomes:
        if not outcome.delivered:
            continue
        assert outcome.report is not None
        if outcome.report.all_passed:
            clean += 1
    return Fraction(clean, len(outcomes))


def error_histogram(outcomes: Sequence[RunOutcome]) -> dict[str, int]:
    """Finding codes across delivered plans, plus delivery-failure codes."""
    counter: Counter[str] = Counter()
    for outcome in outcomes:
        if outcome.delivered:
            assert outcome.report is not None
            for finding in outcome.report.findings:
                counter[finding.code.value] += 1
        else:
            counter[outcome.delivery_failure or "unknown"] += 1
    return dict(sorted(counter.items()))


@dataclass(frozen=True)
class CorpusReport:
    n_queries: int
    delivery: Fraction
    micro_commonsense: Fraction
    macro_commonsense: Fraction
    micro_hard: Fraction
    macro_hard: Fraction
    final: Fraction
    histogram: dict[str, int]

    def to_json(self) -> dict:
        def cell(value: Fraction) -> dict:
            return {
                "value": float(value),
                "exact": f"{value.numerator}/{value.denominator}",
            }

        return {
            "n_queries": self.n_queries,
            "delivery_rate": cell(self.delivery),
            "commonsense_micro": cell(self.micro_commonsense),
            "commonsense_macro": cell(self.macro_commonsense),
            "hard_micro": cell(self.micro_hard),
            "hard_macro": cell(self.macro_hard),
            "final_pass_rate": cell(self.final),
            "error_histogram": dict(self.histogram),
        }

    def render_table(self) -> str:
        def pct(value: Fraction) -> str:
            return f"{float(value) * 100:.1f}"

        headers = (
            "Queries",
            "Delivery",
            "Commonsense micro",
            "Commonsense macro",
            "Hard micro",
            "Hard macro",
            "Final",
        )
        row = (
            str(self.n_queries),
            pct(self.delivery),
            pct(self.micro_commonsense),
            pct(self.macro_commonsense),
            pct(self.micro_hard),
            pct(self.macro_hard),
            pct(self.final),
        )
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
            "  ".join(v.ljust(w) for v, w in zip(row, widths)),
        ]
        if self.histogram:
            lines.append("")
            lines.append("Errors:")
            lines.extend(f"  {code}: {count}" for code, count in self.histogram.items())
        return "\n".join(lines) + "\n"


def corpus_report(outcomes: Sequence[RunOutcome]) -> CorpusReport:
    _require(outcomes)
    return CorpusReport(
        n_queries=len(outcomes),
        delivery=delivery_rate(outcomes),
        micro_commonsense=micro_pass_rate(outcomes, "commonsense"),
        macro_commonsense=macro_pass_rate(outcomes, "commonsense"),
        micro_hard=micro_pass_rate(outcomes, "hard"),
        macro_hard=macro_pass_rate(outcomes, "hard"),
        final=final_pass_rate(outcomes),
        histogram=error_histogram(outcomes),
    )
