"""Cross-period cohort tracking: survival, breakdowns, careers, mobility.

All functions here work on plain membership sets and attribute lookups, so
they can be driven either by the scoring pipeline or directly with synthetic
membership data. Display values (whole-percent shares, two-decimal indices)
are derived from the raw counts with half-up rounding; raw values are always
kept alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import pandas as pd

from .errors import ValidationError
from .model import MACRO_REGIONS, RANK_ORDER, PeriodWindow, check_consecutive
from .rounding import index_display, index_value, pct_display, share

ALL_PERIODS_ON_STAFF = "all_periods_on_staff"
PAIRWISE_ON_STAFF = "pairwise_on_staff"
SURVIVAL_CONSTRAINTS = (ALL_PERIODS_ON_STAFF, PAIRWISE_ON_STAFF)

UNKNOWN_GROUP = "unknown"


def _members(value) -> frozenset[str]:
    if hasattr(value, "members"):
        return frozenset(value.members)
    return frozenset(value)


@dataclass(frozen=True)
class SurvivalFrame:
    """Base cohort restricted to researchers still on staff later on.

    ``base_members`` applies the joint constraint (on staff in every follow
    period); ``pairwise_bases`` relaxes it to one follow period at a time and
    is what pair intersections are measured against under the pairwise
    constraint.
    """

    base_label: str
    follow_labels: tuple[str, ...]
    constraint: str
    base_members: frozenset[str]
    pairwise_bases: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def pair_base(self, label: str) -> frozenset[str]:
        if self.constraint == PAIRWISE_ON_STAFF:
            return self.pairwise_bases[label]
        return self.base_members


def build_survival_frame(
    base_cohort: Iterable[str],
    eligibility: Mapping[str, object],
    periods: Sequence[PeriodWindow],
    base_label: str = "A",
    follow_labels: Sequence[str] | None = None,
    constraint: str = ALL_PERIODS_ON_STAFF,
) -> SurvivalFrame:
    """Restrict a first-period cohort to researchers on staff per the constraint."""
    if constraint not in SURVIVAL_CONSTRAINTS:
        raise ValidationError(f"unknown survival constraint {constraint!r}")
    ordered = check_consecutive(periods)
    labels = [p.label for p in ordered]
    if base_label not in labels:
        raise ValidationError(f"base period {base_label!r} not among {labels}")
    if follow_labels is None:
        follow_labels = tuple(l for l in labels if l != base_label)
    missing = [l for l in (base_label, *follow_labels) if l not in eligibility]
    if missing:
        raise ValidationError(f"eligibility sets missing for periods: {missing}")

    base = frozenset(base_cohort) & _members(eligibility[base_label])
    pairwise = {label: base & _members(eligibility[label]) for label in follow_labels}
    joint = base
    for label in follow_labels:
        joint &= pairwise[label]
    return SurvivalFrame(
        base_label=base_label,
        follow_labels=tuple(follow_labels),
        constraint=constraint,
        base_members=joint if constraint == ALL_PERIODS_ON_STAFF else base,
        pairwise_bases=pairwise,
    )


@dataclass(frozen=True)
class LongevityReport:
    """Counts of base-cohort members still in the cohort in later periods."""

    base_label: str
    follow_labels: tuple[str, ...]
    base_count: int
    pair_counts: Mapping[str, int]
    pair_bases: Mapping[str, int]
    joint_count: int
    joint_base: int
    joint_members: frozenset[str]
    pair_members: Mapping[str, frozenset[str]]

    def pair_share(self, label: str) -> float | None:
        return share(self.pair_counts[label], self.pair_bases[label])

    def pair_share_pct(self, label: str) -> float | None:
        return pct_display(self.pair_counts[label], self.pair_bases[label])

    @property
    def joint_share(self) -> float | None:
        return share(self.joint_count, self.joint_base)

    @property
    def joint_share_pct(self) -> float | None:
        return pct_display(self.joint_count, self.joint_base)


def cohort_intersections(
    frame: SurvivalFrame, cohorts: Mapping[str, Iterable[str]]
) -> LongevityReport:
    """Intersect the surviving base cohort with each follow period's cohort."""
    follow_sets = {label: frozenset(cohorts[label]) for label in frame.follow_labels}
    pair_members = {}
    pair_counts = {}
    pair_bases = {}
    for label in frame.follow_labels:
        base = frame.pair_base(label)
        members = base & follow_sets[label]
        pair_members[label] = members
        pair_counts[label] = len(members)
        pair_bases[label] = len(base)
    joint = frame.base_members if frame.constraint == ALL_PERIODS_ON_STAFF else None
    if joint is None:
        joint = frame.base_members
        for label in frame.follow_labels:
            joint = joint & _members(frame.pairwise_bases[label])
    joint_members = joint
    for label in frame.follow_labels:
        joint_members = joint_members & follow_sets[label]
    return LongevityReport(
        base_label=frame.base_label,
        follow_labels=frame.follow_labels,
        base_count=len(frame.base_members),
        pair_counts=pair_counts,
        pair_bases=pair_bases,
        joint_count=len(joint_members),
        joint_base=len(joint),
        joint_members=joint_members,
        pair_members=pair_members,
    )


@dataclass(frozen=True)
class ConcentrationRow:
    """One group's persistence relative to its weight in the base cohort.

    The concentration index is the group's share of the persistent cohort
    divided by its share of the base cohort; 1 means proportional
    representation.
    """

    group: str
    base_count: int
    base_total: int
    persistent_count: int
    persistent_total: int

    @property
    def base_share(self) -> float | None:
        return share(self.base_count, self.base_total)

    @property
    def base_share_pct(self) -> float | None:
        return pct_display(self.base_count, self.base_total)

    @property
    def persistent_share(self) -> float | None:
        return share(self.persistent_count, self.persistent_total)

    @property
    def persistent_share_pct(self) -> float | None:
        return pct_display(self.persistent_count, self.persistent_total)

    @property
    def persistence_share(self) -> float | None:
        return share(self.persistent_count, self.base_count)

    @property
    def persistence_share_pct(self) -> float | None:
        return pct_display(self.persistent_count, self.base_count)

    @property
    def concentration_index(self) -> float | None:
        return index_value(
            self.persistent_count, self.persistent_total, self.base_count, self.base_total
        )

    @property
    def concentration_index_display(self) -> float | None:
        return index_display(
            self.persistent_count, self.persistent_total, self.base_count, self.base_total
        )


def concentration_table(
    frame: SurvivalFrame,
    report: LongevityReport,
    attribute: Mapping[str, str | None],
) -> list[ConcentrationRow]:
    """Group the base and persistent cohorts by a frozen member attribute.

    Members without the attribute are collected in an ``unknown`` row, kept
    last; other rows are ordered lexicographically.
    """
    base = frame.base_members
    persistent = report.joint_members
    by_group: dict[str, list[int]] = {}
    for member in base:
        group = attribute.get(member) or UNKNOWN_GROUP
        counts = by_group.setdefault(group, [0, 0])
        counts[0] += 1
        if member in persistent:
            counts[1] += 1
    labels = sorted(g for g in by_group if g != UNKNOWN_GROUP)
    if UNKNOWN_GROUP in by_group:
        labels.append(UNKNOWN_GROUP)
    return [
        ConcentrationRow(
            group=label,
            base_count=by_group[label][0],
            base_total=len(base),
            persistent_count=by_group[label][1],
            persistent_total=len(persistent),
        )
        for label in labels
    ]


@dataclass(frozen=True)
class UdaLongevityRow:
    uda: str
    base_count: int
    pair_counts: Mapping[str, int]
    joint_count: int

    def pair_share_pct(self, label: str) -> float | None:
        return pct_display(self.pair_counts[label], self.base_count)

    @property
    def joint_share_pct(self) -> float | None:
        return pct_display(self.joint_count, self.base_count)


def uda_longevity_table(
    frame: SurvivalFrame,
    report: LongevityReport,
    uda_attribute: Mapping[str, str | None],
) -> list[UdaLongevityRow]:
    """Per-discipline survival counts with shares of each discipline's base."""
    groups: dict[str, dict[str, int]] = {}
    for member in frame.base_members:
        uda = uda_attribute.get(member) or UNKNOWN_GROUP
        cell = groups.setdefault(
            uda, {"base": 0, "joint": 0, **{l: 0 for l in frame.follow_labels}}
        )
        cell["base"] += 1
        if member in report.joint_members:
            cell["joint"] += 1
        for label in frame.follow_labels:
            if member in report.pair_members[label]:
                cell[label] += 1
    labels = sorted(g for g in groups if g != UNKNOWN_GROUP)
    if UNKNOWN_GROUP in groups:
        labels.append(UNKNOWN_GROUP)
    return [
        UdaLongevityRow(
            uda=label,
            base_count=groups[label]["base"],
            pair_counts={l: groups[label][l] for l in frame.follow_labels},
            joint_count=groups[label]["joint"],
        )
        for label in labels
    ]


def last_known(history: Mapping[int, str], year: int) -> str | None:
    """Value at the latest year <= `year`; None when nothing is known yet."""
    best_year = None
    best = None
    for y, value in history.items():
        if y <= year and value is not None and (best_year is None or y > best_year):
            best_year = y
            best = value
    return best


def rank_histories(roster: pd.DataFrame, members: Iterable[str]) -> dict[str, dict[int, str]]:
    return _histories(roster, members, "rank")


def region_histories(roster: pd.DataFrame, members: Iterable[str]) -> dict[str, dict[int, str]]:
    return _histories(roster, members, "macro_region")


def _histories(roster: pd.DataFrame, members: Iterable[str], column: str) -> dict[str, dict[int, str]]:
    wanted = set(members)
    rows = roster[roster["researcher_id"].isin(wanted)]
    out: dict[str, dict[int, str]] = {rid: {} for rid in wanted}
    for rid, year, value in zip(rows["researcher_id"], rows["year"], rows[column]):
        if isinstance(value, str):
            out[rid][int(year)] = value
    return out


@dataclass(frozen=True)
class CareerRow:
    cohort: str
    start_rank: str
    members: int
    outcome: str  # "never_promoted" for ts, "promoted" for un
    outcome_count: int

    @property
    def outcome_share(self) -> float | None:
        return share(self.outcome_count, self.members)

    @property
    def outcome_share_pct(self) -> float | None:
        return pct_display(self.outcome_count, self.members)


@dataclass(frozen=True)
class CareerReport:
    rows: tuple[CareerRow, ...]
    excluded_unknown_rank: Mapping[str, int]


def career_progression(
    persistent_ts: Iterable[str],
    persistent_un: Iterable[str],
    rank_history: Mapping[str, Mapping[int, str]],
    baseline_year: int,
    final_year: int,
) -> CareerReport:
    """Promotion outcomes of the persistent cohorts.

    Start rank is the rank held at the end of the base period (last known
    value carried forward); a member counts as promoted when any year up to
    `final_year` shows a strictly higher rank. Members with no known rank are
    excluded and counted.
    """
    rows: list[CareerRow] = []
    excluded: dict[str, int] = {}
    cohorts = (("ts", frozenset(persistent_ts)), ("un", frozenset(persistent_un)))
    for cohort_name, members in cohorts:
        start_ranks: dict[str, str] = {}
        promoted: set[str] = set()
        skipped = 0
        for member in members:
            history = rank_history.get(member, {})
            start = last_known(history, baseline_year)
            if start is None:
                skipped += 1
                continue
            start_ranks[member] = start
            start_level = RANK_ORDER[start]
            if any(
                y <= final_year and RANK_ORDER.get(r, -1) > start_level
                for y, r in history.items()
            ):
                promoted.add(member)
        excluded[cohort_name] = skipped
        for start_rank in ("assistant", "associate"):
            pool = [m for m, r in start_ranks.items() if r == start_rank]
            if cohort_name == "ts":
                count = sum(1 for m in pool if m not in promoted)
                outcome = "never_promoted"
            else:
                count = sum(1 for m in pool if m in promoted)
                outcome = "promoted"
            rows.append(CareerRow(cohort_name, start_rank, len(pool), outcome, count))
    return CareerReport(tuple(rows), excluded)


@dataclass(frozen=True)
class RegionFlow:
    region: str
    inflow: int
    outflow: int

    @property
    def net(self) -> int:
        return self.inflow - self.outflow


@dataclass(frozen=True)
class MobilityCohortReport:
    cohort: str
    size: int
    movers: int
    flows: tuple[RegionFlow, ...]

    @property
    def mover_share(self) -> float | None:
        return share(self.movers, self.size)

    @property
    def mover_share_pct(self) -> float | None:
        # mover shares are small; keep two decimals of a percent
        return pct_display(self.movers, self.size, digits=2)


@dataclass(frozen=True)
class MobilityReport:
    cohorts: tuple[MobilityCohortReport, ...]


def mobility_report(
    cohorts: Mapping[str, Iterable[str]],
    region_history: Mapping[str, Mapping[int, str]],
    baseline_year: int,
    final_year: int,
    regions: Sequence[str] = MACRO_REGIONS,
) -> MobilityReport:
    """Macro-region movers per cohort plus per-region net in/outflows.

    A member moves when the region at the end of the last period differs from
    the region at the end of the base period (last known values).
    """
    reports = []
    for cohort_name in sorted(cohorts):
        members = frozenset(cohorts[cohort_name])
        movers = 0
        inflow = {r: 0 for r in regions}
        outflow = {r: 0 for r in regions}
        for member in members:
            history = region_history.get(member, {})
            start = last_known(history, baseline_year)
            end = last_known(history, final_year)
            if start is None or end is None or start == end:
                continue
            movers += 1
            outflow[start] = outflow.get(start, 0) + 1
            inflow[end] = inflow.get(end, 0) + 1
        flows = tuple(RegionFlow(r, inflow[r], outflow[r]) for r in regions)
        reports.append(MobilityCohortReport(cohort_name, len(members), movers, flows))
    return MobilityReport(tuple(reports))
