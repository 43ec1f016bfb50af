import pytest

from fssrank.errors import ValidationError
from fssrank.longitudinal import (
    ALL_PERIODS_ON_STAFF,
    PAIRWISE_ON_STAFF,
    build_survival_frame,
    career_progression,
    cohort_intersections,
    concentration_table,
    last_known,
    mobility_report,
    rank_histories,
    region_histories,
    uda_longevity_table,
)
from fssrank.model import PeriodWindow

from conftest import PERIODS, make_dataset, staff_years


def _ids(prefix, n):
    return [f"{prefix}{i:05d}" for i in range(n)]


def _eligibility(members):
    return {"A": set(members), "B": set(members), "C": set(members)}


# --- survival frame -----------------------------------------------------------


def test_base_cohort_shrinks_to_later_staff_presence():
    cohort = _ids("T", 3407)
    eligibility = {
        "A": set(cohort),
        "B": set(cohort[300:]),
        "C": set(cohort[:300]) | set(cohort[524:]),
    }
    frame = build_survival_frame(cohort, eligibility, PERIODS)
    assert len(frame.base_members) == 2883
    assert frame.constraint == ALL_PERIODS_ON_STAFF


def test_pairwise_constraint_keeps_per_period_bases():
    cohort = _ids("T", 100)
    eligibility = {
        "A": set(cohort),
        "B": set(cohort[:80]),
        "C": set(cohort[:60]),
    }
    frame = build_survival_frame(cohort, eligibility, PERIODS, constraint=PAIRWISE_ON_STAFF)
    assert len(frame.base_members) == 100
    assert len(frame.pairwise_bases["B"]) == 80
    assert len(frame.pairwise_bases["C"]) == 60
    assert len(frame.pair_base("B")) == 80


def test_two_period_pairwise_frame():
    cohort = _ids("T", 50)
    eligibility = {"A": set(cohort), "B": set(cohort[:40])}
    frame = build_survival_frame(
        cohort,
        eligibility,
        PERIODS[:2],
        follow_labels=("B",),
        constraint=PAIRWISE_ON_STAFF,
    )
    assert frame.follow_labels == ("B",)
    assert len(frame.pair_base("B")) == 40


def test_non_consecutive_periods_rejected():
    bad = (PeriodWindow("A", 2001, 2004), PeriodWindow("B", 2006, 2009), PeriodWindow("C", 2010, 2013))
    with pytest.raises(ValidationError):
        build_survival_frame(["R1"], _eligibility(["R1"]), bad)


def test_missing_eligibility_rejected():
    with pytest.raises(ValidationError):
        build_survival_frame(["R1"], {"A": {"R1"}}, PERIODS)


# --- intersections --------------------------------------------------------------


def test_identical_cohorts_give_full_shares():
    members = set(_ids("T", 40))
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(frame, {"B": members, "C": members})
    assert report.base_count == 40
    assert report.pair_counts == {"B": 40, "C": 40}
    assert report.joint_count == 40
    assert report.pair_share_pct("B") == 100.0
    assert report.joint_share_pct == 100.0


def test_intersections_nest():
    members = _ids("T", 100)
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(
        frame, {"B": set(members[:55]), "C": set(members[20:60])}
    )
    assert report.joint_members <= report.pair_members["B"]
    assert report.joint_members <= report.pair_members["C"]
    assert report.joint_count == len(set(members[20:55]))


def test_pairwise_intersections_use_their_own_bases():
    members = _ids("T", 100)
    eligibility = {"A": set(members), "B": set(members[:80]), "C": set(members[:50])}
    frame = build_survival_frame(members, eligibility, PERIODS, constraint=PAIRWISE_ON_STAFF)
    report = cohort_intersections(frame, {"B": set(members[:40]), "C": set(members)})
    assert report.pair_bases == {"B": 80, "C": 50}
    assert report.pair_counts == {"B": 40, "C": 50}
    # joint intersection is measured on the members eligible everywhere
    assert report.joint_base == 50
    assert report.joint_count == 40


# --- concentration ---------------------------------------------------------------


def test_single_group_has_index_one():
    members = _ids("T", 30)
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(frame, {"B": set(members[:12]), "C": set(members[:9])})
    rows = concentration_table(frame, report, {m: "everyone" for m in members})
    assert len(rows) == 1
    assert rows[0].concentration_index == pytest.approx(1.0)
    assert rows[0].concentration_index_display == 1.0


def test_missing_attribute_goes_to_unknown_row():
    members = _ids("T", 10)
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(frame, {"B": set(members), "C": set(members)})
    attribute = {m: ("G1" if i < 6 else None) for i, m in enumerate(members)}
    rows = concentration_table(frame, report, attribute)
    assert [r.group for r in rows] == ["G1", "unknown"]
    assert rows[1].base_count == 4


def test_group_counts_partition_the_population():
    members = _ids("T", 200)
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(frame, {"B": set(members[:90]), "C": set(members[:70])})
    attribute = {m: f"G{i % 3}" for i, m in enumerate(members)}
    rows = concentration_table(frame, report, attribute)
    assert sum(r.base_count for r in rows) == report.base_count
    assert sum(r.persistent_count for r in rows) == report.joint_count
    weighted = sum(r.base_share * r.concentration_index for r in rows)
    assert weighted == pytest.approx(1.0, abs=1e-9)


# --- per-discipline table ----------------------------------------------------------


def test_uda_rows_report_counts_and_shares():
    members = _ids("T", 60)
    frame = build_survival_frame(members, _eligibility(members), PERIODS)
    report = cohort_intersections(frame, {"B": set(members[:30]), "C": set(members[:20])})
    uda = {m: str(1 + i % 2) for i, m in enumerate(members)}
    rows = uda_longevity_table(frame, report, uda)
    assert [r.uda for r in rows] == ["1", "2"]
    assert sum(r.base_count for r in rows) == 60
    assert sum(r.pair_counts["B"] for r in rows) == 30
    assert sum(r.joint_count for r in rows) == 20


# --- careers -------------------------------------------------------------------------


def test_careers_with_frozen_ranks():
    ts = _ids("T", 4)
    un = _ids("U", 3)
    history = {m: {2001: "assistant"} for m in ts + un}
    report = career_progression(ts, un, history, 2004, 2012)
    by_key = {(r.cohort, r.start_rank): r for r in report.rows}
    assert by_key[("ts", "assistant")].members == 4
    assert by_key[("ts", "assistant")].outcome_count == 4  # nobody promoted
    assert by_key[("ts", "assistant")].outcome_share == 1.0
    assert by_key[("un", "assistant")].outcome_count == 0
    assert by_key[("un", "assistant")].outcome_share == 0.0


def test_career_promotion_detection_and_carry_forward():
    history = {
        "T1": {2003: "assistant", 2008: "associate"},  # promoted after the base period
        "T2": {2001: "associate"},  # never promoted, rank carried forward
        "T3": {2005: "associate"},  # unknown at baseline -> excluded
    }
    report = career_progression(["T1", "T2", "T3"], [], history, 2004, 2012)
    by_key = {(r.cohort, r.start_rank): r for r in report.rows}
    assert by_key[("ts", "assistant")].members == 1
    assert by_key[("ts", "assistant")].outcome_count == 0  # T1 was promoted
    assert by_key[("ts", "associate")].members == 1
    assert by_key[("ts", "associate")].outcome_count == 1  # T2 stayed associate
    assert report.excluded_unknown_rank["ts"] == 1


def test_rank_histories_extracted_from_roster():
    ds = make_dataset(
        staff_years("R1", [2001, 2002], rank="assistant")
        + staff_years("R1", [2003], rank="associate")
    )
    history = rank_histories(ds.roster, ["R1"])
    assert history["R1"] == {2001: "assistant", 2002: "assistant", 2003: "associate"}
    assert last_known(history["R1"], 2012) == "associate"
    assert last_known(history["R1"], 2000) is None


# --- mobility -------------------------------------------------------------------------


def test_no_region_changes_means_no_movers():
    history = {m: {2001: "North"} for m in _ids("T", 5)}
    report = mobility_report({"ts": list(history)}, history, 2004, 2012)
    cohort = report.cohorts[0]
    assert cohort.movers == 0
    assert all(f.net == 0 for f in cohort.flows)


def test_movers_and_net_flows():
    history = {
        "T1": {2004: "South", 2012: "North"},
        "T2": {2004: "South", 2012: "North"},
        "T3": {2004: "Center", 2012: "South"},
        "T4": {2004: "North"},
    }
    report = mobility_report({"ts": list(history)}, history, 2004, 2012)
    cohort = report.cohorts[0]
    assert cohort.size == 4
    assert cohort.movers == 3
    flows = {f.region: f for f in cohort.flows}
    assert flows["North"].net == 2
    assert flows["South"].net == -1
    assert flows["Center"].net == -1
    assert sum(f.net for f in cohort.flows) == 0


def test_region_history_from_roster():
    ds = make_dataset(
        staff_years("R1", [2001, 2002], region="South") + staff_years("R1", [2011], region="North")
    )
    history = region_histories(ds.roster, ["R1"])
    assert last_known(history["R1"], 2004) == "South"
    assert last_known(history["R1"], 2012) == "North"
