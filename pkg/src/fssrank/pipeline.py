"""End-to-end orchestration: ingest, score, cohorts, longitudinal reports, files.

The computation chain is deterministic for a given (inputs, analysis config):
per-period scoring partitions cleanly, joins happen in period order, and the
report bundle embeds no paths, timestamps, or worker counts. Running serially
or with a process pool yields byte-identical files.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path
from typing import Mapping, Sequence

import pandas as pd

from .cohort import CohortSets, EligibilitySet, build_cohorts, cohorts_frame, eligible_researchers
from .config import RunConfig
from .ingest import load_dataset
from .longitudinal import (
    CareerReport,
    ConcentrationRow,
    LongevityReport,
    MobilityReport,
    SurvivalFrame,
    UdaLongevityRow,
    build_survival_frame,
    career_progression,
    cohort_intersections,
    concentration_table,
    mobility_report,
    rank_histories,
    region_histories,
    last_known,
    uda_longevity_table,
)
from .model import Dataset, PeriodWindow
from .rounding import pct_display
from .scoring import WeightPolicy, citation_baselines, period_sds_assignment, score_period

COHORT_KINDS = ("ts", "un", "ts_mu2")
STAGE_SCORES = "scores"
STAGE_COHORTS = "cohorts"
STAGE_LONGEVITY = "longevity"
STAGE_REPORT = "report"
ALL_STAGES = frozenset({STAGE_SCORES, STAGE_COHORTS, STAGE_LONGEVITY, STAGE_REPORT})


@dataclass(frozen=True)
class PeriodResult:
    period: PeriodWindow
    eligibility: EligibilitySet
    scores: pd.DataFrame
    cohorts: CohortSets


@dataclass
class PipelineResult:
    config: RunConfig
    period_results: tuple[PeriodResult, ...]
    frames: Mapping[str, SurvivalFrame]
    longevity: Mapping[str, LongevityReport]
    concentration: Mapping[tuple[str, str], list[ConcentrationRow]]
    uda_tables: Mapping[str, list[UdaLongevityRow]]
    career: CareerReport | None
    mobility: MobilityReport | None
    euler: Mapping[str, dict]
    written: list[Path]

    def period_result(self, label: str) -> PeriodResult:
        for result in self.period_results:
            if result.period.label == label:
                return result
        raise KeyError(label)


# fork-inherited context for worker processes (set before the pool spawns)
_FORK_CONTEXT: dict | None = None


def _score_one_period(label: str):
    ctx = _FORK_CONTEXT
    dataset: Dataset = ctx["dataset"]
    config: RunConfig = ctx["config"]
    baselines = ctx["baselines"]
    period = next(p for p in config.ordered_periods() if p.label == label)
    eligibility = eligible_researchers(dataset.roster, period)
    policy = WeightPolicy(table=config.weight_table, positional_sds=config.positional_sds)
    scores = score_period(
        dataset, period, policy=policy, eligible=eligibility.members, baselines=baselines
    )
    cohorts = build_cohorts(
        scores, period.label, cutoff=config.top_cutoff, inclusive_mu2=config.inclusive_mu2
    )
    return PeriodResult(period, eligibility, scores, cohorts)


def _score_all_periods(dataset: Dataset, config: RunConfig) -> tuple[PeriodResult, ...]:
    global _FORK_CONTEXT
    labels = [p.label for p in config.ordered_periods()]
    _FORK_CONTEXT = {
        "dataset": dataset,
        "config": config,
        "baselines": citation_baselines(dataset.publications),
    }
    try:
        if config.jobs > 1:
            try:
                with ProcessPoolExecutor(
                    max_workers=min(config.jobs, len(labels)),
                    mp_context=get_context("fork"),
                ) as pool:
                    results = list(pool.map(_score_one_period, labels))
            except (ValueError, OSError):
                results = [_score_one_period(label) for label in labels]
        else:
            results = [_score_one_period(label) for label in labels]
    finally:
        _FORK_CONTEXT = None
    return tuple(results)


def _gender_map(roster: pd.DataFrame, members: frozenset[str]) -> dict[str, str]:
    rows = roster[roster["researcher_id"].isin(members)]
    return rows.groupby("researcher_id")["gender"].first().to_dict()


def euler_document(report: LongevityReport, cohort_kind: str, constraint: str) -> dict:
    """Set-diagram data: region labels, cardinalities, shares of the base."""
    base = report.base_label
    labels = [base]
    cardinality = {base: report.base_count}
    for follow in report.follow_labels:
        label = f"{base}∩{follow}"
        labels.append(label)
        cardinality[label] = report.pair_counts[follow]
    joint_label = "∩".join([base, *report.follow_labels])
    labels.append(joint_label)
    cardinality[joint_label] = report.joint_count

    def _share(count: int, total: int) -> float:
        return count / total if total else 0.0

    share_of_base = {base: _share(report.base_count, report.base_count)}
    share_pct = {base: 100.0 if report.base_count else 0.0}
    for follow in report.follow_labels:
        label = f"{base}∩{follow}"
        share_of_base[label] = _share(report.pair_counts[follow], report.pair_bases[follow])
        pct = report.pair_share_pct(follow)
        share_pct[label] = pct if pct is not None else 0.0
    share_of_base[joint_label] = _share(report.joint_count, report.joint_base)
    joint_pct = report.joint_share_pct
    share_pct[joint_label] = joint_pct if joint_pct is not None else 0.0
    return {
        "cohort": cohort_kind,
        "constraint": constraint,
        "labels": labels,
        "cardinality": cardinality,
        "share_of_base": share_of_base,
        "share_pct": share_pct,
    }


def emit_euler(report: LongevityReport, path: str | Path, cohort_kind: str = "ts",
               constraint: str = "all_periods_on_staff") -> dict:
    doc = euler_document(report, cohort_kind, constraint)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc


def _longevity_frame(reports: Mapping[str, LongevityReport]) -> pd.DataFrame:
    rows = []
    for kind in (k for k in COHORT_KINDS if k in reports):
        report = reports[kind]
        row: dict[str, object] = {"cohort": kind, "base_count": report.base_count}
        for label in report.follow_labels:
            row[f"count_{label}"] = report.pair_counts[label]
            row[f"base_{label}"] = report.pair_bases[label]
            row[f"share_{label}"] = report.pair_share(label)
            row[f"share_{label}_pct"] = report.pair_share_pct(label)
        row["count_joint"] = report.joint_count
        row["base_joint"] = report.joint_base
        row["share_joint"] = report.joint_share
        row["share_joint_pct"] = report.joint_share_pct
        rows.append(row)
    return pd.DataFrame(rows)


def _concentration_frame(rows: Sequence[ConcentrationRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        records.append(
            {
                "group": row.group,
                "base_count": row.base_count,
                "base_share": row.base_share,
                "base_share_pct": row.base_share_pct,
                "persistent_count": row.persistent_count,
                "persistent_share": row.persistent_share,
                "persistent_share_pct": row.persistent_share_pct,
                "persistence_share": row.persistence_share,
                "persistence_share_pct": row.persistence_share_pct,
                "concentration_index": row.concentration_index,
                "concentration_index_display": row.concentration_index_display,
            }
        )
    if rows:
        base_total = rows[0].base_total
        persistent_total = rows[0].persistent_total
        records.append(
            {
                "group": "all",
                "base_count": base_total,
                "base_share": 1.0 if base_total else None,
                "base_share_pct": 100.0 if base_total else None,
                "persistent_count": persistent_total,
                "persistent_share": 1.0 if persistent_total else None,
                "persistent_share_pct": 100.0 if persistent_total else None,
                "persistence_share": persistent_total / base_total if base_total else None,
                "persistence_share_pct": pct_display(persistent_total, base_total),
                "concentration_index": 1.0 if base_total and persistent_total else None,
                "concentration_index_display": 1.0 if base_total and persistent_total else None,
            }
        )
    return pd.DataFrame(records)


def _uda_frame(rows: Sequence[UdaLongevityRow], follow_labels: Sequence[str]) -> pd.DataFrame:
    records = []
    for row in rows:
        record: dict[str, object] = {"uda": row.uda, "base_count": row.base_count}
        for label in follow_labels:
            record[f"count_{label}"] = row.pair_counts[label]
            record[f"share_{label}_pct"] = row.pair_share_pct(label)
        record["count_joint"] = row.joint_count
        record["share_joint_pct"] = row.joint_share_pct
        records.append(record)
    return pd.DataFrame(records)


def _career_frame(report: CareerReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "cohort": row.cohort,
                "start_rank": row.start_rank,
                "members": row.members,
                "outcome": row.outcome,
                "outcome_count": row.outcome_count,
                "outcome_share": row.outcome_share,
                "outcome_share_pct": row.outcome_share_pct,
            }
            for row in report.rows
        ]
    )


def _mobility_frames(report: MobilityReport) -> tuple[pd.DataFrame, pd.DataFrame]:
    cohort_rows = []
    flow_rows = []
    for cohort in report.cohorts:
        cohort_rows.append(
            {
                "cohort": cohort.cohort,
                "size": cohort.size,
                "movers": cohort.movers,
                "mover_share": cohort.mover_share,
                "mover_share_pct": cohort.mover_share_pct,
            }
        )
        for flow in cohort.flows:
            flow_rows.append(
                {
                    "cohort": cohort.cohort,
                    "region": flow.region,
                    "inflow": flow.inflow,
                    "outflow": flow.outflow,
                    "net": flow.net,
                }
            )
    return pd.DataFrame(cohort_rows), pd.DataFrame(flow_rows)


def _report_document(result: "PipelineResult") -> dict:
    config = result.config
    doc: dict = {
        "analysis": {
            "periods": [
                {"label": p.label, "start_year": p.start_year, "end_year": p.end_year}
                for p in config.ordered_periods()
            ],
            "top_share": config.top_share,
            "top_cutoff_percentile": config.top_cutoff,
            "survival_constraint": config.survival_constraint,
            "inclusive_mu2": config.inclusive_mu2,
            "positional_sds": sorted(config.positional_sds),
            "weight_table": {
                "first": config.weight_table.first,
                "last": config.weight_table.last,
                "middle_share": config.weight_table.middle_share,
                "intramural_adjustment": config.weight_table.intramural_adjustment,
            },
        },
        "periods": {},
    }
    for period_result in result.period_results:
        cohorts = period_result.cohorts
        doc["periods"][period_result.period.label] = {
            "eligible": len(period_result.eligibility.members),
            "eligibility_threshold": period_result.eligibility.threshold,
            "nonstandard_window": period_result.eligibility.nonstandard_window,
            "ts": len(cohorts.ts),
            "un": len(cohorts.un),
            "ts_mu2": len(cohorts.ts_mu2),
        }
    doc["longevity"] = {
        kind: json.loads(_longevity_frame({kind: report}).to_json(orient="records"))[0]
        for kind, report in result.longevity.items()
    }
    doc["euler"] = dict(result.euler)
    doc["concentration"] = {
        f"{kind}.{grouping}": json.loads(
            _concentration_frame(rows).to_json(orient="records")
        )
        for (kind, grouping), rows in result.concentration.items()
    }
    follow_labels = [p.label for p in config.ordered_periods()[1:]]
    doc["uda_longevity"] = {
        kind: json.loads(_uda_frame(rows, follow_labels).to_json(orient="records"))
        for kind, rows in result.uda_tables.items()
    }
    if result.career is not None:
        doc["career"] = {
            "rows": json.loads(_career_frame(result.career).to_json(orient="records")),
            "excluded_unknown_rank": dict(result.career.excluded_unknown_rank),
        }
    if result.mobility is not None:
        cohort_frame, flow_frame = _mobility_frames(result.mobility)
        doc["mobility"] = {
            "cohorts": json.loads(cohort_frame.to_json(orient="records")),
            "flows": json.loads(flow_frame.to_json(orient="records")),
        }
    return doc


class _OutputTracker:
    """Records written files so a failed run leaves no partial bundle."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def write_text(self, path: Path, text: str) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.paths.append(path)
        return path

    def write_csv(self, path: Path, frame: pd.DataFrame) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
        self.paths.append(path)
        return path

    def note(self, path: Path) -> Path:
        self.paths.append(path)
        return path

    def rollback(self) -> None:
        for path in self.paths:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass


def _bool_str(frame: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    out = frame.copy()
    for col in columns:
        out[col] = out[col].map({True: "true", False: "false"})
    return out


def run_pipeline(
    config: RunConfig,
    dataset: Dataset | None = None,
    stages: frozenset[str] = ALL_STAGES,
) -> PipelineResult:
    """Run ingest through reporting; write the bundle for the selected stages."""
    config.validate(require_inputs=dataset is None)
    if dataset is None:
        dataset = load_dataset(config.roster_path, config.publications_path, config.authorships_path)

    period_results = _score_all_periods(dataset, config)
    periods = config.ordered_periods()
    base_period = periods[0]
    final_period = periods[-1]
    eligibility = {r.period.label: r.eligibility for r in period_results}
    cohorts_by_kind: dict[str, dict[str, frozenset[str]]] = {
        kind: {r.period.label: r.cohorts.by_kind(kind) for r in period_results}
        for kind in COHORT_KINDS
    }

    frames: dict[str, SurvivalFrame] = {}
    longevity: dict[str, LongevityReport] = {}
    concentration: dict[tuple[str, str], list[ConcentrationRow]] = {}
    uda_tables: dict[str, list[UdaLongevityRow]] = {}
    career: CareerReport | None = None
    mobility: MobilityReport | None = None
    euler: dict[str, dict] = {}

    need_longitudinal = bool(stages & {STAGE_LONGEVITY, STAGE_REPORT})
    if need_longitudinal:
        for kind in COHORT_KINDS:
            frame = build_survival_frame(
                cohorts_by_kind[kind][base_period.label],
                eligibility,
                periods,
                base_label=base_period.label,
                constraint=config.survival_constraint,
            )
            frames[kind] = frame
            longevity[kind] = cohort_intersections(frame, cohorts_by_kind[kind])

        all_members = frozenset().union(*(f.base_members for f in frames.values()))
        gender = _gender_map(dataset.roster, all_members)
        regions = region_histories(dataset.roster, all_members)
        region_at_base_end = {
            rid: last_known(history, base_period.end_year) for rid, history in regions.items()
        }
        uda_assignment = period_sds_assignment(dataset.roster, base_period)
        uda = dict(zip(uda_assignment["researcher_id"], uda_assignment["uda"]))

        for kind in ("ts", "un"):
            concentration[(kind, "gender")] = concentration_table(
                frames[kind], longevity[kind], gender
            )
            concentration[(kind, "macro_region")] = concentration_table(
                frames[kind], longevity[kind], region_at_base_end
            )
            concentration[(kind, "uda")] = concentration_table(frames[kind], longevity[kind], uda)
        for kind in ("ts", "ts_mu2"):
            uda_tables[kind] = uda_longevity_table(frames[kind], longevity[kind], uda)

        persistent_ts = longevity["ts"].joint_members
        persistent_un = longevity["un"].joint_members
        tracked = persistent_ts | persistent_un
        ranks = rank_histories(dataset.roster, tracked)
        career = career_progression(
            persistent_ts, persistent_un, ranks, base_period.end_year, final_period.end_year
        )
        mobility = mobility_report(
            {"ts": persistent_ts, "un": persistent_un},
            region_histories(dataset.roster, tracked),
            base_period.end_year,
            final_period.end_year,
        )
        for kind in ("ts", "un"):
            euler[kind] = euler_document(longevity[kind], kind, config.survival_constraint)

    result = PipelineResult(
        config=config,
        period_results=period_results,
        frames=frames,
        longevity=longevity,
        concentration=concentration,
        uda_tables=uda_tables,
        career=career,
        mobility=mobility,
        euler=euler,
        written=[],
    )

    tracker = _OutputTracker()
    out = Path(config.out_dir)
    try:
        if STAGE_SCORES in stages:
            scores = pd.concat(
                [r.scores.assign(period=r.period.label) for r in period_results],
                ignore_index=True,
            )
            scores = scores[["period", "researcher_id", "sds", "uda", "t", "fss", "percentile"]]
            scores = scores.sort_values(["period", "sds", "researcher_id"], kind="stable")
            tracker.write_csv(out / "scores.csv", scores)

        if STAGE_COHORTS in stages:
            snapshots = pd.concat(
                [cohorts_frame(r.scores, r.cohorts) for r in period_results], ignore_index=True
            )
            tracker.write_csv(
                out / "cohorts.csv", _bool_str(snapshots, ["is_ts", "is_un", "is_ts_mu2"])
            )

        if STAGE_LONGEVITY in stages and need_longitudinal:
            tracker.write_csv(out / "longevity_overall.csv", _longevity_frame(longevity))
            for (kind, grouping), rows in sorted(concentration.items()):
                tracker.write_csv(
                    out / f"concentration_{grouping}_{kind}.csv", _concentration_frame(rows)
                )
            follow_labels = [p.label for p in periods[1:]]
            for kind, rows in sorted(uda_tables.items()):
                tracker.write_csv(out / f"longevity_uda_{kind}.csv", _uda_frame(rows, follow_labels))
            tracker.write_csv(out / "career.csv", _career_frame(career))
            cohort_frame, flow_frame = _mobility_frames(mobility)
            tracker.write_csv(out / "mobility.csv", cohort_frame)
            tracker.write_csv(out / "mobility_flows.csv", flow_frame)
            for kind in ("ts", "un"):
                tracker.write_text(
                    out / f"euler_{kind}.json", json.dumps(euler[kind], indent=2) + "\n"
                )

        if STAGE_REPORT in stages and need_longitudinal:
            tracker.write_text(
                out / "report.json", json.dumps(_report_document(result), indent=2) + "\n"
            )
            if config.figures:
                from . import figures as figures_mod

                for path in figures_mod.render_all(result, out / "figures"):
                    tracker.note(path)
    except BaseException:
        tracker.rollback()
        raise

    result.written = list(tracker.paths)
    return result
