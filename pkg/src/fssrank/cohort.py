"""Period cohorts: eligibility, top decile (TS), zero-score (UN), second-mean (TS_mu2).

Cohorts are identified within each SDS independently; discipline- and
population-level figures are unions over member fields. The second-mean
cohort comes from the characteristic-scores-and-scales construction: take
the mean of all scores, then the mean of the scores strictly above it, and
keep whoever exceeds that second mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import pandas as pd

from .errors import ComputationError
from .model import PeriodWindow
from .scoring import eligibility_threshold, staff_year_counts

DEFAULT_TOP_CUTOFF = 90.0


@dataclass(frozen=True)
class EligibilitySet:
    """Researchers on staff for enough of the window to be scored."""

    period: str
    members: frozenset[str]
    threshold: int
    window_years: int

    @property
    def nonstandard_window(self) -> bool:
        return self.window_years != 4


def eligible_researchers(roster: pd.DataFrame, period: PeriodWindow) -> EligibilitySet:
    threshold = eligibility_threshold(period.length)
    counts = staff_year_counts(roster, period)
    members = frozenset(counts[counts >= threshold].index)
    return EligibilitySet(period.label, members, threshold, period.length)


def _as_score_frame(scores) -> pd.DataFrame:
    if isinstance(scores, pd.DataFrame):
        return scores
    return pd.DataFrame(list(scores), columns=["researcher_id", "fss"])


def identify_top(scored, cutoff: float = DEFAULT_TOP_CUTOFF) -> frozenset[str]:
    """Members of one field at or above the percentile cutoff (ties included)."""
    frame = scored if isinstance(scored, pd.DataFrame) else pd.DataFrame(
        list(scored), columns=["researcher_id", "percentile"]
    )
    if frame.empty:
        return frozenset()
    return frozenset(frame.loc[frame["percentile"] >= cutoff, "researcher_id"])


def identify_unproductive(scores) -> frozenset[str]:
    """Researchers whose score is exactly zero."""
    frame = _as_score_frame(scores)
    if frame.empty:
        return frozenset()
    return frozenset(frame.loc[frame["fss"] == 0.0, "researcher_id"])


@dataclass(frozen=True)
class CssThresholds:
    sds: str
    mu1: float
    mu2: float | None
    n_total: int
    n_above_mu1: int

    @property
    def degenerate(self) -> bool:
        """True when no score sits strictly above the first mean."""
        return self.mu2 is None


def css_thresholds(
    scores, sds: str = "", inclusive_mu2: bool = False
) -> tuple[CssThresholds, frozenset[str]]:
    """Two-stage truncated means over one field's scores, plus the resulting set.

    Sums run in input order. With all scores equal the second mean is
    undefined and the set is empty (flagged via ``degenerate``); the same
    applies when rounding leaves the second mean at or below the first, which
    only happens for score vectors indistinguishable from all-equal at float
    resolution.
    """
    pairs = [(rid, float(v)) for rid, v in (
        scores.itertuples(index=False) if isinstance(scores, pd.DataFrame) else scores
    )]
    if not pairs:
        raise ComputationError("css_thresholds requires at least one score")
    values = [v for _, v in pairs]
    mu1 = sum(values) / len(values)
    above = [v for v in values if v > mu1]
    if not above:
        return CssThresholds(sds, mu1, None, len(values), 0), frozenset()
    mu2 = sum(above) / len(above)
    if mu2 <= mu1:
        return CssThresholds(sds, mu1, None, len(values), len(above)), frozenset()
    if inclusive_mu2:
        selected = frozenset(rid for rid, v in pairs if v >= mu2)
    else:
        selected = frozenset(rid for rid, v in pairs if v > mu2)
    return CssThresholds(sds, mu1, mu2, len(values), len(above)), selected


@dataclass(frozen=True)
class FieldStats:
    """Per-SDS cutoffs and set sizes for one period."""

    sds: str
    n: int
    ts_min_fss: float | None
    mu1: float
    mu2: float | None
    ts_count: int
    un_count: int
    ts_mu2_count: int


@dataclass(frozen=True)
class CohortSets:
    period: str
    ts: frozenset[str]
    un: frozenset[str]
    ts_mu2: frozenset[str]
    field_stats: tuple[FieldStats, ...]

    def by_kind(self, kind: str) -> frozenset[str]:
        return {"ts": self.ts, "un": self.un, "ts_mu2": self.ts_mu2}[kind]


def build_cohorts(
    scored: pd.DataFrame,
    period_label: str,
    cutoff: float = DEFAULT_TOP_CUTOFF,
    inclusive_mu2: bool = False,
) -> CohortSets:
    """Extract TS/UN/TS_mu2 across all fields of one scored period frame.

    Field by field, using the single-field operations, so batch results are
    identical to calling them directly (row order within a field is kept).
    """
    if scored.empty:
        return CohortSets(period_label, frozenset(), frozenset(), frozenset(), ())

    ts: set[str] = set()
    un: set[str] = set()
    ts_mu2: set[str] = set()
    stats: list[FieldStats] = []
    for sds, group in scored.groupby("sds", sort=True):
        ids = group["researcher_id"].to_numpy()
        fss = group["fss"].to_numpy()
        pct = group["percentile"].to_numpy()
        field_ts = frozenset(ids[pct >= cutoff])
        field_un = frozenset(ids[fss == 0.0])
        thresholds, field_mu2 = css_thresholds(
            zip(ids, fss), sds=sds, inclusive_mu2=inclusive_mu2
        )
        ts |= field_ts
        un |= field_un
        ts_mu2 |= field_mu2
        stats.append(
            FieldStats(
                sds=sds,
                n=len(group),
                ts_min_fss=float(fss[pct >= cutoff].min()) if len(field_ts) else None,
                mu1=thresholds.mu1,
                mu2=thresholds.mu2,
                ts_count=len(field_ts),
                un_count=len(field_un),
                ts_mu2_count=len(field_mu2),
            )
        )
    return CohortSets(period_label, frozenset(ts), frozenset(un), frozenset(ts_mu2), tuple(stats))


def cohorts_frame(scored: pd.DataFrame, cohorts: CohortSets) -> pd.DataFrame:
    """Snapshot rows: period,sds,researcher_id,fss,percentile,is_ts,is_un,is_ts_mu2."""
    out = scored[["sds", "researcher_id", "fss", "percentile"]].copy()
    out.insert(0, "period", cohorts.period)
    ids = out["researcher_id"]
    out["is_ts"] = ids.isin(cohorts.ts)
    out["is_un"] = ids.isin(cohorts.un)
    out["is_ts_mu2"] = ids.isin(cohorts.ts_mu2)
    return out.sort_values(["sds", "researcher_id"], kind="stable").reset_index(drop=True)
