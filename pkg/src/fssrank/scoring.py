"""Productivity scoring: citation baselines, author-share weights, FSS, percentiles.

A researcher's FSS over a window is the yearly average of field-normalized,
fractionally counted citation impact:

    fss = (1 / years_on_staff) * sum over period publications of
          (citations / baseline_mean) * author_share

where the baseline mean is taken over *cited* publications of the same year
and subject category, uncited publications contribute exactly 0, and the
author share follows either the equal-fraction or the positional convention.

The batch path (:func:`score_period`) is vectorized; :func:`compute_fss` is
the single-researcher form with identical arithmetic (terms accumulated in
ascending pub_id order, so results are bit-stable and parallelism-safe).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ComputationError, ConfigError
from .model import Authorship, Dataset, PeriodWindow, Publication, publication_frame

EQUAL_FRACTION = "equal_fraction"
POSITIONAL = "positional"

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class WeightTable:
    """Positional byline weights: first/last fixed, remainder split mid-byline.

    Two-author bylines renormalize first/last to sum to 1; sole authors get 1.
    The intramural flag is carried for user-supplied tables and does not alter
    the default weights.
    """

    first: float = 0.40
    last: float = 0.40
    middle_share: float = 0.20
    intramural_adjustment: bool = False

    def __post_init__(self) -> None:
        if self.first <= 0 or self.last <= 0 or self.middle_share < 0:
            raise ConfigError("positional weights must be positive (middle share may be 0)")
        total = self.first + self.last + self.middle_share
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ConfigError(f"positional weights must sum to 1, got {total!r}")


@dataclass(frozen=True)
class WeightScheme:
    convention: str = EQUAL_FRACTION
    table: WeightTable | None = None

    def __post_init__(self) -> None:
        if self.convention not in (EQUAL_FRACTION, POSITIONAL):
            raise ConfigError(f"unknown weight convention {self.convention!r}")

    @classmethod
    def equal(cls) -> "WeightScheme":
        return cls(EQUAL_FRACTION)

    @classmethod
    def positional(cls, table: WeightTable | None = None) -> "WeightScheme":
        return cls(POSITIONAL, table if table is not None else WeightTable())


@dataclass(frozen=True)
class WeightPolicy:
    """Per-field scheme selection: listed SDS codes rank with positional weights."""

    table: WeightTable = WeightTable()
    positional_sds: frozenset[str] = frozenset()

    def scheme_for(self, sds: str) -> WeightScheme:
        if sds in self.positional_sds:
            return WeightScheme(POSITIONAL, self.table)
        return WeightScheme(EQUAL_FRACTION)


def positional_weight(n_authors: int, position: int, table: WeightTable) -> float:
    if not 1 <= position <= n_authors:
        raise ComputationError(f"position {position} outside byline of size {n_authors}")
    if n_authors == 1:
        return 1.0
    if n_authors == 2:
        pair = table.first + table.last
        return table.first / pair if position == 1 else table.last / pair
    if position == 1:
        return table.first
    if position == n_authors:
        return table.last
    return table.middle_share / (n_authors - 2)


def fractional_contribution(
    publication: Publication, authorship: Authorship, scheme: WeightScheme
) -> float:
    """Author share of one publication under the configured convention, in (0, 1]."""
    if authorship.pub_id != publication.pub_id:
        raise ComputationError(
            f"authorship {authorship.pub_id!r} does not belong to publication {publication.pub_id!r}"
        )
    if scheme.convention == EQUAL_FRACTION:
        return 1.0 / publication.n_authors
    if scheme.table is None:
        raise ConfigError("positional scheme requires a weight table")
    return positional_weight(publication.n_authors, authorship.position, scheme.table)


@dataclass(frozen=True)
class CitationBaseline:
    year: int
    subject_category: str
    mean_cited: float
    n_cited: int


def _as_pub_frame(publications) -> pd.DataFrame:
    if isinstance(publications, pd.DataFrame):
        return publications
    return publication_frame(publications)


def citation_baseline(publications, year: int, subject_category: str) -> CitationBaseline | None:
    """Mean citations over the cell's cited publications; None if none are cited."""
    pubs = _as_pub_frame(publications)
    cell = pubs[
        (pubs["year"] == year)
        & (pubs["subject_category"] == subject_category)
        & (pubs["citations"] >= 1)
    ]
    if cell.empty:
        return None
    values = cell["citations"].to_numpy()
    return CitationBaseline(year, subject_category, float(values.sum() / len(values)), len(values))


def citation_baselines(publications) -> pd.DataFrame:
    """All (year, subject_category) baselines as a frame; uncited rows ignored."""
    pubs = _as_pub_frame(publications)
    cited = pubs[pubs["citations"] >= 1]
    if cited.empty:
        return pd.DataFrame(columns=["year", "subject_category", "mean_cited", "n_cited"])
    grouped = (
        cited.groupby(["year", "subject_category"], sort=True)["citations"]
        .agg(total="sum", n_cited="size")
        .reset_index()
    )
    grouped["mean_cited"] = grouped["total"] / grouped["n_cited"]
    return grouped[["year", "subject_category", "mean_cited", "n_cited"]]


def baseline_map(publications) -> dict[tuple[int, str], CitationBaseline]:
    frame = citation_baselines(publications)
    return {
        (int(row.year), row.subject_category): CitationBaseline(
            int(row.year), row.subject_category, float(row.mean_cited), int(row.n_cited)
        )
        for row in frame.itertuples(index=False)
    }


def years_on_staff(researcher_id: str, period: PeriodWindow, roster: pd.DataFrame) -> int:
    rows = roster[roster["researcher_id"] == researcher_id]
    years = rows["year"]
    return int(((years >= period.start_year) & (years <= period.end_year)).sum())


@dataclass(frozen=True)
class ScoreRecord:
    researcher_id: str
    period: str
    t: int
    fss: float
    percentile: float | None = None


def compute_fss(
    researcher_id: str,
    period: PeriodWindow,
    dataset: Dataset,
    baselines: Mapping[tuple[int, str], CitationBaseline],
    scheme: WeightScheme,
) -> ScoreRecord:
    """Score one researcher over one window; requires at least one staff year."""
    t = years_on_staff(researcher_id, period, dataset.roster)
    if t == 0:
        raise ComputationError(
            f"fss undefined: {researcher_id!r} has no staff years in period {period.label}"
        )
    auths = dataset.authorships
    mine = auths[auths["researcher_id"] == researcher_id]
    merged = mine.merge(dataset.publications, on="pub_id", how="left")
    merged = merged[(merged["year"] >= period.start_year) & (merged["year"] <= period.end_year)]
    merged = merged.sort_values("pub_id")
    total = 0.0
    for row in merged.itertuples(index=False):
        citations = int(row.citations)
        if citations == 0:
            continue
        key = (int(row.year), row.subject_category)
        base = baselines.get(key)
        if base is None:
            raise ComputationError(
                f"publication {row.pub_id!r} is cited but cell {key} has no citation baseline"
            )
        weight = fractional_contribution(
            Publication(row.pub_id, int(row.year), row.subject_category, citations, int(row.n_authors)),
            Authorship(row.pub_id, researcher_id, int(row.position)),
            scheme,
        )
        total += (citations / base.mean_cited) * weight
    return ScoreRecord(researcher_id, period.label, t, total / t)


def percentile_ranks(scores: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    """0-100 (worst to best) rank positions; equal scores share a percentile.

    percentile = 100 * (# strictly lower scores) / (n - 1); a sole member
    gets 100. Input must be one field and one period.
    """
    if not scores:
        raise ComputationError("percentile_ranks requires at least one score")
    n = len(scores)
    if n == 1:
        return [(scores[0][0], 100.0)]
    values = sorted(v for _, v in scores)
    out = []
    for rid, value in scores:
        lower = bisect.bisect_left(values, value)
        out.append((rid, (100.0 * lower) / (n - 1)))
    return out


def add_percentiles(scored: pd.DataFrame, by: str = "sds") -> pd.DataFrame:
    """Vectorized within-field percentiles on a frame with `fss` and `by` columns."""
    groups = scored.groupby(by)["fss"]
    n = groups.transform("size").to_numpy()
    lower = groups.rank(method="min").to_numpy() - 1.0
    pct = np.where(n > 1, (100.0 * lower) / np.maximum(n - 1, 1), 100.0)
    out = scored.copy()
    out["percentile"] = pct
    return out


def period_sds_assignment(roster: pd.DataFrame, period: PeriodWindow) -> pd.DataFrame:
    """Field each researcher is ranked in for the window.

    Majority SDS over the researcher's window roster years; ties go to the
    SDS held in the latest year. Returns researcher_id, sds, uda.
    """
    window = roster[(roster["year"] >= period.start_year) & (roster["year"] <= period.end_year)]
    if window.empty:
        return pd.DataFrame(columns=["researcher_id", "sds", "uda"])
    window = window.sort_values("year", kind="stable")
    per_sds = (
        window.groupby(["researcher_id", "sds"], sort=False)
        .agg(n_years=("year", "size"), last_year=("year", "max"), uda=("uda", "last"))
        .reset_index()
    )
    per_sds = per_sds.sort_values(
        ["researcher_id", "n_years", "last_year"], ascending=[True, False, False], kind="stable"
    )
    chosen = per_sds.drop_duplicates("researcher_id", keep="first")
    return chosen[["researcher_id", "sds", "uda"]].reset_index(drop=True)


def eligibility_threshold(window_years: int) -> int:
    """Minimum staff years required in a window: 3 of 4, scaled as ceil(0.75*n)."""
    return -((-3 * window_years) // 4)


def staff_year_counts(roster: pd.DataFrame, period: PeriodWindow) -> pd.Series:
    window = roster[(roster["year"] >= period.start_year) & (roster["year"] <= period.end_year)]
    return window.groupby("researcher_id")["year"].size()


def score_period(
    dataset: Dataset,
    period: PeriodWindow,
    policy: WeightPolicy | None = None,
    eligible: Iterable[str] | None = None,
    baselines: pd.DataFrame | None = None,
) -> pd.DataFrame:
    """Score every eligible researcher in a window.

    Returns researcher_id, sds, uda, t, fss, percentile sorted by researcher_id.
    Percentiles are within-SDS. Summation per researcher runs in ascending
    pub_id order regardless of partitioning, so output is reproducible bitwise.
    """
    policy = policy or WeightPolicy()
    roster = dataset.roster
    t = staff_year_counts(roster, period)
    if eligible is None:
        members = t[t >= eligibility_threshold(period.length)].index
    else:
        members = pd.Index(sorted(set(eligible)))
    if len(members) == 0:
        return pd.DataFrame(columns=["researcher_id", "sds", "uda", "t", "fss", "percentile"])

    assignment = period_sds_assignment(roster, period)
    base = assignment[assignment["researcher_id"].isin(members)].copy()
    base["t"] = base["researcher_id"].map(t).astype(np.int64)

    if baselines is None:
        baselines = citation_baselines(dataset.publications)

    pubs = dataset.publications
    in_window = pubs[(pubs["year"] >= period.start_year) & (pubs["year"] <= period.end_year)]
    contrib = dataset.authorships.merge(
        in_window[["pub_id", "year", "subject_category", "citations", "n_authors"]],
        on="pub_id",
        how="inner",
    )
    contrib = contrib[contrib["researcher_id"].isin(members)]
    contrib = contrib.merge(base[["researcher_id", "sds"]], on="researcher_id", how="left")
    contrib = contrib.merge(
        baselines[["year", "subject_category", "mean_cited"]],
        on=["year", "subject_category"],
        how="left",
    )

    cited = contrib["citations"].to_numpy() >= 1
    mean = contrib["mean_cited"].to_numpy(dtype=float)
    if np.any(cited & ~np.isfinite(mean)):
        bad = contrib[cited & ~np.isfinite(mean)].iloc[0]
        raise ComputationError(
            f"publication {bad['pub_id']!r} is cited but cell "
            f"({int(bad['year'])}, {bad['subject_category']!r}) has no citation baseline"
        )
    ratio = np.where(cited, contrib["citations"].to_numpy(dtype=float) / mean, 0.0)

    n_auth = contrib["n_authors"].to_numpy(dtype=float)
    pos = contrib["position"].to_numpy(dtype=float)
    table = policy.table
    positional = contrib["sds"].isin(policy.positional_sds).to_numpy()
    pair = table.first + table.last
    weight_positional = np.select(
        [n_auth == 1, (n_auth == 2) & (pos == 1), n_auth == 2, pos == 1, pos == n_auth],
        [1.0, table.first / pair, table.last / pair, table.first, table.last],
        default=table.middle_share / np.maximum(n_auth - 2, 1),
    )
    weight = np.where(positional, weight_positional, 1.0 / n_auth)

    contrib = contrib.assign(term=ratio * weight)
    contrib = contrib.sort_values(["researcher_id", "pub_id"], kind="stable")
    sums = contrib.groupby("researcher_id", sort=True)["term"].sum()

    base = base.sort_values("researcher_id", kind="stable").reset_index(drop=True)
    base["fss"] = (base["researcher_id"].map(sums).fillna(0.0) / base["t"]).astype(float)
    scored = add_percentiles(base, by="sds")
    return scored[["researcher_id", "sds", "uda", "t", "fss", "percentile"]].reset_index(drop=True)
