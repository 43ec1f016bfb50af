"""Core domain records and the immutable in-memory dataset.

The loaders in :mod:`fssrank.ingest` produce typed pandas frames; the record
dataclasses here are the row-level view used by single-item operations and by
round-trip tests. A :class:`Dataset` bundles the three frames and is treated
as read-only after construction, so it can be shared across threads/processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import ValidationError

GENDERS = ("M", "F", "unknown")
MACRO_REGIONS = ("North", "Center", "South")
RANKS = ("assistant", "associate", "full")
RANK_ORDER = {"assistant": 0, "associate": 1, "full": 2}

ROSTER_COLUMNS = (
    "researcher_id",
    "year",
    "gender",
    "sds",
    "uda",
    "university_id",
    "macro_region",
    "rank",
)
PUBLICATION_COLUMNS = ("pub_id", "year", "subject_category", "citations", "n_authors")
AUTHORSHIP_COLUMNS = ("pub_id", "researcher_id", "position", "intramural_last_author")


@dataclass(frozen=True)
class StaffRecord:
    """One researcher-year roster row."""

    researcher_id: str
    year: int
    gender: str
    sds: str
    uda: str
    university_id: str
    macro_region: str
    rank: str | None = None


@dataclass(frozen=True)
class Publication:
    pub_id: str
    year: int
    subject_category: str
    citations: int
    n_authors: int


@dataclass(frozen=True)
class Authorship:
    pub_id: str
    researcher_id: str
    position: int
    intramural_last_author: bool | None = None


@dataclass(frozen=True)
class PeriodWindow:
    """Inclusive range of calendar years, e.g. A = 2001-2004."""

    label: str
    start_year: int
    end_year: int

    def __post_init__(self) -> None:
        if self.end_year < self.start_year:
            raise ValidationError(
                f"period {self.label!r}: end_year {self.end_year} before start_year {self.start_year}"
            )

    @property
    def length(self) -> int:
        return self.end_year - self.start_year + 1

    def contains(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year

    def __str__(self) -> str:
        return f"{self.label}:{self.start_year}-{self.end_year}"


def roster_frame(records: Iterable[StaffRecord]) -> pd.DataFrame:
    rows = [
        (r.researcher_id, r.year, r.gender, r.sds, r.uda, r.university_id, r.macro_region, r.rank)
        for r in records
    ]
    df = pd.DataFrame(rows, columns=list(ROSTER_COLUMNS))
    if df.empty:
        df = df.astype({"year": np.int64})
    df["year"] = df["year"].astype(np.int64)
    return df


def publication_frame(records: Iterable[Publication]) -> pd.DataFrame:
    rows = [(p.pub_id, p.year, p.subject_category, p.citations, p.n_authors) for p in records]
    df = pd.DataFrame(rows, columns=list(PUBLICATION_COLUMNS))
    for col in ("year", "citations", "n_authors"):
        df[col] = df[col].astype(np.int64) if len(df) else pd.Series(dtype=np.int64)
    return df


def authorship_frame(records: Iterable[Authorship]) -> pd.DataFrame:
    rows = [(a.pub_id, a.researcher_id, a.position, a.intramural_last_author) for a in records]
    df = pd.DataFrame(rows, columns=list(AUTHORSHIP_COLUMNS))
    df["position"] = df["position"].astype(np.int64) if len(df) else pd.Series(dtype=np.int64)
    return df


def _format_optional_bool(value) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return ""
    return "true" if value else "false"


class Dataset:
    """Roster, publications, and authorships plus derived indexes.

    Frames are not copied; callers must not mutate them after construction.
    """

    def __init__(
        self,
        roster: pd.DataFrame,
        publications: pd.DataFrame,
        authorships: pd.DataFrame,
        validate: bool = True,
    ) -> None:
        self.roster = roster
        self.publications = publications
        self.authorships = authorships
        self._years_by_researcher: dict[str, tuple[int, ...]] | None = None
        if validate:
            self._check_integrity()

    @classmethod
    def from_records(
        cls,
        staff: Iterable[StaffRecord],
        publications: Iterable[Publication] = (),
        authorships: Iterable[Authorship] = (),
        validate: bool = True,
    ) -> "Dataset":
        return cls(
            roster_frame(staff),
            publication_frame(publications),
            authorship_frame(authorships),
            validate=validate,
        )

    def _check_integrity(self) -> None:
        problems: list[str] = []
        dup_staff = self.roster.duplicated(["researcher_id", "year"])
        if dup_staff.any():
            key = self.roster.loc[dup_staff.idxmax(), ["researcher_id", "year"]]
            problems.append(
                f"duplicate roster key ({key['researcher_id']}, {key['year']})"
            )
        dup_pub = self.publications.duplicated("pub_id")
        if dup_pub.any():
            problems.append(f"duplicate pub_id {self.publications.loc[dup_pub.idxmax(), 'pub_id']!r}")
        dup_auth = self.authorships.duplicated(["pub_id", "researcher_id"])
        if dup_auth.any():
            row = self.authorships.loc[dup_auth.idxmax()]
            problems.append(f"duplicate authorship ({row['pub_id']}, {row['researcher_id']})")
        if len(self.authorships):
            merged = self.authorships.merge(
                self.publications[["pub_id", "n_authors"]], on="pub_id", how="left"
            )
            dangling = merged["n_authors"].isna()
            if dangling.any():
                problems.append(
                    f"authorship references unknown pub_id {merged.loc[dangling.idxmax(), 'pub_id']!r}"
                )
            bad_pos = (~dangling) & (
                (merged["position"] < 1) | (merged["position"] > merged["n_authors"])
            )
            if bad_pos.any():
                row = merged.loc[bad_pos.idxmax()]
                problems.append(
                    f"authorship position {int(row['position'])} outside byline of {row['pub_id']!r}"
                )
            unknown = ~self.authorships["researcher_id"].isin(self.roster["researcher_id"])
            if unknown.any():
                rid = self.authorships.loc[unknown.idxmax(), "researcher_id"]
                problems.append(f"authorship references researcher {rid!r} absent from roster")
        if problems:
            raise ValidationError("; ".join(problems))

    def staff_records(self) -> list[StaffRecord]:
        out = []
        for row in self.roster.itertuples(index=False):
            rank = row.rank if isinstance(row.rank, str) else None
            out.append(
                StaffRecord(
                    row.researcher_id,
                    int(row.year),
                    row.gender,
                    row.sds,
                    row.uda,
                    row.university_id,
                    row.macro_region,
                    rank,
                )
            )
        return out

    def publication_records(self) -> list[Publication]:
        return [
            Publication(row.pub_id, int(row.year), row.subject_category, int(row.citations), int(row.n_authors))
            for row in self.publications.itertuples(index=False)
        ]

    def authorship_records(self) -> list[Authorship]:
        out = []
        for row in self.authorships.itertuples(index=False):
            flag = row.intramural_last_author
            if flag is not None and not isinstance(flag, bool):
                flag = None if (isinstance(flag, float) and np.isnan(flag)) else bool(flag)
            out.append(Authorship(row.pub_id, row.researcher_id, int(row.position), flag))
        return out

    def roster_years(self, researcher_id: str) -> tuple[int, ...]:
        if self._years_by_researcher is None:
            grouped = self.roster.groupby("researcher_id")["year"].agg(sorted)
            self._years_by_researcher = {rid: tuple(years) for rid, years in grouped.items()}
        return self._years_by_researcher.get(researcher_id, ())

    def researcher_ids(self) -> frozenset[str]:
        return frozenset(self.roster["researcher_id"].unique())

    def write_csvs(self, directory: str | Path) -> dict[str, Path]:
        """Serialize back to the three-file CSV layout (inverse of loading)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "roster": directory / "roster.csv",
            "publications": directory / "publications.csv",
            "authorships": directory / "authorships.csv",
        }
        roster = self.roster.copy()
        roster["rank"] = roster["rank"].map(lambda v: v if isinstance(v, str) else "")
        roster.to_csv(paths["roster"], index=False)
        self.publications.to_csv(paths["publications"], index=False)
        auth = self.authorships.copy()
        auth["intramural_last_author"] = auth["intramural_last_author"].map(_format_optional_bool)
        auth.to_csv(paths["authorships"], index=False)
        return paths

    def equals(self, other: "Dataset") -> bool:
        return (
            self.roster.reset_index(drop=True).equals(other.roster.reset_index(drop=True))
            and self.publications.reset_index(drop=True).equals(
                other.publications.reset_index(drop=True)
            )
            and self.authorships.reset_index(drop=True).equals(
                other.authorships.reset_index(drop=True)
            )
        )


def sort_periods(periods: Sequence[PeriodWindow]) -> tuple[PeriodWindow, ...]:
    return tuple(sorted(periods, key=lambda p: p.start_year))


def check_consecutive(periods: Sequence[PeriodWindow]) -> tuple[PeriodWindow, ...]:
    """Validate that periods are non-overlapping and back-to-back in time."""
    ordered = sort_periods(periods)
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt.start_year != prev.end_year + 1:
            raise ValidationError(
                f"periods {prev} and {nxt} are not consecutive non-overlapping windows"
            )
    return ordered
