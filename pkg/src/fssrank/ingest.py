"""CSV loading with row-level diagnostics, plus whole-dataset consistency checks.

Input layout (UTF-8, comma separated, fixed headers):

    roster.csv       researcher_id,year,gender,sds,uda,university_id,macro_region,rank
    publications.csv pub_id,year,subject_category,citations,n_authors
    authorships.csv  pub_id,researcher_id,position,intramural_last_author

Loads either succeed completely or raise :class:`LoadError` carrying every
offending row (1-based line numbers, header = line 1). Nothing is silently
dropped: authorships naming a researcher absent from the roster abort the
load rather than vanishing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ValidationError
from .model import (
    AUTHORSHIP_COLUMNS,
    GENDERS,
    MACRO_REGIONS,
    PUBLICATION_COLUMNS,
    RANKS,
    ROSTER_COLUMNS,
    Dataset,
)

_MAX_ISSUES_SHOWN = 12


@dataclass(frozen=True)
class RowIssue:
    source: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.source}:{self.line}: {self.message}"


class LoadError(ValidationError):
    """One or more rows failed schema or integrity checks."""

    def __init__(self, issues: Sequence[RowIssue]):
        self.issues = tuple(issues)
        shown = [str(i) for i in self.issues[:_MAX_ISSUES_SHOWN]]
        if len(self.issues) > _MAX_ISSUES_SHOWN:
            shown.append(f"... and {len(self.issues) - _MAX_ISSUES_SHOWN} more")
        super().__init__(f"{len(self.issues)} input problem(s):\n" + "\n".join(shown))


def _read_table(path: str | Path, columns: Sequence[str], optional: Sequence[str] = ()) -> pd.DataFrame:
    path = Path(path)
    source = path.name
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError:
        raise LoadError([RowIssue(source, 1, "file has no header row")]) from None
    except pd.errors.ParserError as exc:
        raise LoadError([RowIssue(source, 0, f"unparseable CSV: {exc}")]) from None
    expected = [c for c in columns if c not in optional]
    missing = [c for c in expected if c not in df.columns]
    extra = [c for c in df.columns if c not in columns]
    if missing or extra:
        raise LoadError(
            [
                RowIssue(
                    source,
                    1,
                    f"header mismatch: expected {','.join(columns)}"
                    + (f"; missing {missing}" if missing else "")
                    + (f"; unexpected {extra}" if extra else ""),
                )
            ]
        )
    for col in optional:
        if col not in df.columns:
            df[col] = ""
    # data rows start at line 2
    df.index = np.arange(2, len(df) + 2)
    return df[list(columns)]


def _to_int(df: pd.DataFrame, col: str, source: str, issues: list[RowIssue], minimum: int | None = None):
    values = pd.to_numeric(df[col].str.strip(), errors="coerce")
    bad = values.isna() | (values != values.round())
    for line in df.index[bad]:
        issues.append(RowIssue(source, int(line), f"{col} is not an integer: {df.at[line, col]!r}"))
    if minimum is not None:
        low = (~bad) & (values < minimum)
        for line in df.index[low]:
            issues.append(RowIssue(source, int(line), f"{col} must be >= {minimum}, got {df.at[line, col]}"))
        bad |= low
    return values.where(~bad).astype("Int64"), bad


def _require_nonempty(df, col, source, issues):
    empty = df[col].str.len() == 0
    for line in df.index[empty]:
        issues.append(RowIssue(source, int(line), f"{col} is empty"))
    return empty


def _check_enum(df, col, allowed, source, issues, allow_empty=False):
    ok = df[col].isin(allowed)
    if allow_empty:
        ok |= df[col] == ""
    for line in df.index[~ok]:
        issues.append(
            RowIssue(source, int(line), f"{col} must be one of {'|'.join(allowed)}, got {df.at[line, col]!r}")
        )
    return ~ok


def _duplicate_issues(df, keys, source, issues, label):
    dup_mask = df.duplicated(keys, keep=False)
    if not dup_mask.any():
        return
    for _, group in df[dup_mask].groupby(keys, sort=True):
        lines = ", ".join(str(i) for i in group.index)
        key_repr = "/".join(str(group.iloc[0][k]) for k in keys)
        issues.append(RowIssue(source, int(group.index[0]), f"duplicate {label} {key_repr} at lines {lines}"))


def load_roster(path: str | Path) -> pd.DataFrame:
    """Load and validate the roster file; returns typed staff-year rows."""
    source = Path(path).name
    df = _read_table(path, ROSTER_COLUMNS)
    issues: list[RowIssue] = []
    year, bad_year = _to_int(df, "year", source, issues)
    for col in ("researcher_id", "sds", "uda", "university_id"):
        _require_nonempty(df, col, source, issues)
    _check_enum(df, "gender", GENDERS, source, issues, allow_empty=True)
    _check_enum(df, "macro_region", MACRO_REGIONS, source, issues)
    _check_enum(df, "rank", RANKS, source, issues, allow_empty=True)
    if not bad_year.any():
        _duplicate_issues(df, ["researcher_id", "year"], source, issues, "(researcher_id, year)")
    if issues:
        raise LoadError(issues)
    out = df.reset_index(drop=True)
    out["year"] = year.reset_index(drop=True).astype(np.int64)
    out["gender"] = out["gender"].replace("", "unknown")
    out["rank"] = out["rank"].map(lambda v: v if v else np.nan)
    return out


def load_publications(
    pubs_path: str | Path, authorships_path: str | Path
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Load the publication and authorship files and enforce their integrity."""
    pub_source = Path(pubs_path).name
    auth_source = Path(authorships_path).name
    pubs = _read_table(pubs_path, PUBLICATION_COLUMNS)
    auths = _read_table(authorships_path, AUTHORSHIP_COLUMNS, optional=("intramural_last_author",))

    issues: list[RowIssue] = []
    _require_nonempty(pubs, "pub_id", pub_source, issues)
    _require_nonempty(pubs, "subject_category", pub_source, issues)
    pub_year, _ = _to_int(pubs, "year", pub_source, issues)
    citations, _ = _to_int(pubs, "citations", pub_source, issues, minimum=0)
    n_authors, _ = _to_int(pubs, "n_authors", pub_source, issues, minimum=1)
    _duplicate_issues(pubs, ["pub_id"], pub_source, issues, "pub_id")

    _require_nonempty(auths, "pub_id", auth_source, issues)
    _require_nonempty(auths, "researcher_id", auth_source, issues)
    position, _ = _to_int(auths, "position", auth_source, issues, minimum=1)
    flag_bad = ~auths["intramural_last_author"].isin(("", "true", "false"))
    for line in auths.index[flag_bad]:
        issues.append(
            RowIssue(
                auth_source,
                int(line),
                f"intramural_last_author must be true|false|empty, got {auths.at[line, 'intramural_last_author']!r}",
            )
        )
    _duplicate_issues(auths, ["pub_id", "researcher_id"], auth_source, issues, "(pub_id, researcher_id)")
    if issues:
        raise LoadError(issues)

    pubs_out = pubs.reset_index(drop=True)
    pubs_out["year"] = pub_year.reset_index(drop=True).astype(np.int64)
    pubs_out["citations"] = citations.reset_index(drop=True).astype(np.int64)
    pubs_out["n_authors"] = n_authors.reset_index(drop=True).astype(np.int64)

    # referential checks need typed values; line numbers preserved on `auths`
    lookup = pubs_out.set_index("pub_id")["n_authors"]
    known = auths["pub_id"].isin(lookup.index)
    for line in auths.index[~known]:
        issues.append(
            RowIssue(auth_source, int(line), f"authorship references unknown pub_id {auths.at[line, 'pub_id']!r}")
        )
    pos_values = position.astype("float")
    limits = auths["pub_id"].map(lookup)
    over = known & (pos_values > limits)
    for line in auths.index[over]:
        issues.append(
            RowIssue(
                auth_source,
                int(line),
                f"position {auths.at[line, 'position']} exceeds n_authors "
                f"{int(limits.at[line])} of {auths.at[line, 'pub_id']!r}",
            )
        )
    if issues:
        raise LoadError(issues)

    auths_out = auths.reset_index(drop=True)
    auths_out["position"] = position.reset_index(drop=True).astype(np.int64)
    auths_out["intramural_last_author"] = auths_out["intramural_last_author"].map(
        {"": None, "true": True, "false": False}
    )
    return pubs_out, auths_out


def load_dataset(
    roster_path: str | Path, pubs_path: str | Path, authorships_path: str | Path
) -> Dataset:
    """Load all three files; authorships must only name rostered researchers."""
    roster = load_roster(roster_path)
    pubs, auths = load_publications(pubs_path, authorships_path)
    known = auths["researcher_id"].isin(roster["researcher_id"].unique())
    if not known.all():
        source = Path(authorships_path).name
        issues = [
            RowIssue(source, int(i) + 2, f"authorship references researcher {rid!r} absent from roster")
            for i, rid in auths.loc[~known, "researcher_id"].items()
        ]
        raise LoadError(issues)
    return Dataset(roster, pubs, auths, validate=False)


@dataclass(frozen=True)
class ValidationReport:
    """Dataset-level consistency findings; empty report == clean dataset."""

    orphan_researchers: tuple[str, ...] = ()
    sds_uda_conflicts: tuple[tuple[str, tuple[str, ...]], ...] = ()
    orphan_publications: tuple[str, ...] = ()
    sds_changes: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def is_clean(self) -> bool:
        return not (
            self.orphan_researchers
            or self.sds_uda_conflicts
            or self.orphan_publications
            or self.sds_changes
        )

    def entries(self) -> list[str]:
        out = []
        for rid in self.orphan_researchers:
            out.append(f"researcher {rid!r} has zero roster years")
        for sds, udas in self.sds_uda_conflicts:
            out.append(f"SDS {sds!r} maps to multiple UDAs: {', '.join(udas)}")
        for pid in self.orphan_publications:
            out.append(f"orphan publication {pid!r} has no authorship rows")
        for rid, codes in self.sds_changes:
            out.append(f"researcher {rid!r} changes SDS across years: {', '.join(codes)}")
        return out


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Pure reporting pass over an already-loaded dataset."""
    roster = dataset.roster
    rostered = set(roster["researcher_id"].unique())
    referenced = set(dataset.authorships["researcher_id"].unique())
    orphan_researchers = tuple(sorted(referenced - rostered))

    conflicts = []
    per_sds = roster.groupby("sds")["uda"].agg(lambda s: tuple(sorted(set(s))))
    for sds, udas in per_sds.items():
        if len(udas) > 1:
            conflicts.append((sds, udas))

    with_auth = set(dataset.authorships["pub_id"].unique())
    orphan_pubs = tuple(sorted(set(dataset.publications["pub_id"]) - with_auth))

    changes = []
    per_researcher = roster.groupby("researcher_id")["sds"].agg(lambda s: tuple(sorted(set(s))))
    for rid, codes in per_researcher.items():
        if len(codes) > 1:
            changes.append((rid, codes))

    return ValidationReport(
        orphan_researchers=orphan_researchers,
        sds_uda_conflicts=tuple(sorted(conflicts)),
        orphan_publications=orphan_pubs,
        sds_changes=tuple(sorted(changes)),
    )
