from pathlib import Path

import pytest

from fssrank.model import Authorship, Dataset, PeriodWindow, Publication, StaffRecord

PERIOD_A = PeriodWindow("A", 2001, 2004)
PERIOD_B = PeriodWindow("B", 2005, 2008)
PERIOD_C = PeriodWindow("C", 2009, 2012)
PERIODS = (PERIOD_A, PERIOD_B, PERIOD_C)


def staff(rid, year, gender="M", sds="S1", uda="1", uni="U1", region="North", rank="assistant"):
    return StaffRecord(rid, year, gender, sds, uda, uni, region, rank)


def staff_years(rid, years, **kw):
    return [staff(rid, y, **kw) for y in years]


def pub(pid, year=2001, category="X", citations=0, n_authors=1):
    return Publication(pid, year, category, citations, n_authors)


def auth(pid, rid, position=1, intramural=None):
    return Authorship(pid, rid, position, intramural)


def make_dataset(staff_rows, pubs=(), auths=()):
    return Dataset.from_records(staff_rows, pubs, auths)


@pytest.fixture
def csv_dir(tmp_path):
    """Write ad-hoc CSV text files into a temp dir and return their paths."""

    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


ROSTER_HEADER = "researcher_id,year,gender,sds,uda,university_id,macro_region,rank\n"
PUBS_HEADER = "pub_id,year,subject_category,citations,n_authors\n"
AUTHS_HEADER = "pub_id,researcher_id,position,intramural_last_author\n"
