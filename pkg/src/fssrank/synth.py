"""Seeded synthetic datasets for exercising the full pipeline at any scale.

Each researcher carries a latent productivity level that is redrawn every
period as a persistence-weighted blend of the previous level and fresh noise
(an AR(1) walk with correlation ``rho``), so the tendency of strong
performers to stay strong is a dial. Publication counts and citations are
skewed draws scaled by the latent level; ``noise = 0`` switches production to
its deterministic expected values, which makes a ``rho = 1`` population
repeat itself exactly from period to period.

Output is byte-identical for identical parameters: one seeded generator,
fixed draw order, single-threaded assembly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ConfigError
from .model import RANKS
from .scoring import eligibility_threshold

_MIX_TOL = 1e-9


@dataclass(frozen=True)
class SynthParams:
    seed: int = 20260101
    n_researchers: int = 1200
    n_sds: int = 12
    start_year: int = 2001
    n_years: int = 12
    period_years: int = 4
    pubs_per_year: float = 1.2
    citation_scale: float = 6.0
    citation_dispersion: float = 1.0
    noise: float = 1.0
    rho: float = 0.5
    latent_sigma: float = 0.8
    mean_coauthors: float = 3.0
    categories_per_sds: int = 1
    attrition: float = 0.0
    promotion_rate: float = 0.04
    gender_mix: dict = field(default_factory=lambda: {"M": 0.62, "F": 0.38})
    region_mix: dict = field(
        default_factory=lambda: {"North": 0.45, "Center": 0.25, "South": 0.30}
    )
    rank_mix: dict = field(
        default_factory=lambda: {"assistant": 0.40, "associate": 0.35, "full": 0.25}
    )

    def __post_init__(self) -> None:
        if self.n_researchers < 1 or self.n_sds < 1 or self.n_years < 1:
            raise ConfigError("population, field count, and years must be positive")
        if self.n_years % self.period_years != 0:
            raise ConfigError(
                f"n_years={self.n_years} must be a multiple of period_years={self.period_years}"
            )
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError(f"noise must lie in [0, 1], got {self.noise}")
        if self.citation_dispersion <= 0:
            raise ConfigError("citation_dispersion must be positive")
        if not 0.0 <= self.attrition < 1.0:
            raise ConfigError("attrition must lie in [0, 1)")
        if self.pubs_per_year < 0 or self.citation_scale < 0:
            raise ConfigError("rates must be non-negative")
        for name, mix in (("gender_mix", self.gender_mix), ("region_mix", self.region_mix), ("rank_mix", self.rank_mix)):
            if not mix or abs(sum(mix.values()) - 1.0) > _MIX_TOL:
                raise ConfigError(f"{name} proportions must sum to 1")
            if any(p < 0 for p in mix.values()):
                raise ConfigError(f"{name} proportions must be non-negative")

    @property
    def n_periods(self) -> int:
        return self.n_years // self.period_years


@dataclass(frozen=True)
class SynthResult:
    roster_path: Path
    publications_path: Path
    authorships_path: Path
    params_path: Path
    n_researchers: int
    n_roster_rows: int
    n_publications: int
    n_authorships: int


def _quota_counts(mix: dict, n: int) -> list[tuple[str, int]]:
    """Largest-remainder apportionment of n units across the mix labels."""
    items = list(mix.items())
    raw = [p * n for _, p in items]
    floors = [int(math.floor(x)) for x in raw]
    leftover = n - sum(floors)
    order = sorted(range(len(items)), key=lambda i: (raw[i] - floors[i], -i), reverse=True)
    for i in order[:leftover]:
        floors[i] += 1
    return [(label, count) for (label, _), count in zip(items, floors)]


def _quota_assign(mix: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    parts = [np.repeat(label, count) for label, count in _quota_counts(mix, n)]
    values = np.concatenate(parts) if parts else np.empty(0, dtype="U8")
    rng.shuffle(values)
    return values


def latent_productivity(params: SynthParams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-period latent log-productivity, shape (n_periods, n_researchers)."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    sigma = params.latent_sigma
    u = np.empty((params.n_periods, params.n_researchers))
    u[0] = rng.normal(0.0, sigma, params.n_researchers)
    if params.n_periods > 1:
        eps = rng.normal(0.0, sigma, (params.n_periods - 1, params.n_researchers))
        carry = params.rho
        fresh = math.sqrt(max(0.0, 1.0 - params.rho**2))
        for p in range(1, params.n_periods):
            u[p] = carry * u[p - 1] + fresh * eps[p - 1]
    return u


def _zero_padded_ids(prefix: str, count: int, width: int) -> np.ndarray:
    digits = np.char.zfill(np.arange(count).astype(f"U{width}"), width)
    return np.char.add(prefix, digits)


def generate_synthetic(params: SynthParams, out_dir: str | Path) -> SynthResult:
    """Write roster.csv, publications.csv, authorships.csv, params.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(params.seed)
    n = params.n_researchers
    deterministic = params.noise == 0.0

    researcher_ids = _zero_padded_ids("R", n, 6)
    sds_idx = np.arange(n) % params.n_sds
    sds_labels = _zero_padded_ids("SDS", params.n_sds, 4)
    uda_labels = np.array([str(i % 9 + 1) for i in range(params.n_sds)])
    gender = _quota_assign(params.gender_mix, n, rng)
    region = _quota_assign(params.region_mix, n, rng)
    start_rank_names = _quota_assign(params.rank_mix, n, rng)
    rank_level_of = {name: level for level, name in enumerate(RANKS)}
    start_level = np.array([rank_level_of[r] for r in start_rank_names])
    university = np.char.add(np.char.add("U-", region), np.char.add("-", (np.arange(n) % 3).astype("U1")))

    if params.attrition > 0:
        years_present = np.minimum(rng.geometric(params.attrition, n), params.n_years)
    else:
        years_present = np.full(n, params.n_years)

    if params.promotion_rate > 0:
        promotions = rng.random((n, params.n_years)) < params.promotion_rate
    else:
        promotions = np.zeros((n, params.n_years), dtype=bool)
    rank_levels = np.minimum(
        start_level[:, None] + np.cumsum(promotions, axis=1), len(RANKS) - 1
    )
    rank_names = np.array(RANKS)[rank_levels]

    u = latent_productivity(params, rng)
    # mean-one multiplier so rates keep their nominal scale
    mult = np.exp(u - params.latent_sigma**2 / 2.0)

    k = params.categories_per_sds
    category_labels = _zero_padded_ids("CAT", params.n_sds * k, 5)

    pub_researcher: list[np.ndarray] = []
    pub_year: list[np.ndarray] = []
    pub_category_code: list[np.ndarray] = []
    pub_citations: list[np.ndarray] = []
    pub_n_authors: list[np.ndarray] = []
    pub_position: list[np.ndarray] = []

    year_index = np.arange(params.n_years)
    for yi in year_index:
        period = yi // params.period_years
        present = years_present > yi
        lam = params.pubs_per_year * mult[period]
        if deterministic:
            counts = np.rint(lam).astype(np.int64)
        else:
            counts = rng.poisson(lam)
        counts = np.where(present, counts, 0)
        total = int(counts.sum())
        if total == 0:
            continue
        owners = np.repeat(np.arange(n), counts)
        mu_c = params.citation_scale * mult[period][owners]
        if deterministic:
            citations = np.rint(mu_c).astype(np.int64)
            n_authors = np.ones(total, dtype=np.int64)
            positions = np.ones(total, dtype=np.int64)
            cat_idx = np.zeros(total, dtype=np.int64)
        else:
            shape = 1.0 / params.citation_dispersion
            lam_c = rng.gamma(shape, mu_c * params.citation_dispersion)
            citations = rng.poisson(lam_c)
            n_authors = 1 + rng.poisson(max(params.mean_coauthors - 1.0, 0.0), total)
            positions = rng.integers(1, n_authors, endpoint=True)
            cat_idx = rng.integers(0, k, total) if k > 1 else np.zeros(total, dtype=np.int64)
        pub_researcher.append(owners)
        pub_year.append(np.full(total, params.start_year + yi, dtype=np.int64))
        pub_category_code.append(sds_idx[owners] * k + cat_idx)
        pub_citations.append(citations.astype(np.int64))
        pub_n_authors.append(n_authors.astype(np.int64))
        pub_position.append(positions.astype(np.int64))

    # roster rows: one per present researcher-year
    present_matrix = year_index[None, :] < years_present[:, None]
    row_researcher, row_year_idx = np.nonzero(present_matrix)
    roster = pd.DataFrame(
        {
            "researcher_id": researcher_ids[row_researcher],
            "year": params.start_year + row_year_idx,
            "gender": gender[row_researcher],
            "sds": sds_labels[sds_idx[row_researcher]],
            "uda": uda_labels[sds_idx[row_researcher]],
            "university_id": university[row_researcher],
            "macro_region": region[row_researcher],
            "rank": rank_names[row_researcher, row_year_idx],
        }
    )

    if pub_researcher:
        owners = np.concatenate(pub_researcher)
        total_pubs = len(owners)
        pub_ids = _zero_padded_ids("P", total_pubs, 9)
        publications = pd.DataFrame(
            {
                "pub_id": pub_ids,
                "year": np.concatenate(pub_year),
                "subject_category": category_labels[np.concatenate(pub_category_code)],
                "citations": np.concatenate(pub_citations),
                "n_authors": np.concatenate(pub_n_authors),
            }
        )
        authorships = pd.DataFrame(
            {
                "pub_id": pub_ids,
                "researcher_id": researcher_ids[owners],
                "position": np.concatenate(pub_position),
                "intramural_last_author": "",
            }
        )
    else:
        publications = pd.DataFrame(
            columns=["pub_id", "year", "subject_category", "citations", "n_authors"]
        )
        authorships = pd.DataFrame(
            columns=["pub_id", "researcher_id", "position", "intramural_last_author"]
        )

    roster_path = out_dir / "roster.csv"
    publications_path = out_dir / "publications.csv"
    authorships_path = out_dir / "authorships.csv"
    params_path = out_dir / "params.json"
    roster.to_csv(roster_path, index=False)
    publications.to_csv(publications_path, index=False)
    authorships.to_csv(authorships_path, index=False)
    params_path.write_text(json.dumps(asdict(params), indent=2, sort_keys=True) + "\n")

    return SynthResult(
        roster_path=roster_path,
        publications_path=publications_path,
        authorships_path=authorships_path,
        params_path=params_path,
        n_researchers=n,
        n_roster_rows=len(roster),
        n_publications=len(publications),
        n_authorships=len(authorships),
    )


@dataclass(frozen=True)
class IndependenceBaseline:
    """Expected persistence when period performances are independent."""

    expected_share: float
    expected_base_size: float
    standard_error: float

    @property
    def half_width_3se(self) -> float:
        return 3.0 * self.standard_error


def independence_baseline(params: SynthParams, top_share: float = 0.10) -> IndependenceBaseline:
    """Analytic share of base-period top members still top in every later period.

    Under rho = 0 the per-period top events are independent, so the expected
    share is top_share ** (number of follow periods); the standard error is
    binomial over the expected surviving base size.
    """
    follow_periods = params.n_periods - 1
    expected_share = top_share**follow_periods
    years_needed = (params.n_periods - 1) * params.period_years + eligibility_threshold(
        params.period_years
    )
    survival = (1.0 - params.attrition) ** (years_needed - 1)
    base_size = params.n_researchers * top_share * survival
    if base_size <= 0:
        raise ConfigError("expected base cohort is empty; increase population or top share")
    se = math.sqrt(expected_share * (1.0 - expected_share) / base_size)
    return IndependenceBaseline(expected_share, base_size, se)
