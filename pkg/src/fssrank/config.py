"""Run configuration: analysis settings, config-file parsing, flag overrides.

The config file is flat ``key = value`` text; ``#`` starts a comment. Keys:

    roster / publications / authorships   input CSV paths
    out_dir                               report bundle directory
    periods                               e.g. A:2001-2004,B:2005-2008,C:2009-2012
    top_share                             fraction in (0, 0.5], default 0.10
    positional_sds                        comma list of SDS codes using positional weights
    weight_first / weight_last / weight_middle_share
    intramural_adjustment                 true|false (reserved flag on the weight table)
    inclusive_mu2                         true|false, >= instead of > at the second mean
    survival_constraint                   all_periods_on_staff | pairwise_on_staff
    jobs                                  worker processes for per-period scoring
    figures                               true|false, render PNG figures with reports

Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .longitudinal import SURVIVAL_CONSTRAINTS, ALL_PERIODS_ON_STAFF
from .model import PeriodWindow, check_consecutive
from .scoring import WeightTable

DEFAULT_PERIODS = (
    PeriodWindow("A", 2001, 2004),
    PeriodWindow("B", 2005, 2008),
    PeriodWindow("C", 2009, 2012),
)


def parse_periods(text: str) -> tuple[PeriodWindow, ...]:
    """Parse 'A:2001-2004,B:2005-2008,...' into period windows."""
    windows = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            label, years = chunk.split(":")
            start, end = years.split("-")
            windows.append(PeriodWindow(label.strip(), int(start), int(end)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad period spec {chunk!r} (want LABEL:START-END)") from exc
    if not windows:
        raise ConfigError("no periods given")
    return tuple(windows)


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key} must be true or false, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything the pipeline needs; validated before any computation."""

    roster_path: Path | None = None
    publications_path: Path | None = None
    authorships_path: Path | None = None
    out_dir: Path = Path("fssrank-out")
    periods: tuple[PeriodWindow, ...] = DEFAULT_PERIODS
    top_share: float = 0.10
    positional_sds: frozenset[str] = frozenset()
    weight_table: WeightTable = field(default_factory=WeightTable)
    inclusive_mu2: bool = False
    survival_constraint: str = ALL_PERIODS_ON_STAFF
    jobs: int = 1
    figures: bool = True

    @property
    def top_cutoff(self) -> float:
        """Percentile cutoff implied by the top share (e.g. 0.10 -> 90)."""
        return round(100.0 * (1.0 - self.top_share), 6)

    def validate(self, require_inputs: bool = True) -> "RunConfig":
        if not 0.0 < self.top_share <= 0.5:
            raise ConfigError(f"top_share must lie in (0, 0.5], got {self.top_share}")
        if self.survival_constraint not in SURVIVAL_CONSTRAINTS:
            raise ConfigError(
                f"survival_constraint must be one of {SURVIVAL_CONSTRAINTS}, got {self.survival_constraint!r}"
            )
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if len(self.periods) != 3:
            raise ConfigError(f"exactly three periods are required, got {len(self.periods)}")
        labels = [p.label for p in self.periods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate period labels: {labels}")
        check_consecutive(self.periods)
        if require_inputs:
            for name, path in (
                ("roster", self.roster_path),
                ("publications", self.publications_path),
                ("authorships", self.authorships_path),
            ):
                if path is None:
                    raise ConfigError(f"missing input path: {name}")
        return self

    def ordered_periods(self) -> tuple[PeriodWindow, ...]:
        return tuple(sorted(self.periods, key=lambda p: p.start_year))


_PATH_KEYS = {"roster": "roster_path", "publications": "publications_path", "authorships": "authorships_path", "out_dir": "out_dir"}


def read_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def apply_config_values(base: RunConfig, values: dict[str, str]) -> RunConfig:
    """Overlay flat key=value settings (file or CLI originated) onto a config."""
    updates: dict[str, object] = {}
    table_updates: dict[str, object] = {}
    for key, value in values.items():
        if key in _PATH_KEYS:
            updates[_PATH_KEYS[key]] = Path(value)
        elif key == "periods":
            updates["periods"] = parse_periods(value)
        elif key == "top_share":
            updates["top_share"] = float(value)
        elif key == "positional_sds":
            updates["positional_sds"] = frozenset(
                s.strip() for s in value.split(",") if s.strip()
            )
        elif key == "weight_first":
            table_updates["first"] = float(value)
        elif key == "weight_last":
            table_updates["last"] = float(value)
        elif key == "weight_middle_share":
            table_updates["middle_share"] = float(value)
        elif key == "intramural_adjustment":
            table_updates["intramural_adjustment"] = _parse_bool(value, key)
        elif key == "inclusive_mu2":
            updates["inclusive_mu2"] = _parse_bool(value, key)
        elif key == "survival_constraint":
            updates["survival_constraint"] = value
        elif key == "jobs":
            updates["jobs"] = int(value)
        elif key == "figures":
            updates["figures"] = _parse_bool(value, key)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    config = replace(base, **updates) if updates else base
    if table_updates:
        config = replace(config, weight_table=replace(config.weight_table, **table_updates))
    return config
