"""Command-line interface.

Subcommands mirror the pipeline stages:

    ingest-check   load and validate the three input CSVs
    score          write per-period scores.csv
    cohorts        write per-period cohorts.csv
    longevity      write survival tables, breakdowns, career/mobility, set JSONs
    report         write report.json and render figures (full report bundle)
    run            everything above in one pass
    synth          generate a seeded synthetic dataset

Exit codes: 0 success, 1 validation/config error, 2 computation error, 3 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import RunConfig, apply_config_values, read_config_file
from .errors import ComputationError, ConfigError, FssrankError, ValidationError
from .ingest import load_dataset, validate_dataset
from .pipeline import (
    ALL_STAGES,
    STAGE_COHORTS,
    STAGE_LONGEVITY,
    STAGE_REPORT,
    STAGE_SCORES,
    run_pipeline,
)
from .synth import SynthParams, generate_synthetic

log = logging.getLogger("fssrank")

_STAGES_BY_COMMAND = {
    "score": frozenset({STAGE_SCORES}),
    "cohorts": frozenset({STAGE_COHORTS}),
    "longevity": frozenset({STAGE_LONGEVITY}),
    "report": frozenset({STAGE_LONGEVITY, STAGE_REPORT}),
    "run": ALL_STAGES,
}


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--roster", help="roster.csv path")
    parser.add_argument("--publications", help="publications.csv path")
    parser.add_argument("--authorships", help="authorships.csv path")
    parser.add_argument("--config", help="key=value config file; flags override it")


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output directory for the report bundle")
    parser.add_argument("--periods", help="e.g. A:2001-2004,B:2005-2008,C:2009-2012")
    parser.add_argument("--top-share", type=float, help="top cohort share, default 0.10")
    parser.add_argument("--positional-sds", help="comma list of SDS codes using positional weights")
    parser.add_argument("--weight-first", type=float, help="positional weight of the first author")
    parser.add_argument("--weight-last", type=float, help="positional weight of the last author")
    parser.add_argument("--weight-middle-share", type=float, help="share split among middle authors")
    parser.add_argument(
        "--survival-constraint",
        choices=("all_periods_on_staff", "pairwise_on_staff"),
        help="staff-presence rule for the survival base cohort",
    )
    parser.add_argument(
        "--inclusive-mu2", action="store_true", default=None,
        help="include scores equal to the second mean in the second-mean cohort",
    )
    parser.add_argument("--jobs", type=int, help="worker processes for per-period scoring")
    parser.add_argument(
        "--no-figures", action="store_true", default=None, help="skip PNG figure rendering"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fssrank",
        description="Field-normalized productivity scores and cohort longevity reports.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("ingest-check", help="validate the input CSVs")
    _add_input_flags(check)

    for name, help_text in (
        ("score", "compute per-period scores"),
        ("cohorts", "extract per-period cohorts"),
        ("longevity", "write survival and breakdown tables"),
        ("report", "write report.json and figures"),
        ("run", "full pipeline"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_input_flags(cmd)
        _add_analysis_flags(cmd)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--out", required=True, help="directory for the generated CSVs")
    synth.add_argument("--seed", type=int, default=SynthParams.seed)
    synth.add_argument("--researchers", type=int, default=SynthParams.n_researchers)
    synth.add_argument("--sds", type=int, default=SynthParams.n_sds)
    synth.add_argument("--start-year", type=int, default=SynthParams.start_year)
    synth.add_argument("--years", type=int, default=SynthParams.n_years)
    synth.add_argument("--rate", type=float, default=SynthParams.pubs_per_year,
                       help="publications per researcher-year")
    synth.add_argument("--dispersion", type=float, default=SynthParams.citation_dispersion)
    synth.add_argument("--noise", type=float, default=SynthParams.noise,
                       help="0 disables production randomness")
    synth.add_argument("--rho", type=float, default=SynthParams.rho,
                       help="period-to-period persistence of latent productivity")
    synth.add_argument("--attrition", type=float, default=SynthParams.attrition)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if args.config:
        config = apply_config_values(config, read_config_file(args.config))
    overrides: dict[str, str] = {}
    if args.roster:
        overrides["roster"] = args.roster
    if args.publications:
        overrides["publications"] = args.publications
    if args.authorships:
        overrides["authorships"] = args.authorships
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    if getattr(args, "periods", None):
        overrides["periods"] = args.periods
    if getattr(args, "top_share", None) is not None:
        overrides["top_share"] = str(args.top_share)
    if getattr(args, "positional_sds", None):
        overrides["positional_sds"] = args.positional_sds
    if getattr(args, "weight_first", None) is not None:
        overrides["weight_first"] = str(args.weight_first)
    if getattr(args, "weight_last", None) is not None:
        overrides["weight_last"] = str(args.weight_last)
    if getattr(args, "weight_middle_share", None) is not None:
        overrides["weight_middle_share"] = str(args.weight_middle_share)
    if getattr(args, "survival_constraint", None):
        overrides["survival_constraint"] = args.survival_constraint
    if getattr(args, "inclusive_mu2", None):
        overrides["inclusive_mu2"] = "true"
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = str(args.jobs)
    if getattr(args, "no_figures", None):
        overrides["figures"] = "false"
    return apply_config_values(config, overrides)


def _run_ingest_check(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate(require_inputs=True)
    dataset = load_dataset(config.roster_path, config.publications_path, config.authorships_path)
    report = validate_dataset(dataset)
    print(
        f"loaded {len(dataset.roster)} roster rows, {len(dataset.publications)} publications, "
        f"{len(dataset.authorships)} authorships"
    )
    if report.is_clean():
        print("dataset is clean")
        return 0
    for entry in report.entries():
        print(f"finding: {entry}")
    return 1


def _run_synth(args: argparse.Namespace) -> int:
    params = SynthParams(
        seed=args.seed,
        n_researchers=args.researchers,
        n_sds=args.sds,
        start_year=args.start_year,
        n_years=args.years,
        pubs_per_year=args.rate,
        citation_dispersion=args.dispersion,
        noise=args.noise,
        rho=args.rho,
        attrition=args.attrition,
    )
    result = generate_synthetic(params, args.out)
    print(
        f"wrote {result.n_roster_rows} roster rows, {result.n_publications} publications, "
        f"{result.n_authorships} authorships to {args.out}"
    )
    return 0


def _run_analysis(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    stages = _STAGES_BY_COMMAND[args.command]
    result = run_pipeline(config, stages=stages)
    for path in result.written:
        print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "ingest-check":
            return _run_ingest_check(args)
        if args.command == "synth":
            return _run_synth(args)
        return _run_analysis(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2
    except FssrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
