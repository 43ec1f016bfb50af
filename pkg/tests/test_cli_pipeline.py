import hashlib
import json
from pathlib import Path

import pytest

from fssrank.cli import main
from fssrank.config import (
    DEFAULT_PERIODS,
    RunConfig,
    apply_config_values,
    parse_periods,
    read_config_file,
)
from fssrank.errors import ConfigError
from fssrank.pipeline import STAGE_LONGEVITY, emit_euler, euler_document, run_pipeline
from fssrank.synth import SynthParams, generate_synthetic


# --- configuration -------------------------------------------------------------


def test_parse_periods():
    periods = parse_periods("A:2001-2004,B:2005-2008,C:2009-2012")
    assert periods == DEFAULT_PERIODS
    with pytest.raises(ConfigError):
        parse_periods("A;2001-2004")


def test_top_share_bounds():
    with pytest.raises(ConfigError):
        RunConfig(top_share=0.0).validate(require_inputs=False)
    with pytest.raises(ConfigError):
        RunConfig(top_share=0.6).validate(require_inputs=False)
    assert RunConfig(top_share=0.5).validate(require_inputs=False)


def test_top_cutoff_is_exact():
    assert RunConfig(top_share=0.10).top_cutoff == 90.0
    assert RunConfig(top_share=0.20).top_cutoff == 80.0


def test_overlapping_periods_rejected_before_computation():
    from fssrank.errors import ValidationError

    config = RunConfig(periods=parse_periods("A:2001-2004,B:2004-2008,C:2009-2012"))
    with pytest.raises(ValidationError):
        config.validate(require_inputs=False)


def test_config_file_parsing_and_flag_override(tmp_path):
    text = """
# analysis settings
top_share = 0.2
positional_sds = S1, S2
weight_first = 0.5
weight_last = 0.3
weight_middle_share = 0.2
inclusive_mu2 = true
jobs = 2
"""
    path = tmp_path / "run.cfg"
    path.write_text(text)
    config = apply_config_values(RunConfig(), read_config_file(path))
    assert config.top_share == 0.2
    assert config.positional_sds == {"S1", "S2"}
    assert config.weight_table.first == 0.5
    assert config.inclusive_mu2 is True
    assert config.jobs == 2
    overridden = apply_config_values(config, {"top_share": "0.1", "jobs": "1"})
    assert overridden.top_share == 0.1
    assert overridden.positional_sds == {"S1", "S2"}


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("no_such_key = 1\n")
    with pytest.raises(ConfigError):
        apply_config_values(RunConfig(), read_config_file(path))


def test_invalid_weight_table_from_config_rejected():
    with pytest.raises(ConfigError):
        apply_config_values(RunConfig(), {"weight_first": "0.6", "weight_last": "0.6"})


# --- pipeline ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthdata")
    params = SynthParams(seed=31, n_researchers=300, n_sds=6, attrition=0.02)
    result = generate_synthetic(params, root)
    return result


def _config(result, out, **kw):
    return RunConfig(
        roster_path=result.roster_path,
        publications_path=result.publications_path,
        authorships_path=result.authorships_path,
        out_dir=Path(out),
        **kw,
    )


def _bundle_hashes(root):
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(Path(root).rglob("*"))
        if p.is_file()
    }


def test_full_run_writes_expected_bundle(small_dataset, tmp_path):
    result = run_pipeline(_config(small_dataset, tmp_path / "out"))
    names = {p.name for p in result.written}
    assert {
        "scores.csv",
        "cohorts.csv",
        "longevity_overall.csv",
        "longevity_uda_ts.csv",
        "longevity_uda_ts_mu2.csv",
        "concentration_gender_ts.csv",
        "concentration_macro_region_un.csv",
        "career.csv",
        "mobility.csv",
        "mobility_flows.csv",
        "euler_ts.json",
        "euler_un.json",
        "report.json",
        "euler_ts.png",
        "concentration_un.png",
    } <= names
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert set(report["periods"]) == {"A", "B", "C"}
    assert report["analysis"]["top_share"] == 0.10


def test_rerun_and_parallel_run_are_byte_identical(small_dataset, tmp_path):
    run_pipeline(_config(small_dataset, tmp_path / "one"))
    run_pipeline(_config(small_dataset, tmp_path / "two"))
    run_pipeline(_config(small_dataset, tmp_path / "three", jobs=3))
    first = _bundle_hashes(tmp_path / "one")
    assert first == _bundle_hashes(tmp_path / "two")
    assert first == _bundle_hashes(tmp_path / "three")


def test_euler_nesting_invariants_hold(small_dataset, tmp_path):
    result = run_pipeline(
        _config(small_dataset, tmp_path / "out", figures=False),
        stages=frozenset({STAGE_LONGEVITY}),
    )
    for kind in ("ts", "un", "ts_mu2"):
        report = result.longevity[kind]
        assert report.joint_members <= report.pair_members["B"] <= result.frames[kind].base_members
        assert report.joint_members <= report.pair_members["C"] <= result.frames[kind].base_members


def test_no_figures_flag_skips_pngs(small_dataset, tmp_path):
    result = run_pipeline(_config(small_dataset, tmp_path / "out", figures=False))
    assert not [p for p in result.written if p.suffix == ".png"]


def test_emit_euler_document(tmp_path):
    from fssrank.longitudinal import build_survival_frame, cohort_intersections

    members = [f"T{i}" for i in range(10)]
    eligibility = {"A": set(members), "B": set(members), "C": set(members)}
    frame = build_survival_frame(members, eligibility, DEFAULT_PERIODS)
    report = cohort_intersections(frame, {"B": set(members[:5]), "C": set(members[:2])})
    path = tmp_path / "euler.json"
    doc = emit_euler(report, path, cohort_kind="ts")
    on_disk = json.loads(path.read_text())
    assert on_disk == doc
    assert doc["cardinality"]["A"] == 10
    assert doc["cardinality"]["A∩B"] == 5
    assert doc["cardinality"]["A∩B∩C"] == 2
    assert doc["share_pct"]["A∩B"] == 50.0


def _intersection_report(n_base, n_b, n_c, n_joint, prefix="T"):
    from fssrank.longitudinal import build_survival_frame, cohort_intersections

    members = [f"{prefix}{i:05d}" for i in range(n_base)]
    b_set = set(members[:n_b])
    c_set = set(members[:n_joint]) | set(members[n_b : n_b + (n_c - n_joint)])
    eligibility = {"A": set(members), "B": set(members), "C": set(members)}
    frame = build_survival_frame(members, eligibility, DEFAULT_PERIODS)
    return cohort_intersections(frame, {"B": b_set, "C": c_set})


def test_emit_euler_reference_cardinalities(tmp_path):
    report = _intersection_report(2883, 1572, 1196, 1004)
    doc = emit_euler(report, tmp_path / "ts.json", cohort_kind="ts")
    assert doc["cardinality"] == {"A": 2883, "A∩B": 1572, "A∩C": 1196, "A∩B∩C": 1004}
    assert doc["share_pct"]["A∩B"] == 55.0
    assert doc["share_pct"]["A∩C"] == 41.0
    assert doc["share_pct"]["A∩B∩C"] == 35.0

    un = _intersection_report(4703, 2517, 1900, 1680, prefix="U")
    doc_un = emit_euler(un, tmp_path / "un.json", cohort_kind="un")
    assert doc_un["cardinality"]["A∩B"] == 2517
    assert doc_un["cardinality"]["A∩B∩C"] == 1680
    assert doc_un["share_pct"]["A∩B"] == 54.0
    assert doc_un["share_pct"]["A∩B∩C"] == 36.0


def test_pairwise_constraint_changes_pair_bases(small_dataset, tmp_path):
    strict = run_pipeline(
        _config(small_dataset, tmp_path / "strict", figures=False),
        stages=frozenset({STAGE_LONGEVITY}),
    )
    relaxed = run_pipeline(
        _config(
            small_dataset,
            tmp_path / "relaxed",
            figures=False,
            survival_constraint="pairwise_on_staff",
        ),
        stages=frozenset({STAGE_LONGEVITY}),
    )
    strict_ts = strict.longevity["ts"]
    relaxed_ts = relaxed.longevity["ts"]
    # attrition makes the single-period bases at least as large as the joint base
    assert relaxed_ts.pair_bases["B"] >= strict_ts.pair_bases["B"]
    assert relaxed_ts.joint_base == strict_ts.joint_base
    assert relaxed_ts.joint_count == strict_ts.joint_count


def test_emit_euler_empty_base_reports_zero_shares():
    frame_members = []
    from fssrank.longitudinal import build_survival_frame, cohort_intersections

    frame = build_survival_frame(frame_members, {"A": set(), "B": set(), "C": set()}, DEFAULT_PERIODS)
    report = cohort_intersections(frame, {"B": set(), "C": set()})
    doc = euler_document(report, "ts", "all_periods_on_staff")
    assert doc["cardinality"] == {"A": 0, "A∩B": 0, "A∩C": 0, "A∩B∩C": 0}
    assert set(doc["share_pct"].values()) == {0.0}


# --- command line ---------------------------------------------------------------


def _base_flags(result):
    return [
        "--roster",
        str(result.roster_path),
        "--publications",
        str(result.publications_path),
        "--authorships",
        str(result.authorships_path),
    ]


def test_cli_subcommands_write_their_stage_outputs(small_dataset, tmp_path, capsys):
    flags = _base_flags(small_dataset)
    assert main(["ingest-check", *flags]) == 0
    assert "dataset is clean" in capsys.readouterr().out

    assert main(["score", *flags, "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "scores.csv").exists()
    assert not (tmp_path / "s" / "cohorts.csv").exists()

    assert main(["cohorts", *flags, "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "cohorts.csv").exists()

    assert main(["longevity", *flags, "--out", str(tmp_path / "l")]) == 0
    assert (tmp_path / "l" / "euler_ts.json").exists()
    assert not (tmp_path / "l" / "report.json").exists()

    assert main(["report", *flags, "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "report.json").exists()
    assert (tmp_path / "r" / "figures" / "euler_ts.png").exists()
    assert not (tmp_path / "r" / "scores.csv").exists()

    assert main(["run", *flags, "--out", str(tmp_path / "full"), "--no-figures"]) == 0
    assert (tmp_path / "full" / "scores.csv").exists()
    assert (tmp_path / "full" / "report.json").exists()


def test_cli_synth_roundtrip(tmp_path, capsys):
    out = tmp_path / "gen"
    assert main(["synth", "--out", str(out), "--seed", "4", "--researchers", "80", "--sds", "4"]) == 0
    assert (out / "roster.csv").exists()
    assert (out / "params.json").exists()


def test_cli_ingest_check_reports_findings(tmp_path, capsys):
    (tmp_path / "roster.csv").write_text(
        "researcher_id,year,gender,sds,uda,university_id,macro_region,rank\n"
        "R1,2001,M,S1,1,U1,North,assistant\n"
    )
    (tmp_path / "pubs.csv").write_text(
        "pub_id,year,subject_category,citations,n_authors\nP1,2001,X,3,1\n"
    )
    (tmp_path / "auths.csv").write_text("pub_id,researcher_id,position,intramural_last_author\n")
    rc = main(
        [
            "ingest-check",
            "--roster", str(tmp_path / "roster.csv"),
            "--publications", str(tmp_path / "pubs.csv"),
            "--authorships", str(tmp_path / "auths.csv"),
        ]
    )
    out = capsys.readouterr().out
    assert rc == 1
    assert "orphan publication" in out


def test_cli_exit_codes(small_dataset, tmp_path, capsys):
    flags = _base_flags(small_dataset)
    # 1: config/validation problems
    assert main(["run", *flags, "--out", str(tmp_path / "x"), "--periods", "A:2001-2004,B:2004-2008,C:2009-2012"]) == 1
    assert main(["run", *flags, "--out", str(tmp_path / "x"), "--top-share", "0.9"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("researcher_id,year\nR1,2001\n")
    assert main(["run", "--roster", str(bad), "--publications", str(small_dataset.publications_path),
                 "--authorships", str(small_dataset.authorships_path), "--out", str(tmp_path / "x")]) == 1
    # 3: missing input file
    assert main(["run", "--roster", str(tmp_path / "missing.csv"),
                 "--publications", str(small_dataset.publications_path),
                 "--authorships", str(small_dataset.authorships_path), "--out", str(tmp_path / "x")]) == 3
    # no partial bundle left behind
    assert not (tmp_path / "x").exists() or not list((tmp_path / "x").iterdir())


def test_cli_config_file_with_flag_override(small_dataset, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"roster = {small_dataset.roster_path}\n"
        f"publications = {small_dataset.publications_path}\n"
        f"authorships = {small_dataset.authorships_path}\n"
        "figures = false\n"
        "top_share = 0.2\n"
    )
    out = tmp_path / "cfgout"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--top-share", "0.1"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["analysis"]["top_share"] == 0.1
