"""Command-line workflows: simulate / correct / evaluate / sweep / inspect."""

import csv
import json

import numpy as np
import pytest

from editer import AcquisitionDataset, read_dataset, write_dataset
from editer.cli import REPORT_COLUMNS, run_cli
from editer.presets import get_preset
from editer.sim import save_scenario

from conftest import random_complex

ROI = "2:16,2:21"   # object-free region of the mini preset


def read_report(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


@pytest.fixture()
def pipeline_files(tmp_path):
    raw = tmp_path / "raw.eds"
    corrected = tmp_path / "corr.eds"
    report = tmp_path / "report.csv"
    assert run_cli(["simulate", "--preset", "mini_single_tone", "--out", str(raw)]) == 0
    return raw, corrected, report


def test_simulate_correct_evaluate_pipeline(pipeline_files, capsys):
    raw, corrected, report = pipeline_files
    assert run_cli([
        "correct", "--in", str(raw), "--out", str(corrected), "--dkx", "3",
    ]) == 0
    assert run_cli([
        "evaluate",
        "--uncorrected", str(raw),
        "--corrected", str(corrected),
        "--roi", ROI,
        "--report", str(report),
    ]) == 0
    rows = read_report(report)
    assert len(rows) == 1
    assert list(rows[0]) == REPORT_COLUMNS
    assert float(rows[0]["emi_removed_pct"]) > 50.0
    assert rows[0]["over_correction"] == "false"
    assert float(rows[0]["nrmse_corrected"]) < float(rows[0]["nrmse_uncorrected"])


def test_simulate_from_scenario_json(tmp_path):
    scenario_path = tmp_path / "scenario.json"
    save_scenario(get_preset("mini_single_tone").scenario, scenario_path)
    out = tmp_path / "ds.eds"
    assert run_cli(["simulate", "--scenario", str(scenario_path), "--out", str(out)]) == 0
    ds = read_dataset(out)
    assert ds.primary.shape == (64, 24)
    assert ds.n_detectors == 2
    assert ds.ground_truth is not None


def test_simulate_seed_override_changes_data(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.eds", "b.eds", "c.eds"))
    run_cli(["simulate", "--preset", "mini_single_tone", "--out", str(a)])
    run_cli(["simulate", "--preset", "mini_single_tone", "--out", str(b), "--seed", "1"])
    run_cli(["simulate", "--preset", "mini_single_tone", "--out", str(c)])
    assert a.read_bytes() == c.read_bytes()
    assert a.read_bytes() != b.read_bytes()


def test_correct_report_and_config_file(pipeline_files, tmp_path):
    raw, corrected, report = pipeline_files
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dkx": 5, "cluster_threshold": 0.4}))
    assert run_cli([
        "correct", "--in", str(raw), "--out", str(corrected),
        "--config", str(cfg), "--dkx", "3", "--report", str(report),
    ]) == 0
    rows = read_report(report)
    assert rows[0]["dkx"] == "3"          # flag beats config file
    assert rows[0]["cluster_threshold"] == "0.4"
    assert rows[0]["n_groups"] == "1"
    assert float(rows[0]["wall_time_s"]) > 0


def test_multipartition_evaluate_appends_aggregate(tmp_path):
    raw = tmp_path / "raw.eds"
    corrected = tmp_path / "corr.eds"
    report = tmp_path / "report.csv"
    run_cli(["simulate", "--preset", "mini_single_tone", "--out", str(raw), "--partitions", "3"])
    run_cli(["correct", "--in", str(raw), "--out", str(corrected), "--dkx", "3"])
    run_cli([
        "evaluate", "--uncorrected", str(raw), "--corrected", str(corrected),
        "--roi", ROI, "--report", str(report),
    ])
    rows = read_report(report)
    assert [r["partition"] for r in rows] == ["0", "1", "2", "all"]


def test_sweep_reports_one_row_per_window(pipeline_files):
    raw, _, report = pipeline_files
    assert run_cli([
        "sweep", "--in", str(raw), "--dkx", "1,3,5",
        "--roi", ROI, "--report", str(report),
    ]) == 0
    rows = read_report(report)
    assert [r["dkx"] for r in rows] == ["1", "3", "5"]
    assert all(float(r["wall_time_s"]) > 0 for r in rows)
    assert all(r["emi_removed_pct"] for r in rows)


def test_inspect_prints_header(pipeline_files, capsys):
    raw, *_ = pipeline_files
    assert run_cli(["inspect", "--in", str(raw)]) == 0
    out = capsys.readouterr().out
    assert "64x24" in out
    assert "ground_truth=yes" in out
    assert "partition 0: ok" in out


def test_image_export(pipeline_files, tmp_path):
    raw, corrected, report = pipeline_files
    run_cli(["correct", "--in", str(raw), "--out", str(corrected), "--dkx", "3"])
    prefix = tmp_path / "img"
    assert run_cli([
        "evaluate", "--uncorrected", str(raw), "--corrected", str(corrected),
        "--roi", ROI, "--report", str(report), "--images", str(prefix),
    ]) == 0
    for suffix in ("_p0_uncorrected.pgm", "_p0_corrected.pgm"):
        data = (tmp_path / f"img{suffix}").read_bytes()
        assert data.startswith(b"P5\n24 64\n255\n")


def test_correct_without_detectors_fails_validation(tmp_path, rng, capsys):
    path = tmp_path / "nodet.eds"
    ds = AcquisitionDataset(primary=random_complex(rng, (8, 4)), detectors=())
    write_dataset(ds, path)
    code = run_cli(["correct", "--in", str(path), "--out", str(tmp_path / "o.eds")])
    assert code == 4
    err = capsys.readouterr().err
    assert err.startswith("error: numerical:")
    assert err.count("\n") == 1


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli(["correct", "--bogus"]) == 2
    assert capsys.readouterr().err.startswith("error: usage:")


def test_missing_file_is_io_error(tmp_path, capsys):
    code = run_cli(["correct", "--in", str(tmp_path / "absent.eds"), "--out", str(tmp_path / "o.eds")])
    assert code == 3
    assert capsys.readouterr().err.startswith("error: io:")


def test_bad_roi_is_usage_error(pipeline_files, tmp_path, capsys):
    raw, corrected, report = pipeline_files
    run_cli(["correct", "--in", str(raw), "--out", str(corrected), "--dkx", "3"])
    code = run_cli([
        "evaluate", "--uncorrected", str(raw), "--corrected", str(corrected),
        "--roi", "junk", "--report", str(report),
    ])
    assert code == 2


def test_bad_config_value_is_usage_error(pipeline_files, tmp_path):
    raw, corrected, _ = pipeline_files
    assert run_cli([
        "correct", "--in", str(raw), "--out", str(corrected), "--dkx", "4",
    ]) == 2


def test_rerun_is_deterministic(pipeline_files, tmp_path):
    raw, corrected, report = pipeline_files
    other = tmp_path / "corr2.eds"
    run_cli(["correct", "--in", str(raw), "--out", str(corrected), "--dkx", "3"])
    run_cli(["correct", "--in", str(raw), "--out", str(other), "--dkx", "3"])
    assert corrected.read_bytes() == other.read_bytes()


def test_help_exits_zero(capsys):
    assert run_cli(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out
