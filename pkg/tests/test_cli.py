"""End-to-end CLI checks: every subcommand through main(argv), exit codes,
and that emitted files parse back through the library loaders."""

import csv
import json

import numpy as np
import pytest

from simpac import bands, scores
from simpac.cli import main


@pytest.fixture()
def score_file(tmp_path):
    gen = np.random.Generator(np.random.Philox(111))
    path = tmp_path / "scores.csv"
    scores.save_scores(np.sort(gen.random(150)), path)
    return path


def test_quantile_command(tmp_path):
    out = tmp_path / "table.json"
    rc = main(
        [
            "quantile", "--statistic", "dw", "--m", "50",
            "--delta", "0.1", "--delta", "0.2",
            "--reps", "2000", "--seed", "5", "--out", str(out),
        ]
    )
    assert rc == 0
    table = bands.load_quantile_table(out)
    assert table.statistic == "dw" and table.m == 50
    assert table.kappa(0.05 + 0.05) >= table.kappa(0.2)


def test_quantile_rejects_bad_statistic(tmp_path, capsys):
    rc = main(
        ["quantile", "--statistic", "dw", "--m", "50", "--delta", "1.5",
         "--reps", "2000", "--seed", "5", "--out", str(tmp_path / "t.json")]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err.lower()


def test_band_command_dkw(tmp_path, score_file):
    out = tmp_path / "band.json"
    rc = main(["band", "--method", "dkw", "--scores", str(score_file),
               "--delta", "0.1", "--out", str(out)])
    assert rc == 0
    band = bands.load_band(out)
    assert band.method == "dkw" and band.m == 150


def test_band_command_dw_with_kappa_file(tmp_path, score_file):
    table = tmp_path / "table.json"
    assert main(["quantile", "--statistic", "dw", "--m", "150", "--delta", "0.1",
                 "--reps", "2000", "--seed", "5", "--out", str(table)]) == 0
    out = tmp_path / "band.json"
    rc = main(["band", "--method", "dw", "--scores", str(score_file),
               "--delta", "0.1", "--kappa-file", str(table), "--out", str(out)])
    assert rc == 0
    band = bands.load_band(out)
    assert band.method == "dw"
    assert band.kappa == bands.load_quantile_table(table).kappa(0.1)


def test_band_command_kappa_file_mismatch(tmp_path, score_file):
    table = tmp_path / "table.json"
    main(["quantile", "--statistic", "dw", "--m", "99", "--delta", "0.1",
          "--reps", "2000", "--seed", "5", "--out", str(table)])
    rc = main(["band", "--method", "dw", "--scores", str(score_file),
               "--delta", "0.1", "--kappa-file", str(table), "--out", str(tmp_path / "b.json")])
    assert rc == 2  # table was computed for a different sample size


def test_band_command_dw_needs_seed_or_table(tmp_path, score_file):
    rc = main(["band", "--method", "dw", "--scores", str(score_file),
               "--delta", "0.1", "--out", str(tmp_path / "b.json")])
    assert rc == 2


def test_band_command_one_sided(tmp_path, score_file):
    out = tmp_path / "band.json"
    rc = main(["band", "--method", "dkw", "--scores", str(score_file),
               "--delta", "0.1", "--one-sided", "--out", str(out)])
    assert rc == 0
    band = bands.load_band(out)
    assert band.sided == "lower-only"
    assert np.all(band.upper == 1.0)


def test_band_command_rw_with_sidecar(tmp_path, score_file):
    out = tmp_path / "band.json"
    side = tmp_path / "family.json"
    rc = main(["band", "--method", "rw", "--scores", str(score_file),
               "--delta", "0.1", "--reps", "2000", "--seed", "7",
               "--sidecar", str(side), "--out", str(out)])
    assert rc == 0
    assert bands.load_band(out).method == "rw"
    doc = json.loads(side.read_text())
    assert doc["n"] == 150 and len(doc["interval_lower"]) > 0


def test_band_command_rw_rejects_restriction(tmp_path, score_file):
    rc = main(["band", "--method", "rw", "--scores", str(score_file),
               "--delta", "0.1", "--reps", "2000", "--seed", "7",
               "--restrict", "0,0.5", "--out", str(tmp_path / "b.json")])
    assert rc == 2


def test_band_command_restricted_dw(tmp_path, score_file):
    out = tmp_path / "band.json"
    rc = main(["band", "--method", "dw", "--scores", str(score_file),
               "--delta", "0.1", "--restrict", "0,0.5", "--reps", "2000",
               "--seed", "7", "--out", str(out)])
    assert rc == 0
    assert bands.load_band(out).restriction == (0.0, 0.5)


def test_thresholds_command(tmp_path, score_file):
    band_path = tmp_path / "band.json"
    main(["band", "--method", "dkw", "--scores", str(score_file),
          "--delta", "0.1", "--out", str(band_path)])
    out = tmp_path / "curve.csv"
    rc = main(["thresholds", "--band", str(band_path), "--alphas", "0.1,0.3,0.5",
               "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 3
    assert rows[0]["alpha"] == "0.1"
    assert float(rows[2]["q_hat"]) <= float(rows[1]["q_hat"])

    ranged = tmp_path / "curve2.csv"
    rc = main(["thresholds", "--band", str(band_path), "--alpha-range", "0.1:0.5:0.1",
               "--out", str(ranged)])
    assert rc == 0
    assert len(ranged.read_text().strip().splitlines()) == 6  # header + 5 levels


def test_thresholds_command_stdout(tmp_path, score_file, capsys):
    band_path = tmp_path / "band.json"
    main(["band", "--method", "dkw", "--scores", str(score_file),
          "--delta", "0.1", "--out", str(band_path)])
    rc = main(["thresholds", "--band", str(band_path), "--alphas", "0.25"])
    assert rc == 0
    assert "q_hat" in capsys.readouterr().out


def test_simulate_command(tmp_path):
    cfg = {
        "mode": "uniform", "n_cal": 80, "n_train": 10, "n_test": 10, "reps": 4,
        "delta": 0.1, "alpha_grid": [0.2, 0.5], "methods": ["dkw-sim", "split"],
        "seed": 3, "mc_reps": 2000,
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    prefix = tmp_path / "run"
    rc = main(["simulate", "--config", str(cfg_path), "--out", str(prefix)])
    assert rc == 0
    report = json.loads((tmp_path / "run.json").read_text())
    assert set(report["methods"]) == {"dkw-sim", "split"}
    lines = (tmp_path / "run.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2


def test_compare_command(tmp_path, score_file):
    out = tmp_path / "compare.csv"
    rc = main(["compare", "--scores", str(score_file), "--delta", "0.1",
               "--methods", "dkw,bjo", "--reps", "2000", "--seed", "5",
               "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 151
    assert {"index", "breakpoint", "dkw_lower", "dkw_upper", "bjo_lower", "bjo_upper"} <= set(
        rows[0]
    )
    assert float(rows[0]["dkw_lower"]) == 0.0


def test_missing_file_is_reported(tmp_path, capsys):
    rc = main(["band", "--method", "dkw", "--scores", str(tmp_path / "absent.csv"),
               "--delta", "0.1", "--out", str(tmp_path / "b.json")])
    assert rc == 2
    assert "error" in capsys.readouterr().err.lower()


def test_unknown_subcommand_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
