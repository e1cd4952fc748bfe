import csv
import json

import pytest

from kernspec import cli


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(argv):
    return cli.main(argv)


def test_eigs_outputs(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"family": "linear", "p0": 0.5,
                                          "p1": 0.1, "d": 5},
                               "top": 3})
    out = tmp_path / "out"
    assert run(["eigs", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "eigenvalues.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["index"] for r in rows] == ["1", "2", "3"]
    assert float(rows[0]["eigenvalue"]) == 0.5
    assert rows[0]["level"] == "0"
    payload = json.loads((out / "eigenvalues.json").read_text())
    assert payload["eigenvalues"][0] == 0.5
    assert payload["hypothesis_h"] is True
    assert payload["seed"] == 0


def test_unknown_config_field_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": "gaussian_wide", "bogus": 1})
    assert run(["eigs", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_missing_config_file_exit_2(tmp_path):
    assert run(["eigs", "--config", str(tmp_path / "nope.json"),
                "--out", str(tmp_path)]) == 2


def test_invalid_kernel_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"family": "mystery"}})
    assert run(["eigs", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_non_object_config_exit_2(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]")
    assert run(["eigs", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_missing_required_field_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": "gaussian_wide"})
    assert run(["coverage", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_bounds_r_not_below_n_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": "gaussian_wide", "n": 10, "i": 1,
                               "R": 10})
    assert run(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path):
    # lambda_i = 0 makes the relative bound undefined: numerical failure
    cfg = write_cfg(tmp_path, {"kernel": {"family": "constant", "p0": 0.3},
                               "n": 100, "i": 2, "R": 1})
    assert run(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_bounds_report(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": "gaussian_wide", "n": 2000, "i": 1,
                               "R": 5, "alpha": 0.05,
                               "regularity": {"tag": "H2", "delta": 1.0}})
    out = tmp_path / "b"
    assert run(["bounds", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "bounds.json").read_text())
    assert payload["i"] == 1 and payload["R"] == 5
    assert payload["regime"].startswith("H2")
    assert payload["study"] == "bounds"


def test_bounds_bad_regularity_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": "gaussian_wide", "n": 100, "i": 1,
                               "R": 5, "regularity": {"tag": "H1",
                                                      "delta": 2.0,
                                                      "extra": 1}})
    assert run(["bounds", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_deviation_study_end_to_end(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"family": "linear", "p0": 0.5,
                                          "p1": 0.1, "d": 5},
                               "n_grid": [50, 100], "indices": [1],
                               "trials": 30})
    out = tmp_path / "dev"
    assert run(["deviation", "--config", cfg, "--out", str(out),
                "--seed", "7"]) == 0
    payload = json.loads((out / "deviation.json").read_text())
    assert payload["config"]["seed"] == 7
    assert "50:1" in payload["summaries"]["median"]
    with open(out / "deviation.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60


def test_coverage_end_to_end(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"family": "linear", "p0": 0.5,
                                          "p1": 0.1, "d": 5},
                               "n": 200, "R": 6, "trials": 30,
                               "gram_only": True})
    out = tmp_path / "cov"
    assert run(["coverage", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "coverage.json").read_text())
    assert 0.0 <= payload["summaries"]["gram_exceedance"] <= 1.0


def test_compare_end_to_end(tmp_path):
    cfg = write_cfg(tmp_path, {"kernel": {"family": "linear", "p0": 0.5,
                                          "p1": 0.1, "d": 5},
                               "n": 100, "indices": [1, 2], "trials": 30})
    out = tmp_path / "cmp"
    assert run(["compare", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "compare.json").read_text())
    assert set(payload["summaries"]["per_index"]) == {"1", "2"}


def test_rates_end_to_end(tmp_path):
    cfg = write_cfg(tmp_path, {"deltas": [4, 8], "betas": [0.0, 0.1, 0.9]})
    out = tmp_path / "rates"
    assert run(["rates", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "rates.csv") as fh:
        rows = list(csv.reader(fh))
    assert float(rows[1][1]) == -0.5
    assert float(rows[1][2]) == -0.85
    assert float(rows[2][3]) == -7.25


def test_threads_env_parsing(tmp_path, monkeypatch):
    monkeypatch.setenv("KERNSPEC_THREADS", "3")

    class Args:
        threads = None

    assert cli.resolve_threads(Args()) == 3
    monkeypatch.setenv("KERNSPEC_THREADS", "many")
    with pytest.raises(cli.ConfigError):
        cli.resolve_threads(Args())


def test_seed_override_beats_config(tmp_path):
    cfg = {"seed": 9}

    class Args:
        seed = 4

    assert cli._seed(cfg, Args()) == 4
    Args.seed = None
    assert cli._seed(cfg, Args()) == 9
