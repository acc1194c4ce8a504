import json

import pandas as pd
import pytest

from scripts.cli import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_NUMERICAL_ERROR,
    EXIT_PASS,
    create_parser,
    load_scenario,
    main,
    run_scenario,
)
from scripts.scenario_config import parse_config

SMALL_CAMPAIGN = """\
[scenario]
kind = monte-carlo
seed = 11
n_trials = 2000

[biphoton]
sigma_coh = 10
sigma_cor = 0.1

[channel]
delta_t_s = 3
delta_omega_s = 0.2
delta_t_i = 5

[checks]
enabled = false
"""

ARTHURS_KELLY = """\
[scenario]
kind = crlb
seed = 1

[biphoton]
sigma_coh = 0.5
sigma_cor = 1.0
"""


SMALL_SCAN = """\
[scenario]
kind = hl-scan
seed = 3
n_trials = 200

[channel]
delta_t_s = 3
delta_omega_s = 0.2
delta_t_i = 5

[glm]
M_values = 1, 2
epsilon_fractions = 0.04, 0.02, 0.01
T = 10
W = 5

[checks]
slope_tolerance = 10
constant_tolerance = 10
"""

SMALL_DIRECT = """\
[scenario]
kind = glm-direct
seed = 3
n_trials = 200

[glm]
M_values = 1, 2
epsilon_fractions = 0.04, 0.02, 0.01
width = 5
delta_t = 3

[checks]
enabled = false
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _read_summary(out):
    return json.loads((out / "summary.json").read_text(encoding="utf-8"))


def test_sdc_demo(tmp_path):
    out = tmp_path / "sdc"
    assert main(["sdc-demo", "--out", str(out)]) == EXIT_PASS
    summary = _read_summary(out)
    assert summary["passed"]
    assert summary["results"]["decoded"] == 4
    assert len(pd.read_csv(out / "records.csv")) == 4


def test_crlb_at_minimum_time_bandwidth(tmp_path):
    config = _write(tmp_path, "ak.cfg", ARTHURS_KELLY)
    out = tmp_path / "crlb"
    assert main(["crlb", "--config", config, "--out", str(out)]) == EXIT_PASS
    results = _read_summary(out)["results"]
    assert results["product_bound"] == pytest.approx(1.0)
    assert "Arthurs-Kelly" in results["annotation"]
    assert (out / "product_bound_vs_tw.tsv").exists()


def test_bad_config_exits_with_config_error(tmp_path):
    config = _write(tmp_path, "bad.cfg", SMALL_CAMPAIGN + "eta = 1.5\n")
    assert main(["monte-carlo", "--config", config, "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR


def test_kind_mismatch(tmp_path):
    config = _write(tmp_path, "ak.cfg", ARTHURS_KELLY)
    assert main(["monte-carlo", "--config", config]) == EXIT_CONFIG_ERROR


def test_missing_file(tmp_path):
    assert main(["crlb", "--config", str(tmp_path / "none.cfg")]) == EXIT_CONFIG_ERROR


def test_artifacts_do_not_depend_on_threads(tmp_path):
    config = _write(tmp_path, "mc.cfg", SMALL_CAMPAIGN)
    outputs = []
    for threads in ("1", "4"):
        out = tmp_path / f"threads{threads}"
        code = main(["monte-carlo", "--config", config, "--out", str(out), "--threads", threads])
        assert code == EXIT_PASS
        outputs.append(out)
    names = sorted(p.name for p in outputs[0].iterdir())
    assert names == sorted(p.name for p in outputs[1].iterdir())
    assert "records.csv" in names and "running_rms_delta_t.tsv" in names
    for name in names:
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()


def test_overrides_from_flags(tmp_path):
    config = _write(tmp_path, "mc.cfg", SMALL_CAMPAIGN)
    args = create_parser().parse_args(
        ["monte-carlo", "--config", config, "--seed", "5", "--trials", "500"]
    )
    c = load_scenario(args)
    assert c.seed == 5 and c.n_trials == 500


def test_failed_check_exit_status(tmp_path):
    text = SMALL_CAMPAIGN.replace("enabled = false", "rms_tolerance = 1e-9")
    assert run_scenario(parse_config(text), str(tmp_path)) == EXIT_CHECK_FAILED
    assert not _read_summary(tmp_path)["passed"]


def test_numerical_error_exit_status(tmp_path):
    text = SMALL_CAMPAIGN.replace("n_trials = 2000", "n_trials = 10")
    assert run_scenario(parse_config(text), str(tmp_path)) == EXIT_NUMERICAL_ERROR
    assert not (tmp_path / "summary.json").exists()


def test_shipped_campaign_passes(tmp_path):
    assert main(["monte-carlo", "--out", str(tmp_path), "--threads", "4"]) == EXIT_PASS
    summary = _read_summary(tmp_path)
    assert len(summary["config_hash"]) == 64
    assert summary["results"]["delta_t"]["rms"] == pytest.approx(0.1, rel=0.02)


def test_hl_scan_writes_trial_records(tmp_path):
    assert run_scenario(parse_config(SMALL_SCAN), str(tmp_path)) == EXIT_PASS
    records = pd.read_csv(tmp_path / "records.csv")
    assert len(records) == 200 * 2 * 3
    assert list(records.columns[:3]) == ["M", "epsilon_fraction", "stream"]
    assert (records["transmissions"] == records["M"]).all()
    checks = _read_summary(tmp_path)["checks"]
    assert checks["equivalence_M1"]["passed"] and checks["equivalence_M2"]["passed"]
    assert len(pd.read_csv(tmp_path / "runs.tsv", sep="\t")) == 6


def test_hl_scan_fails_on_broken_equivalence(tmp_path, monkeypatch):
    def drifted(first, second):
        return {"max_dA": 1e-6, "max_db": 0.0, "norm_gap": 0.0, "phase": 0.0}

    monkeypatch.setattr("scripts.glm.compare", drifted)
    assert run_scenario(parse_config(SMALL_SCAN), str(tmp_path)) == EXIT_CHECK_FAILED
    checks = _read_summary(tmp_path)["checks"]
    assert not checks["equivalence_M2"]["passed"]
    assert checks["slope_delta_t"]["passed"]


def test_glm_direct_writes_trial_records(tmp_path):
    assert run_scenario(parse_config(SMALL_DIRECT), str(tmp_path)) == EXIT_PASS
    records = pd.read_csv(tmp_path / "records.csv")
    assert len(records) == 200 * 2 * 3
    assert "delta_t_est_u" in records.columns
    extrapolated = _read_summary(tmp_path)["results"]["extrapolated"]
    assert [row["M"] for row in extrapolated] == [1, 2]
