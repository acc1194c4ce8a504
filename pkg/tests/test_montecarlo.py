import numpy as np
import pandas as pd
import pytest

from scripts import config, utils
from scripts.biphoton import BiphotonParams
from scripts.channel import ChannelParams
from scripts.montecarlo import (
    RECORD_COLUMNS,
    budget_check,
    campaign_checks,
    campaign_statistics,
    run_budget_comparison,
    run_campaign,
    run_lossy_campaign,
    run_single_photon_trial,
    run_unentangled_baseline,
)

# Settings
seed = 42
ntrials = 100_000
nepisodes = 10_000


@pytest.fixture(scope="module")
def campaign():
    p = BiphotonParams(sigma_coh=10.0, sigma_cor=0.1)
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0)
    return run_campaign(p, ch, ntrials, seed, threads=4)


@pytest.fixture(scope="module")
def independent_campaign():
    """lossless campaign whose streams share nothing with the lossy one"""
    p = BiphotonParams(sigma_coh=10.0, sigma_cor=0.1)
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0)
    return run_campaign(p, ch, ntrials, seed + 1000, threads=4)


@pytest.fixture(scope="module")
def lossy():
    p = BiphotonParams(sigma_coh=10.0, sigma_cor=0.1)
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0, eta=0.01)
    return run_lossy_campaign(p, ch, nepisodes, seed, threads=4)


def test_single_trial_matches_campaign_record(reference_params, reference_channel):
    record = run_single_photon_trial(reference_params, reference_channel, seed, 17)
    again = run_single_photon_trial(reference_params, reference_channel, seed, 17)
    assert record == again
    table = run_campaign(reference_params, reference_channel, 200, seed).records
    row = table.iloc[17]
    assert row["delta_t_est_u"] == record.delta_t_est
    assert row["delta_omega_est_rad_per_u"] == record.delta_omega_est


def test_record_columns(reference_params, reference_channel):
    table = run_campaign(reference_params, reference_channel, 100, seed).records
    assert list(table.columns) == RECORD_COLUMNS
    assert (table["stream"] == np.arange(100)).all()


def test_thread_count_does_not_change_results(reference_params, reference_channel):
    one = run_campaign(reference_params, reference_channel, 5000, seed, threads=1).records
    many = run_campaign(reference_params, reference_channel, 5000, seed, threads=8).records
    pd.testing.assert_frame_equal(one, many)


def test_too_few_trials(reference_params, reference_channel):
    with pytest.raises(ValueError):
        run_campaign(reference_params, reference_channel, 10, seed)


def test_campaign_beats_arthurs_kelly(campaign):
    assert campaign.rms[0] == pytest.approx(0.1, rel=0.02)
    assert campaign.rms[1] == pytest.approx(0.05, rel=0.02)
    assert campaign.product == pytest.approx(0.005, rel=0.04)
    assert campaign.product < 1.0 / 150
    assert campaign.bounds["TW"] == pytest.approx(50.00125)


def test_campaign_checks_pass(campaign):
    checks = campaign_checks(campaign)
    failed = [k for k, c in checks.items() if not c["passed"] and not c["informational"]]
    assert failed == []
    assert checks["product_vs_joint_bound"]["informational"]


def test_rms_interval_contains_exact_width(campaign):
    lo, hi = campaign.rms_ci[0]
    assert lo < 0.1 < hi
    lo, hi = campaign.rms_ci[1]
    assert lo < 0.05 < hi


def test_summary_is_serialisable(campaign):
    text = utils.to_json(campaign.summary())
    assert '"product"' in text
    assert text.endswith("\n")


def test_lossless_episodes_match_campaign(reference_params):
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0, eta=1.0)
    lossless = run_campaign(reference_params, ch, 500, seed)
    episodes = run_lossy_campaign(reference_params, ch, 500, seed)
    np.testing.assert_array_equal(lossless.rms, episodes.rms)
    assert (episodes.records["transmissions"] == 1).all()


def test_lossy_budget(lossy):
    budget = lossy.budget
    assert abs(budget["mean_transmissions"] - 100.0) < config.SIGMA_LEVEL * budget["se_transmissions"]
    assert budget_check(lossy)["passed"]


def test_lossy_accuracy_matches_lossless(lossy, independent_campaign):
    head = independent_campaign.records.iloc[:nepisodes]
    assert not np.array_equal(
        head["delta_t_est_u"].to_numpy(), lossy.records["delta_t_est_u"].to_numpy()
    )
    for i in range(2):
        gap = abs(lossy.rms[i] - independent_campaign.rms[i])
        assert gap < 3 * np.hypot(lossy.rms_se[i], independent_campaign.rms_se[i])


def test_unentangled_baseline():
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, eta=0.01)
    result = run_unentangled_baseline(nepisodes, 0.01, 10.0, seed, ch)
    budget = result.budget
    assert abs(budget["mean_transmissions"] - 200.0) < config.SIGMA_LEVEL * budget["se_transmissions"]
    assert result.rms[0] == pytest.approx(10.0, rel=0.05)
    assert result.rms[1] == pytest.approx(0.05, rel=0.05)
    assert result.bounds["exact_product"] == 0.5


def test_budget_comparison(reference_params):
    ch = ChannelParams(delta_t_s=3.0, delta_omega_s=0.2, delta_t_i=5.0, eta=0.05)
    result = run_budget_comparison(reference_params, ch, 4000, seed)
    assert result["budget_ratio"] == pytest.approx(2.0, rel=0.1)
    assert budget_check(result["baseline"])["passed"]
    assert budget_check(result["entangled"])["passed"]


def test_interleaved_policy_has_no_budget_target():
    result = run_unentangled_baseline(500, 0.2, 1.0, seed, policy="interleaved")
    assert result.budget["policy"] == "interleaved"
    assert budget_check(result)["informational"]


def test_single_parameter_statistics():
    estimates = np.array([1.0, -1.0, 3.0, -3.0])
    result = campaign_statistics(estimates, 0.0, pd.DataFrame(), names=("delta_t",))
    assert result.rms[0] == pytest.approx(np.sqrt(5.0))
    assert result.product is None
    summary = result.summary()
    assert "product" not in summary and "delta_omega" not in summary
    assert summary["delta_t"]["bias"] == 0.0
    with pytest.raises(ValueError):
        campaign_statistics(estimates, [0.0, 0.0], pd.DataFrame())
