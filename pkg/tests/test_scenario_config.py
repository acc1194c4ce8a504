import pytest

from scripts.config import paths
from scripts.scenario_config import (
    KINDS,
    ConfigTypeError,
    MissingRequired,
    UnknownKey,
    config_hash,
    parse_config,
    read_config,
    serialize_config,
)

MONTE_CARLO = """\
# lossless campaign
[scenario]
kind = monte-carlo
seed = 42
n_trials = 1000

[biphoton]
sigma_coh = 10
sigma_cor = 0.1

[channel]
delta_t_s = 3
delta_omega_s = 0.2
delta_t_i = 5
"""

HL_SCAN = """\
[scenario]
kind = hl-scan
seed = 7
n_trials = 2000
threads = 2

[glm]
M_values = 1, 2, 4
epsilon_fractions = 0.04, 0.02, 0.01
T = 10
W = 5

[channel]
delta_t_s = 3.0
delta_omega_s = 0.2
delta_t_i = 5.0

[checks]
enabled = false
"""


def test_minimal_config():
    config = parse_config(MONTE_CARLO)
    assert config.kind == "monte-carlo"
    assert config.seed == 42
    assert config.n_trials == 1000
    assert config.threads == 1
    assert config.biphoton().sigma_coh == 10.0
    ch = config.channel()
    assert (ch.delta_t_s, ch.delta_omega_s, ch.delta_t_i, ch.eta) == (3.0, 0.2, 5.0, 1.0)
    assert config.checks_enabled()


def test_lists_and_booleans():
    config = parse_config(HL_SCAN)
    assert config.get("glm", "M_values") == (1, 2, 4)
    assert config.get("glm", "epsilon_fractions") == (0.04, 0.02, 0.01)
    assert config.threads == 2
    assert not config.checks_enabled()


def test_invalid_eta_reports_line():
    text = MONTE_CARLO + "eta = 1.5\n"
    with pytest.raises(ConfigTypeError) as err:
        parse_config(text)
    assert err.value.line == 15
    assert str(err.value).startswith("line 15: ")


@pytest.mark.parametrize(
    "line", ["sigma_coh = ten", "sigma_coh = -1", "sigma_coh = nan", "sigma_coh"]
)
def test_bad_values(line):
    text = MONTE_CARLO.replace("sigma_coh = 10", line)
    with pytest.raises(ConfigTypeError) as err:
        parse_config(text)
    assert err.value.line == 8


def test_duplicate_key():
    with pytest.raises(ConfigTypeError):
        parse_config(MONTE_CARLO.replace("seed = 42", "seed = 42\nseed = 43"))


def test_unknown_key_and_section():
    with pytest.raises(UnknownKey):
        parse_config(MONTE_CARLO + "colour = blue\n")
    with pytest.raises(UnknownKey):
        parse_config(MONTE_CARLO + "[plots]\n")


def test_missing_required():
    with pytest.raises(MissingRequired):
        parse_config(MONTE_CARLO.replace("n_trials = 1000\n", ""))
    with pytest.raises(MissingRequired):
        parse_config(MONTE_CARLO.replace("seed = 42\n", ""))
    with pytest.raises(ConfigTypeError):
        parse_config(MONTE_CARLO.replace("monte-carlo", "fourier"))


def test_seed_range():
    with pytest.raises(ConfigTypeError):
        parse_config(MONTE_CARLO.replace("seed = 42", "seed = -1"))
    with pytest.raises(ConfigTypeError):
        parse_config(MONTE_CARLO.replace("seed = 42", f"seed = {2**64}"))


def test_glm_photon_limit():
    with pytest.raises(ConfigTypeError):
        parse_config(HL_SCAN.replace("1, 2, 4", "1, 2, 64"))


def test_target_overrides_channel_shifts():
    text = (
        MONTE_CARLO.replace("delta_t_s = 3\ndelta_omega_s = 0.2\n", "")
        + "\n[target]\nrange = 1.5\nradial_velocity = 0.001\ncarrier = 100\n"
    )
    ch = parse_config(text).channel()
    assert ch.delta_t_s == pytest.approx(3.0)
    assert ch.delta_omega_s == pytest.approx(0.2)
    assert ch.delta_t_i == 5.0


def test_empty_target_is_rejected():
    with pytest.raises(ConfigTypeError) as err:
        parse_config(MONTE_CARLO + "\n[target]\n")
    assert err.value.line == 16


def test_target_conflicts_with_channel_shifts():
    with pytest.raises(ConfigTypeError) as err:
        parse_config(MONTE_CARLO + "\n[target]\nrange = 1.5\n")
    assert err.value.line == 16
    assert "delta_t_s" in str(err.value)


def test_round_trip_keeps_channel():
    text = HL_SCAN.replace("enabled = false", "") + "\n[baseline]\n"
    config = parse_config(text)
    again = parse_config(serialize_config(config))
    assert again == config
    assert again.channel() == config.channel()
    assert config_hash(again) == config_hash(config)


def test_invalid_target_is_a_config_error():
    text = (
        MONTE_CARLO.replace("delta_t_s = 3\ndelta_omega_s = 0.2\n", "")
        + "\n[target]\nrange = 1\nradial_velocity = 2\ncarrier = 1\n"
    )
    with pytest.raises(ConfigTypeError):
        parse_config(text)


@pytest.mark.parametrize("text", [MONTE_CARLO, HL_SCAN])
def test_canonical_form(text):
    config = parse_config(text)
    canonical = serialize_config(config)
    assert parse_config(canonical) == config
    assert serialize_config(parse_config(canonical)) == canonical
    assert canonical.endswith("\n") and not canonical.endswith("\n\n")


def test_hash_ignores_layout():
    shuffled = MONTE_CARLO.replace("seed = 42\n", "").replace(
        "n_trials = 1000", "n_trials = 1000\nseed = 42  # fixed"
    )
    assert config_hash(parse_config(shuffled)) == config_hash(parse_config(MONTE_CARLO))
    changed = parse_config(MONTE_CARLO.replace("sigma_cor = 0.1", "sigma_cor = 0.2"))
    assert config_hash(changed) != config_hash(parse_config(MONTE_CARLO))


def test_overrides():
    config = parse_config(MONTE_CARLO)
    other = config.with_overrides(seed=7, n_trials=None)
    assert other.seed == 7 and other.n_trials == 1000
    assert config.seed == 42
    with pytest.raises(ValueError):
        config.with_overrides(n_trials=0)


@pytest.mark.parametrize("kind", KINDS)
def test_shipped_scenarios_parse(kind):
    config = read_config(paths.scenario_file(kind))
    assert config.kind == kind
