import numpy as np
import pytest

from conftest import random_biphoton, random_channel
from scripts.biphoton import BiphotonParams, build_biphoton
from scripts.bsi import (
    DEFAULT_PAIR,
    FREQUENCY_MAP,
    FREQUENCY_MAP_INV,
    TIME_MAP,
    TIME_MAP_INV,
    InvalidPair,
    PairSelector,
    apply_bsi,
    apply_bsi_dagger,
    estimate_from_outcomes,
    estimator_moments,
    factorization_report,
    map_frequencies,
    map_times,
    path_equivalence,
    post_bsi_state,
    product_input_state,
    u_single_entangled_path,
    u_single_product_path,
)
from scripts.channel import ChannelParams
from scripts.gaussian_state import (
    CoordLabel,
    Rep,
    Role,
    cross_coupling,
    equal_up_to_phase,
    fourier,
)

# Settings
seed = 3
nruns = 100
tol = 1e-9

rng = np.random.default_rng(seed)
cases = [(random_biphoton(rng), random_channel(rng)) for _ in range(nruns)]


def test_maps_are_inverse_transposes():
    np.testing.assert_allclose(TIME_MAP @ TIME_MAP_INV, np.eye(2))
    np.testing.assert_allclose(FREQUENCY_MAP @ FREQUENCY_MAP_INV, np.eye(2))
    np.testing.assert_allclose(np.linalg.inv(TIME_MAP).T, FREQUENCY_MAP)
    assert abs(np.linalg.det(TIME_MAP)) == pytest.approx(1.0)


def test_basis_points():
    assert map_frequencies(3.0, 1.0) == pytest.approx((2.0, 2.0))
    assert map_times(3.0, 1.0) == pytest.approx((4.0, 1.0))


def test_pair_validation():
    s = CoordLabel(0, Role.SIGNAL, Rep.TIME)
    with pytest.raises(InvalidPair):
        PairSelector(s, CoordLabel(0, Role.IDLER, Rep.TIME))
    with pytest.raises(InvalidPair):
        PairSelector(s, CoordLabel(1, Role.SIGNAL, Rep.TIME))
    with pytest.raises(InvalidPair):
        PairSelector(CoordLabel(1, Role.IDLER, Rep.TIME), s)


@pytest.mark.parametrize("p,ch", cases)
def test_bsi_round_trip(p, ch):
    state = build_biphoton(p)
    assert equal_up_to_phase(apply_bsi_dagger(apply_bsi(state)), state, tol)
    assert equal_up_to_phase(apply_bsi(apply_bsi_dagger(state)), state, tol)


@pytest.mark.parametrize("p,ch", cases[:30])
def test_bsi_is_rep_independent(p, ch):
    """B_SI applied in frequency equals B_SI applied in time"""
    state = build_biphoton(p)
    in_time = apply_bsi(state)
    spectrum = fourier(fourier(state, DEFAULT_PAIR.signal_coord), DEFAULT_PAIR.idler_coord)
    assert equal_up_to_phase(apply_bsi(spectrum), in_time, tol)


@pytest.mark.parametrize("p,ch", cases)
def test_path_equivalence(p, ch):
    diff = path_equivalence(ch, build_biphoton(p))
    assert max(diff["max_dA"], diff["max_db"], diff["norm_gap"]) < tol


def test_path_equivalence_phase_is_state_independent(reference_channel):
    phases = np.array(
        [path_equivalence(reference_channel, build_biphoton(p))["phase"] for p, _ in cases[:10]]
    )
    offsets = np.exp(1j * phases) / np.exp(1j * phases[0])
    np.testing.assert_allclose(offsets, np.ones(len(phases)), atol=1e-9)


def test_paths_are_callables(reference_params, reference_channel):
    state = build_biphoton(reference_params)
    entangled = u_single_entangled_path(reference_channel)(state, DEFAULT_PAIR)
    product = u_single_product_path(reference_channel)(state, DEFAULT_PAIR)
    assert equal_up_to_phase(entangled, product, tol)


@pytest.mark.parametrize("p", [c[0] for c in cases[:30]])
def test_product_input_state_is_the_biphoton_source(p):
    source = apply_bsi_dagger(product_input_state(p))
    assert equal_up_to_phase(source, build_biphoton(p), tol)


@pytest.mark.parametrize("p,ch", cases[:50])
def test_post_bsi_state_factorises(p, ch):
    state = post_bsi_state(p, ch)
    assert state.label(DEFAULT_PAIR.signal_coord).rep is Rep.FREQUENCY
    assert state.label(DEFAULT_PAIR.idler_coord).rep is Rep.TIME
    pair = ([DEFAULT_PAIR.signal_coord], [DEFAULT_PAIR.idler_coord])
    assert cross_coupling(state, pair) < 1e-12


def test_factorization_report_widths(reference_params, reference_channel):
    report = factorization_report(reference_params, reference_channel)
    assert report["signal_A_exact"] == pytest.approx(8 * 10.0**2)
    assert report["idler_A_exact"] == pytest.approx(2 / 0.1**2)
    assert abs(report["signal_width_gap"]) < 1e-3
    assert abs(report["idler_width_gap"]) < 1e-3
    assert report["signal_mean"] == pytest.approx((0.0 + 0.2) / 2)
    assert report["idler_mean"] == pytest.approx((3.0 - 5.0) / 2)


def test_estimators_are_unbiased(reference_params, reference_channel):
    moments = estimator_moments(reference_params, reference_channel)
    assert moments["mean_delta_t"] == pytest.approx(3.0, abs=1e-9)
    assert moments["mean_delta_omega"] == pytest.approx(0.2, abs=1e-9)
    assert moments["std_delta_t"] == pytest.approx(0.1, rel=1e-9)
    assert moments["std_delta_omega"] == pytest.approx(0.05, rel=1e-9)
    assert abs(moments["outcome_correlation"]) < 1e-9


def test_estimators_with_offsets():
    p = BiphotonParams(sigma_coh=3.0, sigma_cor=0.4, delta_omega=0.7, omega_p=2.0)
    ch = ChannelParams(delta_t_s=-1.2, delta_omega_s=0.35, delta_t_i=2.5)
    moments = estimator_moments(p, ch)
    assert moments["mean_delta_t"] == pytest.approx(-1.2, abs=1e-9)
    assert moments["mean_delta_omega"] == pytest.approx(0.35, abs=1e-9)


def test_estimate_from_outcomes_on_arrays():
    dt, dw = estimate_from_outcomes(np.array([1.0, 2.0]), np.array([0.5, -0.5]), 5.0, 1.0)
    np.testing.assert_allclose(dt, [6.0, 4.0])
    np.testing.assert_allclose(dw, [1.0, 3.0])
