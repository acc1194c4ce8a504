"""The signal-idler sum/difference unitary B_SI and the single-photon lidar built on it.

In frequency B_SI sends (w_S, w_I) to ((w_S + w_I) / 2, w_S - w_I); in time it sends
(t_S, t_I) to (t_S + t_I, (t_S - t_I) / 2). The two matrices are inverse transposes
of each other, so either representation gives the same state.
"""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from scripts.biphoton import BiphotonParams, build_biphoton, rms_T, rms_W
from scripts.channel import ChannelParams, apply_channel
from scripts.gaussian_state import (
    CoordLabel,
    GaussianAmplitude,
    Rep,
    Role,
    compare,
    cross_coupling,
    factor_out,
    freq_shift,
    linear_map,
    make_state,
    measurement_density,
    time_shift,
    to_rep,
)

logger = logging.getLogger(__name__)

TIME_MAP = np.array([[1.0, 1.0], [0.5, -0.5]])
FREQUENCY_MAP = np.array([[0.5, 0.5], [1.0, -1.0]])
TIME_MAP_INV = np.array([[0.5, 1.0], [0.5, -1.0]])
FREQUENCY_MAP_INV = np.array([[1.0, 0.5], [1.0, -0.5]])


class InvalidPair(ValueError):
    pass


@dataclass(frozen=True)
class PairSelector:
    signal_coord: CoordLabel
    idler_coord: CoordLabel

    def __post_init__(self):
        if self.signal_coord.photon_id == self.idler_coord.photon_id:
            raise InvalidPair("signal and idler must be different photons")
        if self.signal_coord.role is not Role.SIGNAL:
            raise InvalidPair(f"{self.signal_coord} is not a signal coordinate")
        if self.idler_coord.role is not Role.IDLER:
            raise InvalidPair(f"{self.idler_coord} is not an idler coordinate")


DEFAULT_PAIR = PairSelector(
    CoordLabel(0, Role.SIGNAL, Rep.TIME), CoordLabel(1, Role.IDLER, Rep.TIME)
)


# =============================================================================
#  B_SI
# =============================================================================


def _apply_pair_map(state: GaussianAmplitude, pair: PairSelector, maps: dict):
    rep = state.label(pair.signal_coord).rep
    state = to_rep(state, pair.idler_coord, rep)
    return linear_map(state, maps[rep], [pair.signal_coord, pair.idler_coord])


def apply_bsi(state: GaussianAmplitude, pair: PairSelector = DEFAULT_PAIR):
    """B_SI on the pair, in whichever rep the signal coordinate is held"""
    return _apply_pair_map(
        state, pair, {Rep.TIME: TIME_MAP, Rep.FREQUENCY: FREQUENCY_MAP}
    )


def apply_bsi_dagger(state: GaussianAmplitude, pair: PairSelector = DEFAULT_PAIR):
    return _apply_pair_map(
        state, pair, {Rep.TIME: TIME_MAP_INV, Rep.FREQUENCY: FREQUENCY_MAP_INV}
    )


def map_frequencies(omega_s: float, omega_i: float) -> tuple[float, float]:
    """where B_SI sends a frequency basis point"""
    return tuple(FREQUENCY_MAP @ np.array([omega_s, omega_i]))


def map_times(t_s: float, t_i: float) -> tuple[float, float]:
    return tuple(TIME_MAP @ np.array([t_s, t_i]))


# =============================================================================
#  End-to-end maps
# =============================================================================


def _entangled_path(
    ch: ChannelParams, state: GaussianAmplitude, pair: PairSelector = DEFAULT_PAIR
):
    state = apply_bsi_dagger(state, pair)
    state = apply_channel(state, pair.signal_coord, pair.idler_coord, ch)
    return apply_bsi(state, pair)


def _product_path(
    ch: ChannelParams, state: GaussianAmplitude, pair: PairSelector = DEFAULT_PAIR
):
    state = freq_shift(state, pair.signal_coord, ch.delta_omega_s / 2.0)
    state = time_shift(state, pair.signal_coord, ch.delta_t_s + ch.delta_t_i)
    state = freq_shift(state, pair.idler_coord, ch.delta_omega_s)
    return time_shift(state, pair.idler_coord, (ch.delta_t_s - ch.delta_t_i) / 2.0)


def u_single_entangled_path(ch: ChannelParams) -> Callable:
    """B_SI (channel x storage) B_SI^dagger as a map on states"""
    return partial(_entangled_path, ch)


def u_single_product_path(ch: ChannelParams) -> Callable:
    """the same map written as independent signal and idler displacements"""
    return partial(_product_path, ch)


def path_equivalence(
    ch: ChannelParams, state: GaussianAmplitude, pair: PairSelector = DEFAULT_PAIR
) -> dict:
    """compare both constructions of the single-photon map on one input"""
    entangled = u_single_entangled_path(ch)(state, pair)
    product = u_single_product_path(ch)(state, pair)
    diff = compare(entangled, product)
    logger.debug("path equivalence phase offset %.6f", diff["phase"])
    return diff


def product_input_state(p: BiphotonParams) -> GaussianAmplitude:
    """Source-side product state in frequency representation.

    exp(-4 sigma_coh^2 (w_S - w_P / 2)^2 - sigma_cor^2 (w_I - delta_omega)^2 / 4);
    B_SI^dagger of it is the biphoton.
    """
    a_s = 8.0 * p.sigma_coh**2
    a_i = p.sigma_cor**2 / 2.0
    A = np.diag([a_s, a_i]).astype(complex)
    b = np.array([a_s * p.omega_p / 2.0, a_i * p.delta_omega], dtype=complex)
    labels = [
        CoordLabel(0, Role.SIGNAL, Rep.FREQUENCY),
        CoordLabel(1, Role.IDLER, Rep.FREQUENCY),
    ]
    return make_state(A, b, labels)


# =============================================================================
#  Post-transform state and estimators
# =============================================================================


def post_bsi_state(
    p: BiphotonParams, ch: ChannelParams, pair: PairSelector = DEFAULT_PAIR
) -> GaussianAmplitude:
    """Biphoton through channel and storage, then B_SI, with the signal held in
    frequency and the idler in time, ready for measurement."""
    state = build_biphoton(p)
    state = apply_channel(state, pair.signal_coord, pair.idler_coord, ch)
    state = apply_bsi(state, pair)
    state = to_rep(state, pair.signal_coord, Rep.FREQUENCY)
    return to_rep(state, pair.idler_coord, Rep.TIME)


def estimate_from_outcomes(omega_s, t_i, delta_t_i: float, omega_p: float):
    """(delay, Doppler) estimates 2 t_I + dt_I and 2 w_S - w_P; works on arrays"""
    return 2.0 * np.asarray(t_i) + delta_t_i, 2.0 * np.asarray(omega_s) - omega_p


def factorization_report(
    p: BiphotonParams, ch: ChannelParams, pair: PairSelector = DEFAULT_PAIR
) -> dict:
    """Exact post-B_SI marginals next to the large sigma_coh / sigma_cor widths.

    The Gaussian factorises exactly; only the widths 8 sigma_coh^2 and 2 / sigma_cor^2
    turn into 8 T^2 and 8 W^2 in that limit.
    """
    state = post_bsi_state(p, ch, pair)
    signal = factor_out(state, [pair.signal_coord])
    idler = factor_out(state, [pair.idler_coord])
    T, W = rms_T(p), rms_W(p)
    report = {
        "cross_coupling": cross_coupling(
            state, ([pair.signal_coord], [pair.idler_coord])
        ),
        "signal_A_exact": float(signal.A[0, 0].real),
        "signal_A_approx": 8.0 * T**2,
        "signal_mean": float(signal.b[0].real / signal.A[0, 0].real),
        "idler_A_exact": float(idler.A[0, 0].real),
        "idler_A_approx": 8.0 * W**2,
        "idler_mean": float(idler.b[0].real / idler.A[0, 0].real),
    }
    report["signal_width_gap"] = report["signal_A_approx"] / report["signal_A_exact"] - 1
    report["idler_width_gap"] = report["idler_A_approx"] / report["idler_A_exact"] - 1
    logger.info(
        "post-B_SI widths: signal gap %.3e, idler gap %.3e",
        report["signal_width_gap"],
        report["idler_width_gap"],
    )
    return report


def estimator_moments(
    p: BiphotonParams, ch: ChannelParams, pair: PairSelector = DEFAULT_PAIR
) -> dict:
    """Distribution-level means and stds of the two estimators."""
    state = post_bsi_state(p, ch, pair)
    density = measurement_density(state)
    i_s, i_i = state.index(pair.signal_coord), state.index(pair.idler_coord)
    mean_t, mean_w = estimate_from_outcomes(
        density.mean[i_s], density.mean[i_i], ch.delta_t_i, p.omega_p
    )
    return {
        "mean_delta_t": float(mean_t),
        "mean_delta_omega": float(mean_w),
        "std_delta_t": float(2.0 * density.std[i_i]),
        "std_delta_omega": float(2.0 * density.std[i_s]),
        "exact_std_delta_t": p.sigma_cor,
        "exact_std_delta_omega": 1.0 / (2.0 * p.sigma_coh),
        "asymptotic_std_delta_t": 1.0 / (2.0 * rms_W(p)),
        "asymptotic_std_delta_omega": 1.0 / (2.0 * rms_T(p)),
        "outcome_correlation": float(
            density.covariance[i_s, i_i] / (density.std[i_s] * density.std[i_i])
        ),
    }

