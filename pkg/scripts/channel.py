"""The lidar channel: target delay and Doppler on the signal, lossless storage of the
idler, Bernoulli survival of transmitted signal photons, and the range/velocity to
delay/Doppler conversions."""

import logging
from dataclasses import dataclass

import numpy as np

from scripts import config
from scripts.gaussian_state import GaussianAmplitude, freq_shift, make_state, time_shift
from scripts.utils import make_rng

logger = logging.getLogger(__name__)

BASELINE_POLICIES = ("sequential", "interleaved")


class InvalidTruth(ValueError):
    pass


class InvalidEta(ValueError):
    pass


class EpisodeOverflow(RuntimeError):
    pass


def check_eta(eta: float) -> float:
    if not np.isfinite(eta) or not 0.0 < eta <= 1.0:
        raise InvalidEta(f"eta must lie in (0, 1], got {eta}")
    return float(eta)


@dataclass(frozen=True)
class ChannelParams:
    delta_t_s: float = 0.0
    delta_omega_s: float = 0.0
    delta_t_i: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        check_eta(self.eta)
        for name in ("delta_t_s", "delta_omega_s", "delta_t_i"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidTruth(f"{name} must be finite")

    @property
    def theta(self) -> np.ndarray:
        """parameter vector [delta_t_s, delta_omega_s]"""
        return np.array([self.delta_t_s, self.delta_omega_s])


@dataclass(frozen=True)
class TargetTruth:
    range_: float
    radial_velocity: float
    carrier: float
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0 or not np.isfinite(self.c):
            raise InvalidTruth(f"c must be positive, got {self.c}")
        if not self.range_ >= 0 or not np.isfinite(self.range_):
            raise InvalidTruth(f"range must be non-negative, got {self.range_}")
        if not abs(self.radial_velocity) < self.c:
            raise InvalidTruth(f"|v| must be below c, got {self.radial_velocity}")
        if not np.isfinite(self.carrier):
            raise InvalidTruth("carrier must be finite")


# =============================================================================
#  Conversions
# =============================================================================


def truth_to_channel(
    truth: TargetTruth, delta_t_i: float, eta: float = 1.0
) -> ChannelParams:
    """roundtrip delay 2r/c and Doppler 2 w_Sc v / c"""
    return ChannelParams(
        delta_t_s=2.0 * truth.range_ / truth.c,
        delta_omega_s=2.0 * truth.carrier * truth.radial_velocity / truth.c,
        delta_t_i=delta_t_i,
        eta=eta,
    )


def estimates_to_truth(
    delta_t: float, delta_omega: float, carrier: float, c: float = 1.0
) -> tuple[float, float]:
    """(range, radial velocity) implied by delay and Doppler estimates"""
    if carrier == 0:
        raise InvalidTruth("carrier must be non-zero to convert a Doppler shift")
    return c * delta_t / 2.0, c * delta_omega / (2.0 * carrier)


# =============================================================================
#  Channel on states
# =============================================================================


def apply_target_channel(
    state: GaussianAmplitude, signal_coord, p: ChannelParams
) -> GaussianAmplitude:
    """delay by half the roundtrip, Doppler at the target, delay the other half"""
    state = time_shift(state, signal_coord, p.delta_t_s / 2.0)
    state = freq_shift(state, signal_coord, p.delta_omega_s)
    return time_shift(state, signal_coord, p.delta_t_s / 2.0)


def apply_idler_storage(
    state: GaussianAmplitude, idler_coord, delta_t_i: float
) -> GaussianAmplitude:
    return time_shift(state, idler_coord, delta_t_i)


def apply_channel(state: GaussianAmplitude, signal_coord, idler_coord, p: ChannelParams):
    """target channel on the signal and storage on the idler"""
    state = apply_target_channel(state, signal_coord, p)
    return apply_idler_storage(state, idler_coord, p.delta_t_i)


def receiver_state(A: np.ndarray, b: np.ndarray, labels, p: ChannelParams):
    """Receiver wavefunction written out directly for a time-domain pair.

    psi(t_S - dt_S, t_I - dt_I) exp(-i dw_S (t_S - dt_S / 2)) for the pair (A, b)
    over (signal-time, idler-time).
    """
    A = np.asarray(A, dtype=complex)
    shift = np.array([p.delta_t_s, p.delta_t_i])
    b = np.asarray(b, dtype=complex) + A @ shift
    b[0] -= 1j * p.delta_omega_s
    return make_state(A, b, labels)


# =============================================================================
#  Survival
# =============================================================================


def survival_trial(eta: float, seed: int, stream: int) -> bool:
    """one Bernoulli(eta) transmission"""
    eta = check_eta(eta)
    rng = make_rng(seed, stream, config.RNG_DOMAIN_SURVIVAL)
    return bool(rng.random() < eta)


def _survival_chunks(eta: float, seed: int, stream: int):
    """successive chunks of survival flags for one episode"""
    rng = make_rng(seed, stream, config.RNG_DOMAIN_SURVIVAL)
    drawn = 0
    while drawn < config.MAX_EPISODE_TRANSMISSIONS:
        size = min(config.SURVIVAL_CHUNK, config.MAX_EPISODE_TRANSMISSIONS - drawn)
        yield drawn, rng.random(size) < eta
        drawn += size
    raise EpisodeOverflow(
        f"no episode end within {config.MAX_EPISODE_TRANSMISSIONS} transmissions "
        f"(eta = {eta})"
    )


def transmissions_until_k_returns(eta: float, k: int, seed: int, stream: int) -> int:
    """number of transmissions up to and including the k-th return"""
    eta = check_eta(eta)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    returns = 0
    for offset, survived in _survival_chunks(eta, seed, stream):
        hits = np.flatnonzero(survived)
        if returns + len(hits) >= k:
            return int(offset + hits[k - returns - 1] + 1)
        returns += len(hits)


def baseline_episode(eta: float, seed: int, stream: int, policy: str = "sequential") -> int:
    """Transmissions until one time-committed and one frequency-committed photon return.

    sequential commits each photon to whichever measurement is still missing.
    interleaved alternates time and frequency commitments photon by photon.
    """
    eta = check_eta(eta)
    if policy == "sequential":
        return transmissions_until_k_returns(eta, 2, seed, stream)
    if policy != "interleaved":
        raise ValueError(f"unknown baseline policy {policy!r}, use {BASELINE_POLICIES}")

    first = {0: None, 1: None}
    for offset, survived in _survival_chunks(eta, seed, stream):
        hits = np.flatnonzero(survived) + offset
        for parity in (0, 1):
            if first[parity] is None:
                matching = hits[hits % 2 == parity]
                if len(matching):
                    first[parity] = int(matching[0])
        if first[0] is not None and first[1] is not None:
            return max(first.values()) + 1
