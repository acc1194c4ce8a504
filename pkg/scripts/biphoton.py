"""SPDC biphoton states and their summary statistics.

The time-domain biphoton is

    psi(t_S, t_I) ~ exp(-t_-^2 / 4 sigma_cor^2 - t_+^2 / 4 sigma_coh^2
                        - i (delta_omega t_- / 2 + omega_p t_+))

with t_- = t_S - t_I and t_+ = (t_S + t_I) / 2.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from scripts import config
from scripts.gaussian_state import (
    CoordLabel,
    GaussianAmplitude,
    Rep,
    Role,
    make_state,
)

logger = logging.getLogger(__name__)

SIGNAL = CoordLabel(0, Role.SIGNAL, Rep.TIME)
IDLER = CoordLabel(1, Role.IDLER, Rep.TIME)


class InvalidParams(ValueError):
    pass


class GridTooCoarse(RuntimeError):
    pass


@dataclass(frozen=True)
class BiphotonParams:
    sigma_coh: float
    sigma_cor: float
    delta_omega: float = 0.0
    omega_p: float = 0.0

    def __post_init__(self):
        for name in ("sigma_coh", "sigma_cor"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidParams(f"{name} must be positive and finite, got {value}")
        for name in ("delta_omega", "omega_p"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")


# =============================================================================
#  State
# =============================================================================


def time_domain_parameters(p: BiphotonParams) -> tuple[np.ndarray, np.ndarray]:
    """(A, b) of the time-domain biphoton over (t_S, t_I)"""
    alpha = 1.0 / (4.0 * p.sigma_cor**2)
    beta = 1.0 / (16.0 * p.sigma_coh**2)
    A = np.array(
        [
            [2.0 * (alpha + beta), 2.0 * (beta - alpha)],
            [2.0 * (beta - alpha), 2.0 * (alpha + beta)],
        ],
        dtype=complex,
    )
    b = np.array(
        [-0.5j * (p.delta_omega + p.omega_p), -0.5j * (p.omega_p - p.delta_omega)]
    )
    return A, b


def frequency_domain_parameters(p: BiphotonParams) -> tuple[np.ndarray, np.ndarray]:
    """(A, b) of the frequency-domain biphoton over (w_S, w_I).

    Psi ~ exp(-(w_- - delta_omega)^2 sigma_cor^2 / 4 - (2 w_+ - omega_p)^2 sigma_coh^2)
    """
    cor = p.sigma_cor**2 / 4.0
    coh = p.sigma_coh**2
    A = 2.0 * np.array([[cor + coh, coh - cor], [coh - cor, cor + coh]], dtype=complex)
    b = np.array(
        [
            p.sigma_cor**2 * p.delta_omega / 2.0 + 2.0 * coh * p.omega_p,
            -p.sigma_cor**2 * p.delta_omega / 2.0 + 2.0 * coh * p.omega_p,
        ],
        dtype=complex,
    )
    return A, b


def build_biphoton(p: BiphotonParams) -> GaussianAmplitude:
    """Normalised time-domain biphoton over (signal-time, idler-time)."""
    A, b = time_domain_parameters(p)
    return make_state(A, b, [SIGNAL, IDLER])


# =============================================================================
#  Widths and entanglement
# =============================================================================


def rms_T(p: BiphotonParams) -> float:
    """rms duration of each photon"""
    return float(np.sqrt(p.sigma_coh**2 + p.sigma_cor**2 / 4.0))


def rms_W(p: BiphotonParams) -> float:
    """rms bandwidth of each photon"""
    return float(np.sqrt(1.0 / (16.0 * p.sigma_coh**2) + 1.0 / (4.0 * p.sigma_cor**2)))


def time_bandwidth(p: BiphotonParams) -> float:
    return rms_T(p) * rms_W(p)


def mu_A(p: BiphotonParams) -> float:
    """symplectic-eigenvalue form of the reduced-state width product"""
    ratio = p.sigma_coh**2 / p.sigma_cor**2
    return float(np.sqrt((ratio + 1.0 / (16.0 * ratio)) / 4.0 + 1.0 / 8.0))


def entanglement_entropy_log2(p: BiphotonParams) -> dict:
    """log2(2TW) together with mu_A, which must equal TW identically."""
    tw = time_bandwidth(p)
    mu = mu_A(p)
    if abs(mu - tw) > 1e-10 * tw:
        raise RuntimeError(f"mu_A = {mu!r} differs from TW = {tw!r}")
    return {"entropy_bits": float(np.log2(2.0 * tw)), "mu_A": mu, "TW": tw}


def entanglement_entropy_exact(p: BiphotonParams) -> dict:
    """Von Neumann entropy of the reduced Gaussian state.

    The reduced state is thermal-like with symplectic eigenvalue nu = 2TW, so its
    Schmidt coefficients are (1 - z) z^n with z = (nu - 1) / (nu + 1).
    """
    nu = 2.0 * time_bandwidth(p)
    plus = (nu + 1.0) / 2.0
    minus = (nu - 1.0) / 2.0
    entropy = plus * np.log2(plus)
    if minus > 0:
        entropy -= minus * np.log2(minus)
    return {
        "entropy_bits": float(entropy),
        "nu": float(nu),
        "z": float((nu - 1.0) / (nu + 1.0)),
        "participation_ratio": float(nu),
    }


# =============================================================================
#  Schmidt oracle
# =============================================================================


@dataclass(frozen=True)
class SchmidtSpectrum:
    eigenvalues: np.ndarray
    trace: float
    participation_ratio: float
    entropy_bits: float
    points: int
    half_span: float
    refinement_gap: float
    geometric_z: float
    fit_residual: float


def _grid_points(p: BiphotonParams, points: int | None) -> tuple[int, float]:
    T, W = rms_T(p), rms_W(p)
    half_span = config.SCHMIDT_HALF_SPAN_IN_T * T
    # conditional std of t_S at fixed t_I is 1/2W
    step = 1.0 / (2.0 * W * config.SCHMIDT_POINTS_PER_WIDTH)
    needed = int(np.ceil(2.0 * half_span / step))
    if points is None:
        points = max(config.SCHMIDT_DEFAULT_POINTS, needed)
    if points > config.SCHMIDT_MAX_POINTS:
        raise GridTooCoarse(
            f"{points} grid points needed (TW = {T * W:.4g}), cap is "
            f"{config.SCHMIDT_MAX_POINTS}"
        )
    if points < needed:
        raise GridTooCoarse(f"{points} grid points do not resolve 1/2W, need {needed}")
    return points, half_span


def _reduced_spectrum(state: GaussianAmplitude, points: int, half_span: float):
    grid, dt = np.linspace(-half_span, half_span, points, retstep=True)
    ts, ti = np.meshgrid(grid, grid, indexing="ij")
    psi = state.amplitude(np.column_stack([ts.ravel(), ti.ravel()])).reshape(
        points, points
    )
    rho = dt * dt * (psi @ psi.conj().T)
    eigs = linalg.eigh(rho, eigvals_only=True)
    return np.sort(eigs)[::-1]


def _geometric_fit(eigs: np.ndarray) -> tuple[float, float]:
    """fit log(lambda_n) = log(1 - z) + n log(z) on the resolved eigenvalues"""
    usable = eigs[eigs > 1e-10]
    if len(usable) < 2:
        return 0.0, 0.0
    n = np.arange(len(usable))
    slope, intercept = np.polyfit(n, np.log(usable), 1)
    residual = np.log(usable) - (slope * n + intercept)
    return float(np.exp(slope)), float(np.sqrt(np.mean(residual**2)))


def schmidt_spectrum_oracle(
    p: BiphotonParams, points: int | None = None
) -> SchmidtSpectrum:
    """Diagonalise the signal's reduced density matrix sampled on a grid.

    The grid is refined once (doubled, or halved when doubling would pass the
    point cap) and the change in the leading eigenvalues is reported.
    """
    points, half_span = _grid_points(p, points)
    state = build_biphoton(p)
    eigs = _reduced_spectrum(state, points, half_span)

    other = 2 * points if 2 * points <= config.SCHMIDT_MAX_POINTS else points // 2
    other_eigs = _reduced_spectrum(state, other, half_span)
    k = min(32, points, other)
    gap = float(np.max(np.abs(eigs[:k] - other_eigs[:k])))
    if gap > config.ORACLE_TOL:
        raise GridTooCoarse(f"eigenvalues moved by {gap:.3g} between {points} and {other} points")

    if eigs.min() < -1e-9:
        raise GridTooCoarse(f"negative eigenvalue {eigs.min():.3g}")
    positive = np.clip(eigs, 0.0, None)
    nonzero = positive[positive > 0]
    z, residual = _geometric_fit(positive)
    spectrum = SchmidtSpectrum(
        eigenvalues=positive,
        trace=float(np.sum(eigs)),
        participation_ratio=float(1.0 / np.sum(positive**2)),
        entropy_bits=float(-np.sum(nonzero * np.log2(nonzero))),
        points=points,
        half_span=half_span,
        refinement_gap=gap,
        geometric_z=z,
        fit_residual=residual,
    )
    logger.info(
        "Schmidt oracle: trace %.9f, PR %.6f (2TW = %.6f), refinement gap %.2e",
        spectrum.trace,
        spectrum.participation_ratio,
        2.0 * time_bandwidth(p),
        gap,
    )
    return spectrum


def entropy_comparison(p: BiphotonParams, points: int | None = None) -> dict:
    """log2(2TW), exact Gaussian entropy and grid oracle side by side"""
    approx = entanglement_entropy_log2(p)
    exact = entanglement_entropy_exact(p)
    oracle = schmidt_spectrum_oracle(p, points)
    return {
        "log2_bits": approx["entropy_bits"],
        "exact_bits": exact["entropy_bits"],
        "oracle_bits": oracle.entropy_bits,
        "log2_minus_oracle": approx["entropy_bits"] - oracle.entropy_bits,
        "exact_minus_oracle": exact["entropy_bits"] - oracle.entropy_bits,
        "participation_ratio": oracle.participation_ratio,
        "two_TW": 2.0 * approx["TW"],
        "trace": oracle.trace,
    }
