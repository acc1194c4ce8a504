"""M-photon GLM-like states and the Heisenberg-limited lidar built from them.

A GLM state puts all M photons at one common time (or frequency). It is not
normalisable, so each state here carries a Gaussian of width epsilon in the
directions orthogonal to the collective coordinate sum(x_m) / sqrt(M). The
collective direction keeps the unregularised width; results are extrapolated to
epsilon -> 0.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from scripts import config, utils
from scripts.bsi import PairSelector, apply_bsi, apply_bsi_dagger
from scripts.channel import ChannelParams, apply_idler_storage, apply_target_channel
from scripts.gaussian_state import (
    CoordLabel,
    GaussianAmplitude,
    MeasurementDensity,
    Rep,
    Role,
    compare,
    freq_shift,
    make_state,
    measurement_density,
    product_state,
    sample_density,
    time_shift,
    to_rep,
)
from scripts.montecarlo import CampaignResult, campaign_statistics

logger = logging.getLogger(__name__)


class InvalidGlmParams(ValueError):
    pass


class MismatchedM(ValueError):
    pass


class NonConvergent(RuntimeError):
    pass


@dataclass(frozen=True)
class GlmParams:
    M: int
    width: float
    rep: Rep
    epsilon: float | None = None
    carrier: float = 0.0

    def __post_init__(self):
        if not isinstance(self.M, (int, np.integer)) or not 1 <= self.M <= config.GLM_MAX_PHOTONS:
            raise InvalidGlmParams(
                f"M must be an integer in [1, {config.GLM_MAX_PHOTONS}], got {self.M}"
            )
        if not self.width > 0 or not np.isfinite(self.width):
            raise InvalidGlmParams(f"width must be positive, got {self.width}")
        object.__setattr__(self, "rep", Rep(self.rep))
        if self.epsilon is None:
            object.__setattr__(
                self, "epsilon", self.width * config.GLM_DEFAULT_EPSILON_FRACTION
            )
        if not self.epsilon > 0:
            raise InvalidGlmParams(f"epsilon must be positive, got {self.epsilon}")
        if self.epsilon > self.width / 10.0:
            logger.warning(
                "GLM epsilon %.4g exceeds width/10 (width %.4g)", self.epsilon, self.width
            )

    def with_epsilon(self, epsilon: float) -> "GlmParams":
        return GlmParams(self.M, self.width, self.rep, epsilon, self.carrier)


# =============================================================================
#  States
# =============================================================================


def glm_quadratic_form(g: GlmParams) -> np.ndarray:
    """1/(2 eps^2) on the difference subspace, 1/(2 M width^2) on the collective one"""
    ones = np.ones((g.M, g.M)) / g.M
    inner = 1.0 / (2.0 * g.epsilon**2)
    collective = 1.0 / (2.0 * g.M * g.width**2)
    return inner * np.eye(g.M) + ones * (collective - inner)


def build_glm(g: GlmParams, role: Role = Role.SIGNAL, first_id: int = 0) -> GaussianAmplitude:
    """Exchange-symmetric M-photon state with every photon centred on the carrier."""
    A = glm_quadratic_form(g)
    b = A @ np.full(g.M, g.carrier)
    labels = [CoordLabel(first_id + m, role, g.rep) for m in range(g.M)]
    return make_state(A, b, labels)


def collective_std(density: MeasurementDensity, weights: np.ndarray) -> float:
    """std of a linear estimator weights . x under the measurement density"""
    weights = np.asarray(weights, dtype=float)
    return float(np.sqrt(weights @ density.covariance @ weights))


# =============================================================================
#  Extrapolation
# =============================================================================


def epsilon_extrapolate(
    epsilons, rms_values, rms_se=None
) -> dict:
    """Fit rms(eps) = a + b eps^2 and report a as the eps -> 0 value.

    Successive differences, ordered from the largest epsilon down, must not grow by
    more than the sampling noise.
    """
    eps = np.asarray(epsilons, dtype=float)
    values = np.asarray(rms_values, dtype=float)
    se = np.zeros_like(values) if rms_se is None else np.asarray(rms_se, dtype=float)
    if len(eps) < 3:
        raise ValueError(f"extrapolation needs at least 3 epsilon values, got {len(eps)}")
    order = np.argsort(eps)[::-1]
    eps, values, se = eps[order], values[order], se[order]
    ratios = eps[1:] / eps[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6) or ratios[0] >= 1.0:
        raise ValueError(f"epsilon values must be distinct and geometrically spaced: {eps}")

    diffs = np.abs(np.diff(values))
    noise = config.SIGMA_LEVEL * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    for i in range(1, len(diffs)):
        if diffs[i] > diffs[i - 1] + noise[i] + config.STRUCTURAL_TOL * abs(values[i]):
            raise NonConvergent(
                f"rms differences grow as epsilon shrinks: {diffs.tolist()}"
            )

    weights = 1.0 / se if np.all(se > 0) else None
    slope, intercept = np.polyfit(eps**2, values, 1, w=weights)
    residual = values - (intercept + slope * eps**2)
    return {
        "extrapolated": float(intercept),
        "slope": float(slope),
        "residual": float(np.sqrt(np.mean(residual**2))),
        "epsilons": eps.tolist(),
        "values": values.tolist(),
    }


# =============================================================================
#  Monte Carlo helper
# =============================================================================


def _draw_linear_estimator(
    density: MeasurementDensity,
    weights: np.ndarray,
    offset,
    n_trials: int,
    seed: int,
    threads: int,
) -> np.ndarray:
    """One draw per stream; (k, n) weights give k estimators from the same draw."""
    def chunk(bounds):
        start, stop = bounds
        return np.array(
            [sample_density(density, seed, s) @ weights.T for s in range(start, stop)]
        )

    parts = utils.ordered_map(chunk, utils.chunk_ranges(n_trials, 2048), threads)
    return np.concatenate(parts) + offset


def _trial_records(columns: dict, photons: int) -> pd.DataFrame:
    """per-trial estimates; each trial transmits ``photons`` signal photons"""
    n = len(next(iter(columns.values())))
    return pd.DataFrame(
        {
            "stream": np.arange(n),
            **columns,
            "transmissions": np.full(n, photons, dtype=np.int64),
        }
    )


# =============================================================================
#  Direct GLM experiments
# =============================================================================


def direct_glm_delay_experiment(
    g: GlmParams, delta_t: float, n_trials: int, seed: int, threads: int = 1
) -> CampaignResult:
    """Delay every photon of a frequency-domain GLM state and average the arrival
    times."""
    if g.rep is not Rep.FREQUENCY:
        raise InvalidGlmParams("the delay experiment needs a frequency-domain GLM state")
    state = build_glm(g)
    for label in state.labels:
        state = time_shift(state, label, delta_t)
        state = to_rep(state, label, Rep.TIME)
    density = measurement_density(state)
    weights = np.full(g.M, 1.0 / g.M)
    estimates = _draw_linear_estimator(density, weights, 0.0, n_trials, seed, threads)
    result = campaign_statistics(
        estimates,
        delta_t,
        _trial_records({"delta_t_est_u": estimates}, g.M),
        names=("delta_t",),
    )
    result.bounds = {
        "analytic_delta_t": collective_std(density, weights),
        "heisenberg_delta_t": 1.0 / (2.0 * g.M * g.width),
    }
    result.diagnostics = {"M": g.M, "width": g.width, "epsilon": g.epsilon}
    return result


def direct_glm_doppler_experiment(
    g: GlmParams, delta_omega: float, n_trials: int, seed: int, threads: int = 1
) -> CampaignResult:
    """Doppler-shift every photon of a time-domain GLM state and average the
    measured frequencies."""
    if g.rep is not Rep.TIME:
        raise InvalidGlmParams("the Doppler experiment needs a time-domain GLM state")
    state = build_glm(g)
    for label in state.labels:
        state = freq_shift(state, label, delta_omega)
        state = to_rep(state, label, Rep.FREQUENCY)
    density = measurement_density(state)
    weights = np.full(g.M, 1.0 / g.M)
    estimates = _draw_linear_estimator(density, weights, 0.0, n_trials, seed, threads)
    result = campaign_statistics(
        estimates,
        delta_omega,
        _trial_records({"delta_omega_est_rad_per_u": estimates}, g.M),
        names=("delta_omega",),
    )
    result.bounds = {
        "analytic_delta_omega": collective_std(density, weights),
        "heisenberg_delta_omega": 1.0 / (2.0 * g.M * g.width),
    }
    result.diagnostics = {"M": g.M, "width": g.width, "epsilon": g.epsilon}
    # scales with T here, not W
    logger.info(
        "time-domain GLM Doppler rms %.6g against 1/2MT = %.6g",
        result.rms[0],
        result.bounds["heisenberg_delta_omega"],
    )
    return result


def split_glm_accuracies(M: int, T: float, W: float) -> dict:
    """M/2 photons in a frequency GLM for delay plus M/2 in a time GLM for Doppler."""
    if M < 2 or M % 2:
        raise InvalidGlmParams(f"the split scheme needs an even M >= 2, got {M}")
    half = M // 2
    return {
        "delta_t": 1.0 / (2.0 * half * W),
        "delta_omega": 1.0 / (2.0 * half * T),
        "nominal_delta_t": 1.0 / (4.0 * M * W),
        "nominal_delta_omega": 1.0 / (4.0 * M * T),
    }


# =============================================================================
#  Entangled Heisenberg-limited scheme
# =============================================================================


def _pairs(M: int) -> list[PairSelector]:
    return [
        PairSelector(
            CoordLabel(m, Role.SIGNAL, Rep.TIME), CoordLabel(M + m, Role.IDLER, Rep.TIME)
        )
        for m in range(M)
    ]


def hl_input_state(gS: GlmParams, gI: GlmParams) -> GaussianAmplitude:
    """time-domain signal GLM (ids 0..M-1) with frequency-domain idler GLM (M..2M-1)"""
    if gS.M != gI.M:
        raise MismatchedM(f"signal M = {gS.M} but idler M = {gI.M}")
    if gS.rep is not Rep.TIME or gI.rep is not Rep.FREQUENCY:
        raise InvalidGlmParams("signals must be time-domain and idlers frequency-domain")
    return product_state(
        build_glm(gS, Role.SIGNAL, 0), build_glm(gI, Role.IDLER, gS.M)
    )


def hl_pipeline(state: GaussianAmplitude, M: int, ch: ChannelParams) -> GaussianAmplitude:
    """B_SI^dagger on every pair, target channel and storage, then B_SI on every pair"""
    pairs = _pairs(M)
    for pair in pairs:
        state = apply_bsi_dagger(state, pair)
    for pair in pairs:
        state = apply_target_channel(state, pair.signal_coord, ch)
        state = apply_idler_storage(state, pair.idler_coord, ch.delta_t_i)
    for pair in pairs:
        state = apply_bsi(state, pair)
    return state


def hl_product_form(state: GaussianAmplitude, M: int, ch: ChannelParams) -> GaussianAmplitude:
    """the same transformation as independent displacements on every photon"""
    for pair in _pairs(M):
        state = freq_shift(state, pair.signal_coord, ch.delta_omega_s / 2.0)
        state = time_shift(state, pair.signal_coord, ch.delta_t_s + ch.delta_t_i)
        state = freq_shift(state, pair.idler_coord, ch.delta_omega_s)
        state = time_shift(
            state, pair.idler_coord, (ch.delta_t_s - ch.delta_t_i) / 2.0
        )
    return state


def _measurement_layout(state: GaussianAmplitude, M: int) -> GaussianAmplitude:
    for pair in _pairs(M):
        state = to_rep(state, pair.signal_coord, Rep.FREQUENCY)
        state = to_rep(state, pair.idler_coord, Rep.TIME)
    return state


def entangled_hl_experiment(
    gS: GlmParams,
    gI: GlmParams,
    ch: ChannelParams,
    n_trials: int,
    seed: int,
    threads: int = 1,
) -> CampaignResult:
    """Entangled M-pair scheme: collective Doppler from the signals, delay from the idlers.

    Estimators are (2/M) sum(w_m - w_ref) and (2/M) sum(t_m - t_ref) + delta_t_i, with
    the reference offsets read from the channel-free output. The explicit pipeline is
    compared against the product of single-photon displacements and the gap is kept
    in ``diagnostics["equivalence"]``.
    """
    M = gS.M
    source = hl_input_state(gS, gI)
    output = hl_pipeline(source, M, ch)
    equivalence = compare(output, hl_product_form(source, M, ch))

    density = measurement_density(_measurement_layout(output, M))
    reference = measurement_density(
        _measurement_layout(hl_pipeline(source, M, ChannelParams()), M)
    )
    signal_idx = np.arange(M)
    idler_idx = np.arange(M, 2 * M)

    w_weights = np.zeros(2 * M)
    w_weights[signal_idx] = 2.0 / M
    t_weights = np.zeros(2 * M)
    t_weights[idler_idx] = 2.0 / M
    w_offset = -w_weights @ reference.mean
    t_offset = -t_weights @ reference.mean + ch.delta_t_i

    estimates = _draw_linear_estimator(
        density,
        np.vstack([t_weights, w_weights]),
        np.array([t_offset, w_offset]),
        n_trials,
        seed,
        threads,
    )
    records = _trial_records(
        {
            "delta_t_est_u": estimates[:, 0],
            "delta_omega_est_rad_per_u": estimates[:, 1],
        },
        M,
    )
    result = campaign_statistics(
        estimates, np.array([ch.delta_t_s, ch.delta_omega_s]), records
    )
    result.bounds = {
        "analytic_delta_t": collective_std(density, t_weights),
        "analytic_delta_omega": collective_std(density, w_weights),
        "nominal_delta_t": 1.0 / (2.0 * M * gI.width),
        "nominal_delta_omega": 1.0 / (2.0 * M * gS.width),
    }
    result.diagnostics = {
        "M": M,
        "epsilon_signal": gS.epsilon,
        "epsilon_idler": gI.epsilon,
        "equivalence": equivalence,
    }
    return result


def equivalence_gap(result: CampaignResult) -> float:
    """largest (A, b) difference between the pipeline and the product form"""
    equivalence = result.diagnostics["equivalence"]
    return max(equivalence["max_dA"], equivalence["max_db"])


def _loglog_slope(M_values, rms_values) -> float:
    slope, _ = np.polyfit(np.log(M_values), np.log(rms_values), 1)
    return float(slope)


def hl_scan(
    T: float,
    W: float,
    M_values,
    epsilon_fractions,
    ch: ChannelParams,
    n_trials: int,
    seed: int,
    threads: int = 1,
) -> dict:
    """Run the entangled scheme over M and epsilon, extrapolate, and fit slopes.

    epsilon_fractions are taken relative to each state's own width. Both the Monte
    Carlo rms and the analytic propagated std of every run are extrapolated to
    epsilon -> 0, so the constant check compares like with like.
    """
    rows = []
    trials = []
    extrapolated = []
    for M in M_values:
        runs = []
        for fraction in epsilon_fractions:
            gS = GlmParams(M, T, Rep.TIME, fraction * T)
            gI = GlmParams(M, W, Rep.FREQUENCY, fraction * W)
            run = entangled_hl_experiment(gS, gI, ch, n_trials, seed, threads)
            runs.append(run)
            equivalence = run.diagnostics["equivalence"]
            rows.append(
                {
                    "M": M,
                    "epsilon_fraction": fraction,
                    "rms_delta_t": run.rms[0],
                    "rms_delta_t_se": run.rms_se[0],
                    "rms_delta_omega": run.rms[1],
                    "rms_delta_omega_se": run.rms_se[1],
                    "analytic_delta_t": run.bounds["analytic_delta_t"],
                    "analytic_delta_omega": run.bounds["analytic_delta_omega"],
                    "equivalence_dA": equivalence["max_dA"],
                    "equivalence_db": equivalence["max_db"],
                }
            )
            trials.append(run.records.assign(M=M, epsilon_fraction=fraction))

        limit = {"M": M}
        for i, name in enumerate(("delta_t", "delta_omega")):
            fit = epsilon_extrapolate(
                epsilon_fractions,
                [r.rms[i] for r in runs],
                [r.rms_se[i] for r in runs],
            )
            analytic = epsilon_extrapolate(
                epsilon_fractions, [r.bounds[f"analytic_{name}"] for r in runs]
            )
            limit[f"rms_{name}"] = fit["extrapolated"]
            limit[f"analytic_{name}"] = analytic["extrapolated"]
            limit[f"nominal_{name}"] = runs[0].bounds[f"nominal_{name}"]
        limit["equivalence_gap"] = max(equivalence_gap(r) for r in runs)
        extrapolated.append(limit)
        logger.info(
            "M = %d: rms delta_t %.6g, rms delta_omega %.6g", M,
            limit["rms_delta_t"], limit["rms_delta_omega"],
        )

    limits = pd.DataFrame(extrapolated)
    records = pd.concat(trials, ignore_index=True)
    leading = ["M", "epsilon_fraction"]
    return {
        "runs": pd.DataFrame(rows),
        "records": records[leading + [c for c in records.columns if c not in leading]],
        "extrapolated": limits,
        "slope_delta_t": _loglog_slope(limits["M"], limits["rms_delta_t"]),
        "slope_delta_omega": _loglog_slope(limits["M"], limits["rms_delta_omega"]),
    }
